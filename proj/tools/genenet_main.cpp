// genenet command line: runs the gene-expression analysis pipeline end to
// end or stage by stage, plus standalone centrality over an edge-list CSV.

#include <CLI11.hpp>

#include <cstdio>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "genenet/centrality.hpp"
#include "genenet/graph.hpp"
#include "genenet/pipeline.hpp"

namespace {

using genenet::PipelineConfig;
using genenet::Stage;

// Dependency closure of one target stage, in canonical order.
std::vector<Stage> closed_stages(Stage target) {
  std::set<int> wanted;
  std::vector<Stage> work = {target};
  while (!work.empty()) {
    const Stage s = work.back();
    work.pop_back();
    if (!wanted.insert(static_cast<int>(s)).second) continue;
    for (Stage dep : genenet::stage_dependencies(s)) work.push_back(dep);
  }
  std::vector<Stage> out;
  for (Stage s : {Stage::Load, Stage::Reduce, Stage::Gmm, Stage::Net, Stage::Centrality,
                  Stage::Screen, Stage::Groups, Stage::Compare}) {
    if (wanted.count(static_cast<int>(s))) out.push_back(s);
  }
  return out;
}

struct CommonOpts {
  std::string config_path;
  std::optional<std::string> data, labels, out_dir;
  std::optional<int> threads;
  bool force = false;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", config_path, "JSON configuration file");
    cmd->add_option("--data", data, "expression data CSV");
    cmd->add_option("--labels", labels, "labels CSV");
    cmd->add_option("--out", out_dir, "output directory");
    cmd->add_option("--threads", threads, "worker thread count (0 = default)");
    cmd->add_flag("--force", force, "recompute stages even when cached");
  }

  PipelineConfig build() const {
    PipelineConfig cfg;
    if (!config_path.empty()) cfg = genenet::load_config(config_path);
    genenet::apply_env_overrides(cfg);
    if (data) cfg.data_path = *data;
    if (labels) cfg.labels_path = *labels;
    if (out_dir) cfg.output_dir = *out_dir;
    if (threads) cfg.threads = *threads;
    if (force) cfg.force = true;
    return cfg;
  }
};

int execute(PipelineConfig cfg, const std::vector<Stage>& stages) {
  cfg.stages = stages;
  genenet::RunManifest manifest;
  try {
    manifest = genenet::run(cfg);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  bool failed = false;
  for (const auto& s : manifest.stages) {
    std::printf("%-11s %-8s %8.2fs  %zu output(s)\n", s.name.c_str(), s.status.c_str(),
                s.wall_seconds, s.outputs.size());
    for (const auto& e : s.errors) std::printf("  ! %s\n", e.c_str());
    if (s.status == "failed") failed = true;
  }
  std::printf("manifest: %s/run_manifest.json\n", cfg.output_dir.c_str());
  return failed ? 2 : 0;
}

int run_standalone_centrality(const std::string& edges, const std::string& nodes,
                              const CommonOpts& common,
                              const std::vector<std::string>& measures, long top_k,
                              double damping, double tol, long max_iter,
                              const std::string& bw_mode, long samples, uint64_t seed) {
  PipelineConfig cfg;
  if (!common.config_path.empty()) cfg = genenet::load_config(common.config_path);
  genenet::apply_env_overrides(cfg);
  if (common.out_dir) cfg.output_dir = *common.out_dir;

  try {
    const genenet::SparseGraph g = genenet::read_edge_list(edges, nodes);
    std::filesystem::create_directories(cfg.output_dir);
    for (const auto& measure : measures) {
      genenet::CentralityScores scores;
      if (measure == "degree") {
        scores = genenet::degree_centrality(g);
      } else if (measure == "eigenvector") {
        scores = genenet::eigenvector_centrality(g, tol, max_iter);
      } else if (measure == "pagerank") {
        scores = genenet::pagerank(g, damping, tol, max_iter);
      } else if (measure == "betweenness") {
        genenet::BetweennessOptions opt;
        opt.exact = bw_mode == "exact";
        opt.sample_count = samples;
        opt.seed = seed;
        scores = genenet::betweenness(g, opt);
      } else {
        std::fprintf(stderr, "error: unknown measure '%s'\n", measure.c_str());
        return 1;
      }
      const auto table = genenet::rank_table(scores, g, top_k);
      const std::string stem = cfg.output_dir + "/centrality_import_" + measure;
      genenet::write_scores_csv(scores, g, stem + "_scores.csv");
      genenet::write_ranked_table_csv(table, stem + "_top.csv");
      genenet::write_ranked_table_json(table, scores, stem + "_top.json");
      std::printf("%s: wrote %s_{scores,top}.{csv,json}\n", measure.c_str(), stem.c_str());
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-cancer gene-expression analysis pipeline"};
  app.require_subcommand(1);

  CommonOpts common;

  // ---- validate --------------------------------------------------------
  std::string validate_config_path;
  auto* cmd_validate = app.add_subcommand("validate", "validate a configuration file");
  cmd_validate->add_option("--config", validate_config_path, "JSON configuration file")
      ->required();

  // ---- run / stage subcommands ----------------------------------------
  auto* cmd_run = app.add_subcommand("run", "run the configured stages");
  std::vector<std::string> run_stage_names;
  cmd_run->add_option("--stages", run_stage_names,
                      "stages to run (must include their dependencies)");
  common.attach(cmd_run);

  auto* cmd_load = app.add_subcommand("load", "load and validate the dataset");
  auto* cmd_reduce = app.add_subcommand("reduce", "PCA, t-SNE and hierarchical clustering");
  auto* cmd_gmm = app.add_subcommand("gmm", "fit the Gaussian mixture on the PCA projection");
  auto* cmd_net = app.add_subcommand("net", "build patient and gene correlation networks");
  auto* cmd_centrality = app.add_subcommand("centrality", "centrality measures and rankings");
  auto* cmd_screen = app.add_subcommand("screen", "per-gene multinomial logistic screening");
  auto* cmd_groups = app.add_subcommand("groups", "expression-level group assignment");
  auto* cmd_compare = app.add_subcommand("compare", "cross-type group conservation");
  for (auto* cmd : {cmd_load, cmd_reduce, cmd_gmm, cmd_net, cmd_centrality, cmd_screen,
                    cmd_groups, cmd_compare}) {
    common.attach(cmd);
  }

  // Frequently overridden knobs; everything else comes from the config file.
  std::optional<int> gmm_k, gmm_restarts;
  std::optional<uint64_t> gmm_seed;
  cmd_gmm->add_option("--k", gmm_k, "number of mixture components");
  cmd_gmm->add_option("--seed", gmm_seed, "base RNG seed");
  cmd_gmm->add_option("--restarts", gmm_restarts, "seeded restarts, best fit wins");

  std::optional<double> net_rho_min, net_alpha;
  cmd_net->add_option("--rho-min", net_rho_min, "gene network correlation threshold");
  cmd_net->add_option("--patient-alpha", net_alpha, "patient network significance level");

  std::optional<std::string> screen_baseline, screen_rule;
  std::optional<double> screen_alpha;
  cmd_screen->add_option("--baseline", screen_baseline, "baseline cancer type");
  cmd_screen->add_option("--alpha", screen_alpha, "significance level");
  cmd_screen->add_option("--rule", screen_rule, "all_contrasts|any_contrast");

  std::optional<std::vector<std::string>> group_types;
  cmd_groups->add_option("--types", group_types, "cancer types to group");
  cmd_compare->add_option("--types", group_types, "cancer types to compare");

  std::string cent_edges, cent_nodes;
  std::vector<std::string> cent_measures = {"degree", "eigenvector", "pagerank",
                                            "betweenness"};
  long cent_top_k = 5;
  double cent_damping = 0.85, cent_tol = 1e-10;
  long cent_max_iter = 2000, cent_samples = 256;
  std::string cent_bw_mode = "exact";
  uint64_t cent_seed = 1;
  cmd_centrality->add_option("--edges", cent_edges,
                             "standalone mode: edge-list CSV to analyze");
  cmd_centrality->add_option("--nodes", cent_nodes,
                             "standalone mode: node list (keeps isolated nodes)");
  cmd_centrality->add_option("--measures", cent_measures, "measures to compute");
  cmd_centrality->add_option("--top-k", cent_top_k, "ranked table size");
  cmd_centrality->add_option("--damping", cent_damping, "pagerank damping factor");
  cmd_centrality->add_option("--tol", cent_tol, "iteration tolerance");
  cmd_centrality->add_option("--max-iter", cent_max_iter, "iteration cap");
  cmd_centrality->add_option("--betweenness", cent_bw_mode, "exact|sampled");
  cmd_centrality->add_option("--samples", cent_samples, "betweenness source sample count");
  cmd_centrality->add_option("--seed", cent_seed, "betweenness sampling seed");

  CLI11_PARSE(app, argc, argv);

  if (cmd_validate->parsed()) {
    PipelineConfig cfg;
    try {
      cfg = genenet::load_config(validate_config_path);
    } catch (const std::exception& e) {
      std::fprintf(stderr, "invalid: %s\n", e.what());
      return 1;
    }
    genenet::apply_env_overrides(cfg);
    const auto problems = genenet::validate_config(cfg);
    if (problems.empty()) {
      std::printf("configuration is valid\n");
      return 0;
    }
    for (const auto& p : problems) std::printf("violation: %s\n", p.c_str());
    return 1;
  }

  PipelineConfig cfg;
  try {
    cfg = common.build();
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }

  if (cmd_run->parsed()) {
    std::vector<Stage> stages = cfg.stages;  // from config file, may be empty (= all)
    if (!run_stage_names.empty()) {
      stages.clear();
      for (const auto& name : run_stage_names) {
        const auto s = genenet::parse_stage(name);
        if (!s) {
          std::fprintf(stderr, "error: unknown stage '%s'\n", name.c_str());
          return 1;
        }
        stages.push_back(*s);
      }
    }
    return execute(std::move(cfg), stages);
  }
  if (cmd_load->parsed()) return execute(std::move(cfg), closed_stages(Stage::Load));
  if (cmd_reduce->parsed()) return execute(std::move(cfg), closed_stages(Stage::Reduce));
  if (cmd_gmm->parsed()) {
    if (gmm_k) cfg.gmm.k = *gmm_k;
    if (gmm_seed) cfg.gmm.seed = *gmm_seed;
    if (gmm_restarts) cfg.gmm.restarts = *gmm_restarts;
    return execute(std::move(cfg), closed_stages(Stage::Gmm));
  }
  if (cmd_net->parsed()) {
    if (net_rho_min) cfg.gene_net.rho_min = *net_rho_min;
    if (net_alpha) cfg.patient_net.alpha = *net_alpha;
    return execute(std::move(cfg), closed_stages(Stage::Net));
  }
  if (cmd_centrality->parsed()) {
    if (!cent_edges.empty()) {
      return run_standalone_centrality(cent_edges, cent_nodes, common, cent_measures,
                                       cent_top_k, cent_damping, cent_tol, cent_max_iter,
                                       cent_bw_mode, cent_samples, cent_seed);
    }
    cfg.centrality.measures = cent_measures;
    cfg.centrality.top_k = cent_top_k;
    cfg.centrality.damping = cent_damping;
    cfg.centrality.betweenness_mode = cent_bw_mode;
    cfg.centrality.sample_count = cent_samples;
    cfg.centrality.seed = cent_seed;
    return execute(std::move(cfg), closed_stages(Stage::Centrality));
  }
  if (cmd_screen->parsed()) {
    if (screen_baseline) cfg.screen.baseline = *screen_baseline;
    if (screen_alpha) cfg.screen.alpha = *screen_alpha;
    if (screen_rule) cfg.screen.rule = *screen_rule;
    return execute(std::move(cfg), closed_stages(Stage::Screen));
  }
  if (cmd_groups->parsed()) {
    if (group_types) cfg.groups.types = *group_types;
    return execute(std::move(cfg), closed_stages(Stage::Groups));
  }
  if (cmd_compare->parsed()) {
    if (group_types) cfg.groups.types = *group_types;
    return execute(std::move(cfg), closed_stages(Stage::Compare));
  }
  return 0;
}
