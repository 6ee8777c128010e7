#include "genenet/pipeline.hpp"

#include <nlohmann/json.hpp>
#include <sys/resource.h>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>

#include "genenet/centrality.hpp"
#include "genenet/csv.hpp"
#include "genenet/genesel.hpp"
#include "genenet/graph.hpp"
#include "genenet/mixture.hpp"
#include "genenet/netbuild.hpp"
#include "genenet/pca.hpp"
#include "genenet/sha256.hpp"
#include "genenet/svg.hpp"
#include "genenet/tsne.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace genenet {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {
constexpr const char* kToolVersion = "genenet 0.1.0";
constexpr const char* kManifestName = "run_manifest.json";
}  // namespace

std::string_view to_string(Stage s) {
  switch (s) {
    case Stage::Load: return "load";
    case Stage::Reduce: return "reduce";
    case Stage::Gmm: return "gmm";
    case Stage::Net: return "net";
    case Stage::Centrality: return "centrality";
    case Stage::Screen: return "screen";
    case Stage::Groups: return "groups";
    case Stage::Compare: return "compare";
  }
  return "?";
}

std::optional<Stage> parse_stage(std::string_view name) {
  for (Stage s : {Stage::Load, Stage::Reduce, Stage::Gmm, Stage::Net, Stage::Centrality,
                  Stage::Screen, Stage::Groups, Stage::Compare}) {
    if (name == to_string(s)) return s;
  }
  return std::nullopt;
}

std::vector<Stage> stage_dependencies(Stage s) {
  switch (s) {
    case Stage::Load: return {};
    case Stage::Reduce: return {Stage::Load};
    case Stage::Gmm: return {Stage::Load, Stage::Reduce};
    case Stage::Net: return {Stage::Load};
    case Stage::Centrality: return {Stage::Load, Stage::Net};
    case Stage::Screen: return {Stage::Load};
    case Stage::Groups: return {Stage::Load, Stage::Screen};
    case Stage::Compare: return {Stage::Load, Stage::Screen, Stage::Groups};
  }
  return {};
}

namespace {

const std::vector<Stage>& all_stages() {
  static const std::vector<Stage> kAll = {Stage::Load,       Stage::Reduce, Stage::Gmm,
                                          Stage::Net,        Stage::Centrality,
                                          Stage::Screen,     Stage::Groups,
                                          Stage::Compare};
  return kAll;
}

json config_json(const PipelineConfig& c) {
  json j;
  j["input"] = {{"data", c.data_path}, {"labels", c.labels_path}};
  j["output_dir"] = c.output_dir;
  j["threads"] = c.threads;
  std::vector<std::string> names;
  for (Stage s : c.stages) names.emplace_back(to_string(s));
  j["stages"] = names;
  j["force"] = c.force;
  j["normalization"] = {{"mode", c.normalization.mode}, {"ddof", c.normalization.ddof}};
  j["pca"] = {{"dims", c.pca.dims},
              {"variance_dims", c.pca.variance_dims},
              {"svg", c.pca.svg}};
  j["tsne"] = {{"enabled", c.tsne.enabled},
               {"dim", c.tsne.dim},
               {"perplexity", c.tsne.perplexity},
               {"iterations", c.tsne.iterations},
               {"seed", c.tsne.seed}};
  j["hcluster"] = {{"enabled", c.hcluster.enabled},
                   {"linkage", c.hcluster.linkage},
                   {"cut_height", c.hcluster.cut_height}};
  j["gmm"] = {{"k", c.gmm.k},
              {"seed", c.gmm.seed},
              {"restarts", c.gmm.restarts},
              {"max_iter", c.gmm.max_iter},
              {"tol", c.gmm.tol}};
  j["patient_net"] = {{"per_type", c.patient_net.per_type},
                      {"pooled", c.patient_net.pooled},
                      {"alpha", c.patient_net.alpha},
                      {"sided", c.patient_net.sided}};
  j["gene_net"] = {{"rho_min", c.gene_net.rho_min},
                   {"sided", c.gene_net.sided},
                   {"tile", c.gene_net.tile},
                   {"graphml", c.gene_net.graphml}};
  j["centrality"] = {{"measures", c.centrality.measures},
                     {"top_k", c.centrality.top_k},
                     {"damping", c.centrality.damping},
                     {"eig_tol", c.centrality.eig_tol},
                     {"pr_tol", c.centrality.pr_tol},
                     {"max_iter", c.centrality.max_iter},
                     {"betweenness_mode", c.centrality.betweenness_mode},
                     {"sample_count", c.centrality.sample_count},
                     {"seed", c.centrality.seed},
                     {"patient_nets", c.centrality.patient_nets},
                     {"gene_nets", c.centrality.gene_nets}};
  j["screen"] = {{"baseline", c.screen.baseline},
                 {"alpha", c.screen.alpha},
                 {"rule", c.screen.rule}};
  j["groups"] = {{"types", c.groups.types},
                 {"bin_edges", c.groups.bin_edges},
                 {"use_selected_genes", c.groups.use_selected_genes},
                 {"max_clique_export", c.groups.max_clique_export}};
  return j;
}

void config_from_json(const json& j, PipelineConfig& c) {
  if (j.contains("input")) {
    c.data_path = j["input"].value("data", c.data_path);
    c.labels_path = j["input"].value("labels", c.labels_path);
  }
  c.output_dir = j.value("output_dir", c.output_dir);
  c.threads = j.value("threads", c.threads);
  if (j.contains("stages")) {
    c.stages.clear();
    for (const auto& name : j["stages"]) {
      auto s = parse_stage(name.get<std::string>());
      if (!s) throw std::invalid_argument("unknown stage: " + name.get<std::string>());
      c.stages.push_back(*s);
    }
  }
  c.force = j.value("force", c.force);
  if (j.contains("normalization")) {
    c.normalization.mode = j["normalization"].value("mode", c.normalization.mode);
    c.normalization.ddof = j["normalization"].value("ddof", c.normalization.ddof);
  }
  if (j.contains("pca")) {
    c.pca.dims = j["pca"].value("dims", c.pca.dims);
    c.pca.variance_dims = j["pca"].value("variance_dims", c.pca.variance_dims);
    c.pca.svg = j["pca"].value("svg", c.pca.svg);
  }
  if (j.contains("tsne")) {
    c.tsne.enabled = j["tsne"].value("enabled", c.tsne.enabled);
    c.tsne.dim = j["tsne"].value("dim", c.tsne.dim);
    c.tsne.perplexity = j["tsne"].value("perplexity", c.tsne.perplexity);
    c.tsne.iterations = j["tsne"].value("iterations", c.tsne.iterations);
    c.tsne.seed = j["tsne"].value("seed", c.tsne.seed);
  }
  if (j.contains("hcluster")) {
    c.hcluster.enabled = j["hcluster"].value("enabled", c.hcluster.enabled);
    c.hcluster.linkage = j["hcluster"].value("linkage", c.hcluster.linkage);
    c.hcluster.cut_height = j["hcluster"].value("cut_height", c.hcluster.cut_height);
  }
  if (j.contains("gmm")) {
    c.gmm.k = j["gmm"].value("k", c.gmm.k);
    c.gmm.seed = j["gmm"].value("seed", c.gmm.seed);
    c.gmm.restarts = j["gmm"].value("restarts", c.gmm.restarts);
    c.gmm.max_iter = j["gmm"].value("max_iter", c.gmm.max_iter);
    c.gmm.tol = j["gmm"].value("tol", c.gmm.tol);
  }
  if (j.contains("patient_net")) {
    c.patient_net.per_type = j["patient_net"].value("per_type", c.patient_net.per_type);
    c.patient_net.pooled = j["patient_net"].value("pooled", c.patient_net.pooled);
    c.patient_net.alpha = j["patient_net"].value("alpha", c.patient_net.alpha);
    c.patient_net.sided = j["patient_net"].value("sided", c.patient_net.sided);
  }
  if (j.contains("gene_net")) {
    c.gene_net.rho_min = j["gene_net"].value("rho_min", c.gene_net.rho_min);
    c.gene_net.sided = j["gene_net"].value("sided", c.gene_net.sided);
    c.gene_net.tile = j["gene_net"].value("tile", c.gene_net.tile);
    c.gene_net.graphml = j["gene_net"].value("graphml", c.gene_net.graphml);
  }
  if (j.contains("centrality")) {
    const auto& jc = j["centrality"];
    if (jc.contains("measures")) {
      c.centrality.measures = jc["measures"].get<std::vector<std::string>>();
    }
    c.centrality.top_k = jc.value("top_k", c.centrality.top_k);
    c.centrality.damping = jc.value("damping", c.centrality.damping);
    c.centrality.eig_tol = jc.value("eig_tol", c.centrality.eig_tol);
    c.centrality.pr_tol = jc.value("pr_tol", c.centrality.pr_tol);
    c.centrality.max_iter = jc.value("max_iter", c.centrality.max_iter);
    c.centrality.betweenness_mode =
        jc.value("betweenness_mode", c.centrality.betweenness_mode);
    c.centrality.sample_count = jc.value("sample_count", c.centrality.sample_count);
    c.centrality.seed = jc.value("seed", c.centrality.seed);
    c.centrality.patient_nets = jc.value("patient_nets", c.centrality.patient_nets);
    c.centrality.gene_nets = jc.value("gene_nets", c.centrality.gene_nets);
  }
  if (j.contains("screen")) {
    c.screen.baseline = j["screen"].value("baseline", c.screen.baseline);
    c.screen.alpha = j["screen"].value("alpha", c.screen.alpha);
    c.screen.rule = j["screen"].value("rule", c.screen.rule);
  }
  if (j.contains("groups")) {
    const auto& jg = j["groups"];
    if (jg.contains("types")) c.groups.types = jg["types"].get<std::vector<std::string>>();
    if (jg.contains("bin_edges")) {
      auto e = jg["bin_edges"].get<std::vector<double>>();
      if (e.size() != 4) throw std::invalid_argument("groups.bin_edges needs 4 values");
      std::copy(e.begin(), e.end(), c.groups.bin_edges.begin());
    }
    c.groups.use_selected_genes =
        jg.value("use_selected_genes", c.groups.use_selected_genes);
    c.groups.max_clique_export =
        jg.value("max_clique_export", c.groups.max_clique_export);
  }
}

std::optional<Linkage> parse_linkage(std::string_view s) {
  for (Linkage l : {Linkage::Ward, Linkage::Average, Linkage::Complete, Linkage::Single}) {
    if (s == to_string(l)) return l;
  }
  return std::nullopt;
}

}  // namespace

PipelineConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw std::runtime_error("config parse error in " + path + ": " + e.what());
  }
  PipelineConfig cfg;
  config_from_json(j, cfg);
  return cfg;
}

void apply_env_overrides(PipelineConfig& cfg) {
  if (const char* t = std::getenv("GENENET_THREADS")) {
    cfg.threads = std::atoi(t);
  }
  if (const char* d = std::getenv("GENENET_OUTPUT_DIR")) {
    cfg.output_dir = d;
  }
}

std::string config_to_json(const PipelineConfig& cfg) {
  return config_json(cfg).dump(2);
}

std::vector<std::string> validate_config(const PipelineConfig& cfg) {
  std::vector<std::string> problems;
  auto need = [&](bool ok, const std::string& msg) {
    if (!ok) problems.push_back(msg);
  };

  need(!cfg.data_path.empty(), "input.data path is empty");
  need(!cfg.labels_path.empty(), "input.labels path is empty");
  if (!cfg.data_path.empty() && !fs::exists(cfg.data_path)) {
    problems.push_back("input.data does not exist: " + cfg.data_path);
  }
  if (!cfg.labels_path.empty() && !fs::exists(cfg.labels_path)) {
    problems.push_back("input.labels does not exist: " + cfg.labels_path);
  }
  need(!cfg.output_dir.empty(), "output_dir is empty");
  need(cfg.threads >= 0, "threads must be >= 0");

  // Stage set must be dependency-closed: requesting a stage without the
  // stages it consumes is a configuration error, not something to paper over.
  const std::vector<Stage>& requested = cfg.stages.empty() ? all_stages() : cfg.stages;
  for (Stage s : requested) {
    for (Stage dep : stage_dependencies(s)) {
      if (std::find(requested.begin(), requested.end(), dep) == requested.end()) {
        problems.push_back(std::string("stage '") + std::string(to_string(s)) +
                           "' requires stage '" + std::string(to_string(dep)) + "'");
      }
    }
  }

  need(cfg.normalization.mode == "none" || cfg.normalization.mode == "center-columns" ||
           cfg.normalization.mode == "zscore-columns",
       "normalization.mode must be none|center-columns|zscore-columns");
  need(cfg.normalization.ddof == 0 || cfg.normalization.ddof == 1,
       "normalization.ddof must be 0 or 1");
  need(cfg.pca.dims >= 1, "pca.dims must be >= 1");
  need(cfg.pca.variance_dims >= 1, "pca.variance_dims must be >= 1");
  need(cfg.tsne.dim == 2 || cfg.tsne.dim == 3, "tsne.dim must be 2 or 3");
  need(cfg.tsne.perplexity > 1.0, "tsne.perplexity must be > 1");
  need(cfg.tsne.iterations >= 1, "tsne.iterations must be >= 1");
  need(parse_linkage(cfg.hcluster.linkage).has_value(),
       "hcluster.linkage must be ward|average|complete|single");
  need(cfg.gmm.k >= 1, "gmm.k must be >= 1");
  need(cfg.gmm.restarts >= 1, "gmm.restarts must be >= 1");
  need(cfg.gmm.max_iter >= 1, "gmm.max_iter must be >= 1");
  need(cfg.gmm.tol > 0.0, "gmm.tol must be > 0");
  need(cfg.patient_net.alpha > 0.0 && cfg.patient_net.alpha < 1.0,
       "patient_net.alpha must be in (0,1)");
  need(cfg.patient_net.sided == "two-sided" || cfg.patient_net.sided == "one-sided-positive",
       "patient_net.sided must be two-sided|one-sided-positive");
  need(cfg.gene_net.rho_min > 0.0 && cfg.gene_net.rho_min < 1.0,
       "gene_net.rho_min must be in (0,1)");
  need(cfg.gene_net.sided == "two-sided" || cfg.gene_net.sided == "one-sided-positive",
       "gene_net.sided must be two-sided|one-sided-positive");
  need(cfg.gene_net.tile >= 1, "gene_net.tile must be >= 1");
  for (const auto& m : cfg.centrality.measures) {
    need(m == "degree" || m == "eigenvector" || m == "pagerank" || m == "betweenness",
         "unknown centrality measure: " + m);
  }
  need(cfg.centrality.top_k >= 1, "centrality.top_k must be >= 1");
  need(cfg.centrality.damping > 0.0 && cfg.centrality.damping < 1.0,
       "centrality.damping must be in (0,1)");
  need(cfg.centrality.betweenness_mode == "exact" ||
           cfg.centrality.betweenness_mode == "sampled",
       "centrality.betweenness_mode must be exact|sampled");
  if (cfg.centrality.betweenness_mode == "sampled") {
    need(cfg.centrality.sample_count >= 1, "centrality.sample_count must be >= 1");
  }
  need(parse_cancer_type(cfg.screen.baseline).has_value(),
       "screen.baseline must be one of the five cancer types");
  need(cfg.screen.alpha > 0.0 && cfg.screen.alpha < 1.0, "screen.alpha must be in (0,1)");
  need(cfg.screen.rule == "all_contrasts" || cfg.screen.rule == "any_contrast",
       "screen.rule must be all_contrasts|any_contrast");
  for (const auto& t : cfg.groups.types) {
    need(parse_cancer_type(t).has_value(), "unknown cancer type in groups.types: " + t);
  }
  need(cfg.groups.types.size() >= 1, "groups.types must name at least one type");
  for (int i = 0; i + 1 < 4; ++i) {
    need(cfg.groups.bin_edges[i] < cfg.groups.bin_edges[i + 1],
         "groups.bin_edges must be strictly increasing");
  }
  return problems;
}

const StageRecord* RunManifest::find(const std::string& name) const {
  for (const auto& s : stages) {
    if (s.name == name) return &s;
  }
  return nullptr;
}

namespace {

json manifest_json(const RunManifest& m) {
  json j;
  j["tool_version"] = m.tool_version;
  j["config"] = json::parse(m.config_json);
  json stages = json::array();
  for (const auto& s : m.stages) {
    json outputs = json::array();
    for (const auto& [path, digest] : s.outputs) {
      outputs.push_back({{"path", path}, {"sha256", digest}});
    }
    stages.push_back({{"name", s.name},
                      {"status", s.status},
                      {"wall_seconds", s.wall_seconds},
                      {"peak_rss_kb", s.peak_rss_kb},
                      {"params_digest", s.params_digest},
                      {"outputs", outputs},
                      {"errors", s.errors}});
  }
  j["stages"] = stages;
  return j;
}

long peak_rss_kb() {
  rusage u{};
  getrusage(RUSAGE_SELF, &u);
  return u.ru_maxrss;
}

// Execution state handed from stage to stage. Absent in-memory products are
// re-read from the artifacts a cached stage left on disk.
struct RunState {
  PipelineConfig cfg;
  fs::path out;
  std::optional<ExpressionMatrix> matrix;
  std::optional<Eigen::MatrixXd> projection;  // pca.dims columns
  std::map<std::string, SparseGraph> nets;
  std::optional<SelectionReport> selection;
  std::map<std::string, GroupAssignment> assignments;

  std::vector<std::string> outputs;  // paths written by the current stage
  std::vector<std::string> errors;   // per-item failures of the current stage

  std::string path(const std::string& name) const { return (out / name).string(); }

  void add_output(const std::string& p) { outputs.push_back(p); }

  const ExpressionMatrix& need_matrix() {
    if (!matrix) throw std::runtime_error("expression matrix not loaded");
    return *matrix;
  }
};

std::vector<CancerType> configured_types(const std::vector<std::string>& names) {
  std::vector<CancerType> types;
  for (const auto& n : names) types.push_back(*parse_cancer_type(n));
  return types;
}

// ---- stage implementations -------------------------------------------------

void stage_load(RunState& st) {
  st.matrix = load_dataset(st.cfg.data_path, st.cfg.labels_path);
  NormalizationSpec spec;
  spec.ddof = st.cfg.normalization.ddof;
  if (st.cfg.normalization.mode == "center-columns") {
    spec.mode = NormalizationSpec::Mode::CenterColumns;
  } else if (st.cfg.normalization.mode == "zscore-columns") {
    spec.mode = NormalizationSpec::Mode::ZscoreColumns;
  }
  if (spec.mode != NormalizationSpec::Mode::None) {
    NormalizeResult norm = normalize(*st.matrix, spec);
    st.matrix = std::move(norm.matrix);
    const std::string data_out = st.path("normalized_data.csv");
    const std::string labels_out = st.path("normalized_labels.csv");
    save_dataset(*st.matrix, data_out, labels_out);
    st.add_output(data_out);
    st.add_output(labels_out);
  }
  const std::string sidecar = st.path("dataset_meta.json");
  write_sidecar(*st.matrix, spec, sidecar);
  st.add_output(sidecar);
}

void write_projection_csv(const ExpressionMatrix& m, const Eigen::MatrixXd& coords,
                          const std::string& value_prefix, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "sample_id,label";
  for (Eigen::Index c = 0; c < coords.cols(); ++c) out << ',' << value_prefix << (c + 1);
  out << '\n';
  for (Eigen::Index i = 0; i < coords.rows(); ++i) {
    out << m.sample_ids[i] << ',' << to_string(m.labels[i]);
    for (Eigen::Index c = 0; c < coords.cols(); ++c) {
      out << ',' << csv::format_double(coords(i, c));
    }
    out << '\n';
  }
}

std::pair<Eigen::MatrixXd, std::vector<CancerType>> read_projection_csv(
    const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty projection file: " + path);
  const auto header = csv::split_line(line);
  const long dims = static_cast<long>(header.size()) - 2;
  if (dims < 1) throw std::runtime_error("projection file has no coordinates: " + path);
  std::vector<std::array<double, 3>> rows;
  std::vector<CancerType> labels;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto fields = csv::split_line(line);
    auto t = parse_cancer_type(fields.at(1));
    if (!t) throw std::runtime_error("bad label in " + path);
    labels.push_back(*t);
    std::array<double, 3> coords{};
    for (long c = 0; c < std::min<long>(dims, 3); ++c) {
      csv::parse_double(fields.at(2 + c), coords[c]);
    }
    rows.push_back(coords);
  }
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), std::min<long>(dims, 3));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(i, c) = rows[i][c];
  return {m, labels};
}

void stage_reduce(RunState& st) {
  const ExpressionMatrix& m = st.need_matrix();
  const Eigen::Index d_max = std::min<Eigen::Index>(m.n_samples() - 1, m.n_genes());
  const int d = static_cast<int>(std::min<Eigen::Index>(
      std::max(st.cfg.pca.dims, st.cfg.pca.variance_dims), d_max));
  const PcaResult res = pca(m, d);
  const int keep = std::min(st.cfg.pca.dims, d);
  st.projection = res.projected.leftCols(keep);

  const std::string proj_path = st.path("pca_projection.csv");
  write_projection_csv(m, *st.projection, "pc", proj_path);
  st.add_output(proj_path);

  {
    const std::string var_path = st.path("pca_variance.csv");
    std::ofstream out(var_path);
    if (!out) throw std::runtime_error("cannot write " + var_path);
    out << "component,eigenvalue,explained_variance_fraction\n";
    for (int c = 0; c < d; ++c) {
      out << (c + 1) << ',' << csv::format_double(res.eigenvalues[c]) << ','
          << csv::format_double(res.explained_variance_fraction[c]) << '\n';
    }
    st.add_output(var_path);
  }
  if (st.cfg.pca.svg && keep >= 2) {
    const std::string svg_path = st.path("pca_scatter.svg");
    write_scatter_svg(*st.projection, m.labels, "PCA projection (pc1 vs pc2)", svg_path);
    st.add_output(svg_path);
  }

  if (st.cfg.tsne.enabled) {
    TsneParams params;
    params.dim = st.cfg.tsne.dim;
    params.perplexity = st.cfg.tsne.perplexity;
    params.iterations = st.cfg.tsne.iterations;
    params.seed = st.cfg.tsne.seed;
    const TsneResult emb = tsne(m.values, params);
    const std::string emb_path = st.path("tsne_embedding.csv");
    write_projection_csv(m, emb.embedding, "dim", emb_path);
    st.add_output(emb_path);
    const std::string meta_path = st.path("tsne_meta.json");
    json meta = {{"final_kl", emb.final_kl},
                 {"iterations_run", emb.iterations_run},
                 {"perplexity", params.perplexity},
                 {"seed", params.seed}};
    std::ofstream mo(meta_path);
    mo << meta.dump(2) << '\n';
    st.add_output(meta_path);
    const std::string svg_path = st.path("tsne_scatter.svg");
    write_scatter_svg(emb.embedding, m.labels, "t-SNE embedding", svg_path);
    st.add_output(svg_path);
  }

  if (st.cfg.hcluster.enabled) {
    const Dendrogram dend = hierarchical_cluster(m.values, *parse_linkage(st.cfg.hcluster.linkage));
    const std::string merge_path = st.path("hcluster_merges.csv");
    write_merge_table(dend, merge_path);
    st.add_output(merge_path);
    if (st.cfg.hcluster.cut_height >= 0.0) {
      const auto clusters = cut_dendrogram(dend, st.cfg.hcluster.cut_height);
      const std::string cut_path = st.path("hcluster_clusters.csv");
      std::ofstream out(cut_path);
      if (!out) throw std::runtime_error("cannot write " + cut_path);
      out << "sample_id,label,cluster\n";
      for (Eigen::Index i = 0; i < m.n_samples(); ++i) {
        out << m.sample_ids[i] << ',' << to_string(m.labels[i]) << ',' << clusters[i]
            << '\n';
      }
      st.add_output(cut_path);
    }
  }
}

void stage_gmm(RunState& st) {
  Eigen::MatrixXd points;
  std::vector<CancerType> labels;
  if (st.projection) {
    points = *st.projection;
    labels = st.need_matrix().labels;
  } else {
    std::tie(points, labels) = read_projection_csv(st.path("pca_projection.csv"));
  }

  GmmFitOptions opt;
  opt.max_iter = st.cfg.gmm.max_iter;
  opt.tol = st.cfg.gmm.tol;
  opt.restarts = st.cfg.gmm.restarts;
  const GmmModel model = fit_gmm(points, st.cfg.gmm.k, st.cfg.gmm.seed, opt);

  const std::string model_path = st.path("gmm_model.json");
  write_gmm_json(model, model_path);
  st.add_output(model_path);

  const Eigen::MatrixXd resp = responsibilities(model, points);
  {
    const std::string resp_path = st.path("gmm_responsibilities.csv");
    std::ofstream out(resp_path);
    if (!out) throw std::runtime_error("cannot write " + resp_path);
    out << "sample";
    for (int c = 0; c < model.n_components(); ++c) out << ",component_" << c;
    out << '\n';
    for (Eigen::Index i = 0; i < resp.rows(); ++i) {
      out << i;
      for (int c = 0; c < model.n_components(); ++c) {
        out << ',' << csv::format_double(resp(i, c));
      }
      out << '\n';
    }
    st.add_output(resp_path);
  }

  try {
    const auto mapping = match_components(model, labels, points);
    std::array<long, kCancerTypeCount> counts{};
    for (CancerType t : labels) counts[static_cast<int>(t)]++;
    const std::string map_path = st.path("gmm_component_map.csv");
    std::ofstream out(map_path);
    if (!out) throw std::runtime_error("cannot write " + map_path);
    out << "component,matched_label,fitted_weight,true_proportion\n";
    for (int c = 0; c < model.n_components(); ++c) {
      const double prop = static_cast<double>(counts[static_cast<int>(mapping[c])]) /
                          static_cast<double>(labels.size());
      out << c << ',' << to_string(mapping[c]) << ','
          << csv::format_double(model.weights[c]) << ',' << csv::format_double(prop)
          << '\n';
    }
    st.add_output(map_path);
  } catch (const std::exception& e) {
    st.errors.push_back(std::string("component matching skipped: ") + e.what());
  }
}

void write_net_outputs(RunState& st, const SparseGraph& g, const std::string& stem,
                       bool graphml) {
  const std::string edges = st.path(stem + "_edges.csv");
  write_edge_list(g, edges);
  st.add_output(edges);
  const std::string nodes = st.path(stem + "_nodes.csv");
  write_node_list(g, nodes);
  st.add_output(nodes);
  const std::string meta = st.path(stem + "_meta.json");
  write_build_meta(g, meta);
  st.add_output(meta);
  const std::string hist = st.path(stem + "_degree_hist.csv");
  write_degree_histogram(g, hist);
  st.add_output(hist);
  if (graphml) {
    const std::string gml = st.path(stem + ".graphml");
    write_graphml(g, gml);
    st.add_output(gml);
  }
}

void stage_net(RunState& st) {
  const ExpressionMatrix& m = st.need_matrix();
  const auto hist = m.label_histogram();

  const auto gene_sided = st.cfg.gene_net.sided == "two-sided"
                              ? EdgeRule::Sided::TwoSided
                              : EdgeRule::Sided::OneSidedPositive;
  const EdgeRule gene_rule = EdgeRule::hard_threshold(st.cfg.gene_net.rho_min, gene_sided);
  const auto patient_sided = st.cfg.patient_net.sided == "two-sided"
                                 ? EdgeRule::Sided::TwoSided
                                 : EdgeRule::Sided::OneSidedPositive;
  const EdgeRule patient_rule = EdgeRule::fisher(st.cfg.patient_net.alpha, patient_sided);

  for (CancerType t : all_cancer_types()) {
    if (hist[static_cast<int>(t)] == 0) continue;
    const std::string label(to_string(t));
    try {
      const ExpressionMatrix sub = subset_by_label(m, t);
      SparseGraph g = build_correlation_graph(sub, CorrelationAxis::Genes, gene_rule,
                                              label, st.cfg.gene_net.tile);
      write_net_outputs(st, g, "net_gene_" + label, st.cfg.gene_net.graphml);
      st.nets["gene_" + label] = std::move(g);
    } catch (const std::exception& e) {
      st.errors.push_back("gene net " + label + ": " + e.what());
    }
    if (!st.cfg.patient_net.per_type) continue;
    try {
      const ExpressionMatrix sub = subset_by_label(m, t);
      const CorrelationMatrix cm = correlation_matrix(sub, CorrelationAxis::Patients, label);
      SparseGraph g = build_graph(cm, patient_rule);
      write_net_outputs(st, g, "net_patient_" + label, true);
      st.nets["patient_" + label] = std::move(g);
    } catch (const std::exception& e) {
      st.errors.push_back("patient net " + label + ": " + e.what());
    }
  }

  if (st.cfg.patient_net.pooled) {
    try {
      const CorrelationMatrix cm = correlation_matrix(m, CorrelationAxis::Patients, "all");
      SparseGraph g = build_graph(cm, patient_rule);
      write_net_outputs(st, g, "net_patient_all", true);
      st.nets["patient_all"] = std::move(g);
    } catch (const std::exception& e) {
      st.errors.push_back(std::string("pooled patient net: ") + e.what());
    }
  }
  if (st.nets.empty()) throw std::runtime_error("no network could be built");
}

std::vector<std::string> centrality_net_keys(const RunState& st) {
  std::vector<std::string> keys;
  for (CancerType t : all_cancer_types()) {
    const std::string label(to_string(t));
    if (st.cfg.centrality.gene_nets) keys.push_back("gene_" + label);
    if (st.cfg.centrality.patient_nets && st.cfg.patient_net.per_type) {
      keys.push_back("patient_" + label);
    }
  }
  if (st.cfg.centrality.patient_nets && st.cfg.patient_net.pooled) {
    keys.push_back("patient_all");
  }
  return keys;
}

void stage_centrality(RunState& st) {
  for (const std::string& key : centrality_net_keys(st)) {
    const SparseGraph* g = nullptr;
    SparseGraph loaded;
    auto it = st.nets.find(key);
    if (it != st.nets.end()) {
      g = &it->second;
    } else {
      const std::string edges = st.path("net_" + key + "_edges.csv");
      const std::string nodes = st.path("net_" + key + "_nodes.csv");
      if (!fs::exists(edges) || !fs::exists(nodes)) continue;  // net stage skipped it
      loaded = read_edge_list(edges, nodes,
                              key.rfind("gene_", 0) == 0 ? SparseGraph::NodeKind::Gene
                                                         : SparseGraph::NodeKind::Patient);
      g = &loaded;
    }
    for (const std::string& measure : st.cfg.centrality.measures) {
      try {
        CentralityScores scores;
        if (measure == "degree") {
          scores = degree_centrality(*g);
        } else if (measure == "eigenvector") {
          scores = eigenvector_centrality(*g, st.cfg.centrality.eig_tol,
                                          st.cfg.centrality.max_iter);
        } else if (measure == "pagerank") {
          scores = pagerank(*g, st.cfg.centrality.damping, st.cfg.centrality.pr_tol,
                            st.cfg.centrality.max_iter);
        } else {
          BetweennessOptions opt;
          opt.exact = st.cfg.centrality.betweenness_mode == "exact";
          opt.sample_count = std::min<long>(st.cfg.centrality.sample_count, g->n_nodes);
          opt.seed = st.cfg.centrality.seed;
          scores = betweenness(*g, opt);
        }
        const std::string stem = "centrality_" + key + "_" + measure;
        const std::string scores_path = st.path(stem + "_scores.csv");
        write_scores_csv(scores, *g, scores_path);
        st.add_output(scores_path);
        const RankedTable table = rank_table(scores, *g, st.cfg.centrality.top_k);
        const std::string csv_path = st.path(stem + "_top.csv");
        write_ranked_table_csv(table, csv_path);
        st.add_output(csv_path);
        const std::string json_path = st.path(stem + "_top.json");
        write_ranked_table_json(table, scores, json_path);
        st.add_output(json_path);
      } catch (const std::exception& e) {
        st.errors.push_back(key + " " + measure + ": " + e.what());
      }
    }
  }
}

void stage_screen(RunState& st) {
  const ExpressionMatrix& m = st.need_matrix();
  const CancerType baseline = *parse_cancer_type(st.cfg.screen.baseline);
  const auto results = screen_all(m, baseline);
  const std::string results_path = st.path("screen_results.csv");
  write_screen_results(results, results_path);
  st.add_output(results_path);

  const SelectionRule rule = st.cfg.screen.rule == "any_contrast"
                                 ? SelectionRule::AnyContrast
                                 : SelectionRule::AllContrasts;
  st.selection = select_genes(results, st.cfg.screen.alpha, rule);
  const std::string manhattan_path = st.path("manhattan.csv");
  manhattan_export(*st.selection, manhattan_path);
  st.add_output(manhattan_path);
  const std::string selection_path = st.path("selection.json");
  write_selection_json(*st.selection, selection_path);
  st.add_output(selection_path);
}

std::vector<std::string> read_selected_ids(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  json j;
  in >> j;
  return j.at("selected_gene_ids").get<std::vector<std::string>>();
}

// Restrict the matrix to a gene subset, preserving input gene order.
ExpressionMatrix restrict_genes(const ExpressionMatrix& m,
                                const std::vector<std::string>& keep) {
  std::map<std::string, Eigen::Index> index;
  for (Eigen::Index j = 0; j < m.n_genes(); ++j) index[m.gene_ids[j]] = j;
  ExpressionMatrix out;
  out.sample_ids = m.sample_ids;
  out.labels = m.labels;
  out.values.resize(m.n_samples(), static_cast<Eigen::Index>(keep.size()));
  out.gene_ids.reserve(keep.size());
  Eigen::Index c = 0;
  for (const auto& id : keep) {
    auto it = index.find(id);
    if (it == index.end()) throw std::runtime_error("selected gene not in matrix: " + id);
    out.values.col(c++) = m.values.col(it->second);
    out.gene_ids.push_back(id);
  }
  return out;
}

void stage_groups(RunState& st) {
  const ExpressionMatrix& full = st.need_matrix();
  ExpressionMatrix restricted;
  const ExpressionMatrix* m = &full;
  if (st.cfg.groups.use_selected_genes) {
    std::vector<std::string> ids;
    if (st.selection) {
      ids = st.selection->selected_gene_ids;
    } else {
      ids = read_selected_ids(st.path("selection.json"));
    }
    if (ids.empty()) {
      st.errors.push_back("selection is empty; grouping all genes instead");
    } else {
      restricted = restrict_genes(full, ids);
      m = &restricted;
    }
  }

  for (CancerType t : configured_types(st.cfg.groups.types)) {
    const std::string label(to_string(t));
    try {
      const auto stats = group_statistic(*m, t);
      const GroupAssignment a = assign_groups(stats, m->gene_ids, t, st.cfg.groups.bin_edges);
      const GroupGraph gg = build_group_graph(a);
      const std::string csv_path = st.path("groups_" + label + ".csv");
      write_group_assignment(a, csv_path);
      st.add_output(csv_path);
      const std::string gml_path = st.path("group_graph_" + label + ".graphml");
      gg.write_graphml(gml_path, st.cfg.groups.max_clique_export);
      st.add_output(gml_path);
      json summary = json::array();
      for (const auto& c : gg.component_summary) {
        summary.push_back({{"group", std::string(1, c.group)},
                           {"members", c.members},
                           {"components", c.components},
                           {"largest", c.largest}});
      }
      const std::string sum_path = st.path("group_summary_" + label + ".json");
      std::ofstream out(sum_path);
      out << summary.dump(2) << '\n';
      st.add_output(sum_path);
      st.assignments[label] = a;
    } catch (const std::exception& e) {
      st.errors.push_back("groups " + label + ": " + e.what());
    }
  }
  if (st.assignments.empty()) throw std::runtime_error("no group assignment succeeded");
}

GroupAssignment read_group_assignment(const std::string& path, CancerType t,
                                      const std::array<double, 4>& edges) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  GroupAssignment a;
  a.cancer_type = t;
  a.bin_edges = edges;
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto fields = csv::split_line(line);
    a.gene_ids.push_back(fields.at(0));
    a.groups.push_back(fields.at(1).at(0));
  }
  return a;
}

void stage_compare(RunState& st) {
  const auto types = configured_types(st.cfg.groups.types);
  for (size_t i = 0; i < types.size(); ++i) {
    for (size_t j = i + 1; j < types.size(); ++j) {
      const std::string l1(to_string(types[i]));
      const std::string l2(to_string(types[j]));
      try {
        auto fetch = [&](const std::string& label, CancerType t) {
          auto it = st.assignments.find(label);
          if (it != st.assignments.end()) return it->second;
          return read_group_assignment(st.path("groups_" + label + ".csv"), t,
                                       st.cfg.groups.bin_edges);
        };
        const GroupAssignment a1 = fetch(l1, types[i]);
        const GroupAssignment a2 = fetch(l2, types[j]);
        const ConservationReport report = compare_grouping(a1, a2);
        const std::string path = st.path("conservation_" + l1 + "_vs_" + l2 + ".json");
        write_conservation_json(report, l1, l2, path);
        st.add_output(path);
      } catch (const std::exception& e) {
        st.errors.push_back("compare " + l1 + "/" + l2 + ": " + e.what());
      }
    }
  }
}

// ---- orchestration ----------------------------------------------------------

json stage_params(const PipelineConfig& cfg, Stage s) {
  const json full = config_json(cfg);
  json j;
  switch (s) {
    case Stage::Load:
      j["input"] = full["input"];
      j["normalization"] = full["normalization"];
      break;
    case Stage::Reduce:
      j["pca"] = full["pca"];
      j["tsne"] = full["tsne"];
      j["hcluster"] = full["hcluster"];
      break;
    case Stage::Gmm: j["gmm"] = full["gmm"]; break;
    case Stage::Net:
      j["patient_net"] = full["patient_net"];
      j["gene_net"] = full["gene_net"];
      break;
    case Stage::Centrality: j["centrality"] = full["centrality"]; break;
    case Stage::Screen: j["screen"] = full["screen"]; break;
    case Stage::Groups: j["groups"] = full["groups"]; break;
    case Stage::Compare: j["groups"] = full["groups"]; break;
  }
  return j;
}

std::string stage_digest(const PipelineConfig& cfg, Stage s,
                         const std::map<Stage, std::string>& upstream) {
  std::string material = stage_params(cfg, s).dump();
  if (s == Stage::Load) {
    // The inputs are part of the stage identity.
    material += sha256_file_hex(cfg.data_path);
    material += sha256_file_hex(cfg.labels_path);
  }
  for (Stage dep : stage_dependencies(s)) {
    material += upstream.at(dep);
  }
  return sha256_hex(material);
}

bool cache_hit(const RunManifest* prev, const std::string& name,
               const std::string& digest, StageRecord& record) {
  if (prev == nullptr) return false;
  const StageRecord* old = prev->find(name);
  if (old == nullptr || old->params_digest != digest) return false;
  if (old->status != "ok" && old->status != "cached" && old->status != "partial") {
    return false;
  }
  for (const auto& [path, file_digest] : old->outputs) {
    if (!fs::exists(path)) return false;
    if (sha256_file_hex(path) != file_digest) return false;
  }
  record.outputs = old->outputs;
  record.errors = old->errors;
  record.status = "cached";
  return true;
}

}  // namespace

RunManifest run(const PipelineConfig& cfg) {
  const auto problems = validate_config(cfg);
  if (!problems.empty()) {
    std::string msg = "invalid pipeline configuration:";
    for (const auto& p : problems) msg += "\n  - " + p;
    throw std::invalid_argument(msg);
  }

#ifdef _OPENMP
  if (cfg.threads > 0) omp_set_num_threads(cfg.threads);
#endif

  fs::create_directories(cfg.output_dir);

  // Previous manifest enables the digest-based stage cache.
  std::optional<RunManifest> prev;
  const std::string manifest_path = (fs::path(cfg.output_dir) / kManifestName).string();
  if (fs::exists(manifest_path)) {
    try {
      prev = read_manifest(manifest_path);
    } catch (const std::exception&) {
      prev.reset();  // unreadable manifest: rebuild everything
    }
  }

  std::vector<Stage> requested = cfg.stages.empty() ? all_stages() : cfg.stages;

  RunState st;
  st.cfg = cfg;
  st.out = cfg.output_dir;

  RunManifest manifest;
  manifest.tool_version = kToolVersion;
  manifest.config_json = config_to_json(cfg);

  std::map<Stage, std::string> digests;
  for (Stage s : all_stages()) {
    if (std::find(requested.begin(), requested.end(), s) == requested.end()) continue;
    StageRecord record;
    record.name = std::string(to_string(s));
    record.params_digest = stage_digest(cfg, s, digests);
    digests[s] = record.params_digest;

    const auto t0 = std::chrono::steady_clock::now();
    const bool hit = !cfg.force && cache_hit(prev ? &*prev : nullptr, record.name,
                                             record.params_digest, record);
    const bool needs_matrix_anyway = s == Stage::Load;
    if (!hit || needs_matrix_anyway) {
      st.outputs.clear();
      st.errors.clear();
      try {
        switch (s) {
          case Stage::Load: stage_load(st); break;
          case Stage::Reduce: stage_reduce(st); break;
          case Stage::Gmm: stage_gmm(st); break;
          case Stage::Net: stage_net(st); break;
          case Stage::Centrality: stage_centrality(st); break;
          case Stage::Screen: stage_screen(st); break;
          case Stage::Groups: stage_groups(st); break;
          case Stage::Compare: stage_compare(st); break;
        }
        if (!hit) {
          record.status = st.errors.empty() ? "ok" : "partial";
          record.errors = st.errors;
          for (const auto& path : st.outputs) {
            record.outputs.emplace_back(path, sha256_file_hex(path));
          }
        }
      } catch (const std::exception& e) {
        record.status = "failed";
        record.errors = st.errors;
        record.errors.push_back(e.what());
        for (const auto& path : st.outputs) {
          if (fs::exists(path)) record.outputs.emplace_back(path, sha256_file_hex(path));
        }
      }
    }
    const auto t1 = std::chrono::steady_clock::now();
    record.wall_seconds = std::chrono::duration<double>(t1 - t0).count();
    record.peak_rss_kb = peak_rss_kb();
    manifest.stages.push_back(std::move(record));

    // A failed load makes everything downstream meaningless.
    if (manifest.stages.back().status == "failed" && s == Stage::Load) break;
  }

  write_manifest(manifest, manifest_path);
  return manifest;
}

void write_manifest(const RunManifest& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << manifest_json(m).dump(2) << '\n';
}

RunManifest read_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  json j;
  in >> j;
  RunManifest m;
  m.tool_version = j.value("tool_version", "");
  m.config_json = j.at("config").dump(2);
  for (const auto& js : j.at("stages")) {
    StageRecord r;
    r.name = js.at("name").get<std::string>();
    r.status = js.at("status").get<std::string>();
    r.wall_seconds = js.value("wall_seconds", 0.0);
    r.peak_rss_kb = js.value("peak_rss_kb", 0L);
    r.params_digest = js.value("params_digest", "");
    if (js.contains("outputs")) {
      for (const auto& jo : js["outputs"]) {
        r.outputs.emplace_back(jo.at("path").get<std::string>(),
                               jo.at("sha256").get<std::string>());
      }
    }
    if (js.contains("errors")) r.errors = js["errors"].get<std::vector<std::string>>();
    m.stages.push_back(std::move(r));
  }
  return m;
}

}  // namespace genenet
