// End-to-end pipeline: a single configuration drives load -> reduce ->
// gmm -> net -> centrality -> screen -> groups -> compare, writing every
// table/figure-data file under one run directory with a manifest at its
// root. Completed stages are cached by content digest and skipped on
// re-runs unless forced.

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "genenet/exprgroup.hpp"
#include "genenet/hcluster.hpp"

namespace genenet {

enum class Stage { Load, Reduce, Gmm, Net, Centrality, Screen, Groups, Compare };

std::string_view to_string(Stage s);
std::optional<Stage> parse_stage(std::string_view name);

// Stages a stage needs before it can run.
std::vector<Stage> stage_dependencies(Stage s);

struct PipelineConfig {
  std::string data_path;
  std::string labels_path;
  std::string output_dir = "genenet_out";
  int threads = 0;  // 0 = library/runtime default
  std::vector<Stage> stages;  // must be dependency-closed; empty = all
  bool force = false;

  struct {
    std::string mode = "none";  // none | center-columns | zscore-columns
    int ddof = 0;
  } normalization;

  struct {
    int dims = 2;           // projection written for downstream use
    int variance_dims = 10; // spectrum length in the variance table
    bool svg = true;
  } pca;

  struct {
    bool enabled = true;
    int dim = 2;
    double perplexity = 30.0;
    int iterations = 1000;
    uint64_t seed = 42;
  } tsne;

  struct {
    bool enabled = true;
    std::string linkage = "ward";
    double cut_height = -1.0;  // < 0: emit merges only
  } hcluster;

  struct {
    int k = 5;
    uint64_t seed = 7;
    int restarts = 5;
    int max_iter = 500;
    double tol = 1e-7;
  } gmm;

  struct {
    bool per_type = true;
    bool pooled = false;
    double alpha = 0.05;
    std::string sided = "two-sided";
  } patient_net;

  struct {
    double rho_min = 0.8;
    std::string sided = "one-sided-positive";
    long tile = 2048;
    bool graphml = true;
  } gene_net;

  struct {
    std::vector<std::string> measures = {"degree", "eigenvector", "pagerank",
                                         "betweenness"};
    long top_k = 5;
    double damping = 0.85;
    double eig_tol = 1e-10;
    double pr_tol = 1e-12;
    long max_iter = 2000;
    std::string betweenness_mode = "exact";  // exact | sampled
    long sample_count = 256;
    uint64_t seed = 1;
    bool patient_nets = true;
    bool gene_nets = true;
  } centrality;

  struct {
    std::string baseline = "BRCA";
    double alpha = 0.005;
    std::string rule = "all_contrasts";  // all_contrasts | any_contrast
  } screen;

  struct {
    std::vector<std::string> types = {"LUAD", "PRAD"};
    std::array<double, 4> bin_edges = kDefaultGroupEdges;
    bool use_selected_genes = true;
    long max_clique_export = 2000;
  } groups;
};

PipelineConfig load_config(const std::string& path);    // defaults <- file
void apply_env_overrides(PipelineConfig& cfg);          // GENENET_THREADS, GENENET_OUTPUT_DIR
std::string config_to_json(const PipelineConfig& cfg);  // effective snapshot

// Every problem found, empty when the config is runnable.
std::vector<std::string> validate_config(const PipelineConfig& cfg);

struct StageRecord {
  std::string name;
  std::string status;  // ok | cached | partial | failed
  double wall_seconds = 0.0;
  long peak_rss_kb = 0;  // process high-water mark at stage end
  std::string params_digest;
  std::vector<std::pair<std::string, std::string>> outputs;  // path, sha256
  std::vector<std::string> errors;
};

struct RunManifest {
  std::string tool_version;
  std::string config_json;
  std::vector<StageRecord> stages;

  const StageRecord* find(const std::string& name) const;
};

// Executes the configured stages in dependency order. Throws
// std::invalid_argument (with every violation listed) if the config is
// invalid; individual per-cancer-type failures inside a stage are collected
// into the manifest instead of aborting the run.
RunManifest run(const PipelineConfig& cfg);

void write_manifest(const RunManifest& m, const std::string& path);
RunManifest read_manifest(const std::string& path);

}  // namespace genenet
