// Undirected sparse graph shared by the network construction, centrality
// and expression-group modules.

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace genenet {

struct GraphBuildMeta {
  std::string rule;          // "fisher_significance" | "hard_threshold" | other
  double alpha = 0.0;        // fisher case
  double rho_min = 0.0;      // hard-threshold case
  std::string sided;         // "two-sided" | "one-sided-positive"
  std::string source_label;  // cancer type or "all"
  long n_observations = 0;   // vector length each correlation was computed over
};

struct SparseGraph {
  enum class NodeKind { Patient, Gene };

  long n_nodes = 0;
  // Unique, self-loop free, u < v, sorted lexicographically.
  std::vector<std::pair<int32_t, int32_t>> edges;
  std::vector<std::string> node_ids;  // length n_nodes
  NodeKind node_kind = NodeKind::Gene;
  GraphBuildMeta build_meta;

  long n_edges() const { return static_cast<long>(edges.size()); }

  // Throws std::invalid_argument on self-loops, duplicates or bad endpoints.
  void validate() const;
};

// Compressed adjacency built once per graph for traversal-heavy algorithms.
struct Csr {
  std::vector<int64_t> offsets;   // n_nodes + 1
  std::vector<int32_t> neighbors; // 2 * n_edges, sorted per node

  long degree(long v) const { return static_cast<long>(offsets[v + 1] - offsets[v]); }
};

Csr build_csr(const SparseGraph& g);

// degree -> node count; counts sum to n_nodes.
std::map<long, long> degree_distribution(const SparseGraph& g);

long count_non_isolated(const SparseGraph& g);

// Component id per node, ids contiguous by first occurrence.
std::vector<int32_t> connected_components(const Csr& csr);

// Nodes of the largest connected component (ties broken by smallest
// contained node index).
std::vector<int32_t> largest_component(const Csr& csr);

// Edge-list CSV: header "source,target", one row per edge, node ids as labels.
void write_edge_list(const SparseGraph& g, const std::string& path);

// Rebuilds a graph from an edge-list CSV. Node set is the ids seen, in order
// of first appearance, optionally extended by a node file (one id per line)
// so isolated nodes survive the round trip.
SparseGraph read_edge_list(const std::string& path,
                           const std::string& nodes_path = "",
                           SparseGraph::NodeKind kind = SparseGraph::NodeKind::Gene);

void write_node_list(const SparseGraph& g, const std::string& path);

// GraphML with optional per-node string attribute (e.g. expression group).
void write_graphml(const SparseGraph& g, const std::string& path,
                   const std::string& node_attr_name = "",
                   const std::vector<std::string>* node_attr = nullptr);

void write_degree_histogram(const SparseGraph& g, const std::string& path);

}  // namespace genenet
