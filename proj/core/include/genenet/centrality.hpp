// Node centrality measures over built graphs: degree, eigenvector (power
// iteration on the largest connected component), PageRank, and Brandes
// betweenness (exact or source-sampled), plus ranked top-k tables.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "genenet/graph.hpp"

namespace genenet {

struct CentralityScores {
  enum class Measure { Degree, Eigenvector, Pagerank, Betweenness };

  Measure measure = Measure::Degree;
  std::vector<double> scores;  // one per node

  // Parameter provenance; only the fields relevant to the measure are set.
  double damping = 0.0;
  double tol = 0.0;
  long max_iter = 0;
  long sample_count = -1;  // -1 = exact betweenness
  uint64_t seed = 0;
  long iterations_run = 0;
  double residual = 0.0;
};

std::string_view to_string(CentralityScores::Measure m);

// score(v) = number of incident edges, unnormalized.
CentralityScores degree_centrality(const SparseGraph& g);

// Power iteration on the adjacency operator of the largest connected
// component; zeros elsewhere; unit L2 norm. Throws on non-convergence,
// reporting the residual.
CentralityScores eigenvector_centrality(const SparseGraph& g, double tol = 1e-10,
                                        long max_iter = 1000);

// Undirected edges as two arcs. Nodes with no edges keep their own damped
// mass (dangling self-loop convention), so an isolated node scores exactly
// 1/n. Scores sum to 1.
CentralityScores pagerank(const SparseGraph& g, double damping = 0.85,
                          double tol = 1e-12, long max_iter = 200);

struct BetweennessOptions {
  bool exact = true;
  long sample_count = 0;  // sources drawn without replacement when !exact
  uint64_t seed = 0;
};

// Brandes' accumulation over unweighted shortest paths; each unordered pair
// counted once; unnormalized. Sampled mode scales by n / k.
CentralityScores betweenness(const SparseGraph& g,
                             const BetweennessOptions& opt = {});

struct RankedTable {
  CentralityScores::Measure measure;
  struct Entry {
    long rank;
    std::string node_id;
    double score;
  };
  std::vector<Entry> top;
  // Node-id groups that share a score represented in the top-k (reported
  // whenever a shared score would make the cutoff ambiguous).
  std::vector<std::vector<std::string>> ties;
};

// Deterministic ordering: score descending, node index ascending.
RankedTable rank_table(const CentralityScores& scores, const SparseGraph& g, long k);

void write_ranked_table_csv(const RankedTable& t, const std::string& path);
void write_ranked_table_json(const RankedTable& t, const CentralityScores& scores,
                             const std::string& path);
void write_scores_csv(const CentralityScores& scores, const SparseGraph& g,
                      const std::string& path);

}  // namespace genenet
