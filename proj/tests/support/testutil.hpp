// Shared test fixtures: temp directories, synthetic datasets, random graphs.

#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "genenet/expr.hpp"
#include "genenet/graph.hpp"

namespace testutil {

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    auto base = std::filesystem::temp_directory_path();
    for (int i = 0; i < 10000; ++i) {
      auto candidate = base / (tag + "_" + std::to_string(i));
      std::error_code ec;
      if (std::filesystem::create_directory(candidate, ec)) {
        path_ = candidate;
        return;
      }
    }
    throw std::runtime_error("could not create temp dir for " + tag);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string file(const std::string& name) const { return (path_ / name).string(); }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols,
                                     uint64_t seed, double lo = -1.0, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = u(rng);
  return m;
}

// Synthetic five-class expression matrix: per-gene base level plus a
// class-specific shift on a subset of genes, non-negative throughout.
inline genenet::ExpressionMatrix make_fixture(int per_class, int n_genes, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> base(2.0, 10.0);
  std::normal_distribution<double> noise(0.0, 0.4);

  genenet::ExpressionMatrix m;
  const int s = per_class * genenet::kCancerTypeCount;
  m.values.resize(s, n_genes);
  std::vector<double> gene_base(n_genes);
  for (int g = 0; g < n_genes; ++g) gene_base[g] = base(rng);

  int row = 0;
  for (genenet::CancerType t : genenet::all_cancer_types()) {
    const int ti = static_cast<int>(t);
    for (int i = 0; i < per_class; ++i, ++row) {
      m.sample_ids.push_back("sample_" + std::to_string(row));
      m.labels.push_back(t);
      for (int g = 0; g < n_genes; ++g) {
        // Every fifth gene is shifted for exactly one class, so screening,
        // grouping and correlation all have structure to find.
        double shift = 0.0;
        if (g % 5 == ti) shift = 3.0 + (g % 3);
        m.values(row, g) = std::max(0.0, gene_base[g] + shift + noise(rng));
      }
    }
  }
  for (int g = 0; g < n_genes; ++g) m.gene_ids.push_back("gene_" + std::to_string(g));
  return m;
}

inline genenet::SparseGraph random_graph(int n, double p, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  genenet::SparseGraph g;
  g.n_nodes = n;
  for (int v = 0; v < n; ++v) g.node_ids.push_back("n" + std::to_string(v));
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b)
      if (u(rng) < p) g.edges.emplace_back(a, b);
  return g;
}

inline genenet::SparseGraph path_graph(int n) {
  genenet::SparseGraph g;
  g.n_nodes = n;
  for (int v = 0; v < n; ++v) g.node_ids.push_back("n" + std::to_string(v));
  for (int v = 0; v + 1 < n; ++v) g.edges.emplace_back(v, v + 1);
  return g;
}

inline genenet::SparseGraph cycle_graph(int n) {
  genenet::SparseGraph g = path_graph(n);
  g.edges.emplace_back(0, n - 1);
  std::sort(g.edges.begin(), g.edges.end());
  return g;
}

inline genenet::SparseGraph complete_graph(int n) {
  genenet::SparseGraph g;
  g.n_nodes = n;
  for (int v = 0; v < n; ++v) g.node_ids.push_back("n" + std::to_string(v));
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b) g.edges.emplace_back(a, b);
  return g;
}

}  // namespace testutil
