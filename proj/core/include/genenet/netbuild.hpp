// Correlation network construction: Pearson matrices over patients or genes,
// Fisher-transform significance gating, hard-threshold gating, and a tiled
// streaming builder that never materializes the full gene-gene matrix.

#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "genenet/expr.hpp"
#include "genenet/graph.hpp"

namespace genenet {

enum class CorrelationAxis { Patients, Genes };

struct CorrelationMatrix {
  Eigen::MatrixXd values;  // N x N, symmetric, entries in [-1, 1]
  CorrelationAxis axis = CorrelationAxis::Genes;
  std::string source_label;        // cancer type or "all"
  long n_observations = 0;         // length of each correlated vector
  std::vector<int32_t> degenerate; // zero-variance vectors (rows forced to 0)
  std::vector<std::string> ids;    // node identity for graph building

  long size() const { return values.rows(); }
};

CorrelationMatrix correlation_matrix(const ExpressionMatrix& m, CorrelationAxis axis,
                                     const std::string& source_label = "all");

struct FisherResult {
  double z = 0.0;
  double p = 1.0;
  bool saturated = false;  // |rho| >= 1 was clamped to 1 - 1e-15
};

// z = atanh(rho); p is the two-sided normal tail of z / SE with
// SE = 1 / sqrt(n_observations - 3).
FisherResult fisher_transform(double rho, long n_observations);

struct EdgeRule {
  enum class Kind { FisherSignificance, HardThreshold };
  enum class Sided { TwoSided, OneSidedPositive };

  Kind kind = Kind::HardThreshold;
  Sided sided = Sided::OneSidedPositive;
  double alpha = 0.0;    // fisher case, in (0,1)
  double rho_min = 0.0;  // threshold case, in (0,1)

  static EdgeRule fisher(double alpha, Sided sided = Sided::TwoSided);
  static EdgeRule hard_threshold(double rho_min, Sided sided = Sided::OneSidedPositive);

  bool passes(double rho, long n_observations) const;
  void validate() const;
};

SparseGraph build_graph(const CorrelationMatrix& cm, const EdgeRule& rule);

// Fused correlate -> threshold path. Processes the correlation matrix in
// tile_size x tile_size blocks so the 20k x 20k gene case stays well under
// 4 GB; produces exactly the same graph as build_graph(correlation_matrix(...)).
SparseGraph build_correlation_graph(const ExpressionMatrix& m, CorrelationAxis axis,
                                    const EdgeRule& rule,
                                    const std::string& source_label = "all",
                                    long tile_size = 2048);

void write_build_meta(const SparseGraph& g, const std::string& path);

}  // namespace genenet
