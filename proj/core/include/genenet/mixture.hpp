// K-component Gaussian mixture with axis-aligned covariances, fit by EM.
// All densities are evaluated in log space; the fit is a pure, bitwise
// deterministic function of (points, K, seed, max_iter, tol, restarts) and
// does not depend on the input point order.

#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "genenet/cancer_type.hpp"

namespace genenet {

struct GmmModel {
  Eigen::VectorXd weights;    // K, sums to 1
  Eigen::MatrixXd means;      // K x d
  Eigen::MatrixXd variances;  // K x d, every entry >= the variance floor
  double log_likelihood = 0.0;
  long iterations = 0;
  bool converged = false;
  uint64_t seed = 0;  // seed of the winning restart
  std::vector<double> ll_trace;  // log-likelihood after each EM iteration

  int n_components() const { return static_cast<int>(weights.size()); }
  int dim() const { return static_cast<int>(means.cols()); }
};

struct GmmFitOptions {
  int max_iter = 500;
  double tol = 1e-7;   // stop when log-likelihood improves by less
  int restarts = 5;    // restart r is seeded with seed + r; best fit wins
};

GmmModel fit_gmm(const Eigen::MatrixXd& points, int k, uint64_t seed,
                 const GmmFitOptions& opt = {});

// Posterior component probabilities, rows normalized to 1.
Eigen::MatrixXd responsibilities(const GmmModel& model, const Eigen::MatrixXd& points);

// Optimal one-to-one component -> label assignment maximizing the total
// responsibility mass collected on each matched label.
std::vector<CancerType> match_components(const GmmModel& model,
                                         const std::vector<CancerType>& labels,
                                         const Eigen::MatrixXd& points);

void write_gmm_json(const GmmModel& model, const std::string& path);
GmmModel read_gmm_json(const std::string& path);

}  // namespace genenet
