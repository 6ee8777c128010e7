// Exact (non-tree-approximated) t-SNE. Gaussian conditionals with per-point
// bandwidth matched to the target perplexity by bisection; Student-t kernel
// with one degree of freedom in the embedding.

#pragma once

#include <Eigen/Dense>
#include <cstdint>

namespace genenet {

struct TsneParams {
  int dim = 2;              // 2 or 3
  double perplexity = 30.0; // must satisfy 1 < perplexity < S
  int iterations = 1000;
  uint64_t seed = 0;
  // Reference-implementation schedule: exaggerate P by 12 for the first
  // quarter of the iterations, momentum 0.5 during that phase then 0.8,
  // learning rate S / 12, adaptive per-parameter gains.
  double exaggeration = 12.0;
  double momentum_early = 0.5;
  double momentum_late = 0.8;
  double learning_rate = 0.0;  // 0 = auto (S / exaggeration)
};

struct TsneResult {
  Eigen::MatrixXd embedding;  // S x dim
  double final_kl = 0.0;
  long iterations_run = 0;
};

TsneResult tsne(const Eigen::MatrixXd& points, const TsneParams& params);

// Exposed pieces of the pipeline (also used by the gradient checks).

// Symmetrized joint probabilities P from squared pairwise distances. Each
// conditional matches the target perplexity within 1e-4; a point whose
// distance row is all zeros gets a uniform conditional.
Eigen::MatrixXd tsne_joint_probabilities(const Eigen::MatrixXd& sq_dists,
                                         double perplexity);

// KL(P || Q(Y)); grad may be null. The analytic gradient is
// 4 * sum_j (p_ij - q_ij) * w_ij * (y_i - y_j), w the Student-t kernel.
double tsne_kl_and_gradient(const Eigen::MatrixXd& p, const Eigen::MatrixXd& y,
                            Eigen::MatrixXd* grad);

Eigen::MatrixXd squared_distance_matrix(const Eigen::MatrixXd& points);

}  // namespace genenet
