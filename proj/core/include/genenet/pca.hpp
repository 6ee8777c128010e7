// PCA via singular value decomposition of the column-centered matrix.

#pragma once

#include <Eigen/Dense>

#include "genenet/expr.hpp"

namespace genenet {

struct PcaResult {
  Eigen::MatrixXd components;  // G x d, orthonormal columns
  Eigen::MatrixXd projected;   // S x d, centered(X) * components
  Eigen::VectorXd eigenvalues; // d, non-increasing (population covariance)
  Eigen::VectorXd explained_variance_fraction;  // d, sums to <= 1
};

// Keeps the d directions of maximal variance. Each component is sign-fixed
// so its largest-magnitude coordinate is positive, making output stable
// across runs and platforms.
PcaResult pca(const Eigen::MatrixXd& values, int d);

inline PcaResult pca(const ExpressionMatrix& m, int d) { return pca(m.values, d); }

}  // namespace genenet
