#include "genenet/pca.hpp"

#include <cmath>
#include <stdexcept>

namespace genenet {

PcaResult pca(const Eigen::MatrixXd& values, int d) {
  const Eigen::Index s = values.rows();
  const Eigen::Index g = values.cols();
  if (s < 2) throw std::invalid_argument("pca needs at least 2 samples");
  const Eigen::Index d_max = std::min<Eigen::Index>(s - 1, g);
  if (d < 1 || d > d_max) {
    throw std::invalid_argument("pca: d must be in [1, min(S-1, G)] = [1, " +
                                std::to_string(d_max) + "]");
  }

  Eigen::MatrixXd centered = values.rowwise() - values.colwise().mean();
  const double total_variance = centered.squaredNorm() / static_cast<double>(s);

  Eigen::BDCSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinV);

  PcaResult res;
  res.components = svd.matrixV().leftCols(d);
  res.eigenvalues.resize(d);
  for (int i = 0; i < d; ++i) {
    const double sv = svd.singularValues()[i];
    res.eigenvalues[i] = sv * sv / static_cast<double>(s);
  }

  // Sign convention: largest-magnitude coordinate of each component positive.
  for (int i = 0; i < d; ++i) {
    Eigen::Index arg = 0;
    res.components.col(i).cwiseAbs().maxCoeff(&arg);
    if (res.components(arg, i) < 0.0) res.components.col(i) = -res.components.col(i);
  }

  res.projected = centered * res.components;
  res.explained_variance_fraction =
      total_variance > 0.0 ? (res.eigenvalues / total_variance).eval()
                           : Eigen::VectorXd::Zero(d).eval();
  return res;
}

}  // namespace genenet
