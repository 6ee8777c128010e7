#include "genenet/stats.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace genenet::stats {

double mean(std::span<const double> x) {
  if (x.empty()) throw std::invalid_argument("mean of empty range");
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

double variance(std::span<const double> x, int ddof) {
  if (ddof != 0 && ddof != 1) throw std::invalid_argument("ddof must be 0 or 1");
  const auto n = static_cast<long>(x.size());
  if (n - ddof <= 0) throw std::invalid_argument("variance needs more observations than ddof");
  const double m = mean(x);
  double ss = 0.0;
  for (double v : x) {
    const double d = v - m;
    ss += d * d;
  }
  return ss / static_cast<double>(n - ddof);
}

double normal_two_sided_p(double z) {
  // 2 * (1 - Phi(|z|)) == erfc(|z| / sqrt(2))
  return std::erfc(std::abs(z) / std::sqrt(2.0));
}

double log_sum_exp(const Eigen::VectorXd& x) {
  if (x.size() == 0) return -std::numeric_limits<double>::infinity();
  const double m = x.maxCoeff();
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) s += std::exp(x[i] - m);
  return m + std::log(s);
}

}  // namespace genenet::stats
