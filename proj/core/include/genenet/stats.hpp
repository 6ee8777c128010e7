// Small numeric helpers shared by the statistics modules.

#pragma once

#include <Eigen/Dense>
#include <span>

namespace genenet::stats {

double mean(std::span<const double> x);

// ddof = 0 gives the population variance, ddof = 1 the sample variance.
double variance(std::span<const double> x, int ddof = 0);

// Two-sided tail probability of a standard normal: P(|N(0,1)| >= |z|).
double normal_two_sided_p(double z);

// log(sum_i exp(x_i)) evaluated without overflow.
double log_sum_exp(const Eigen::VectorXd& x);

}  // namespace genenet::stats
