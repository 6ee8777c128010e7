#include "genenet/tsne.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>

namespace genenet {

Eigen::MatrixXd squared_distance_matrix(const Eigen::MatrixXd& points) {
  const Eigen::Index s = points.rows();
  const Eigen::VectorXd sq = points.rowwise().squaredNorm();
  Eigen::MatrixXd d = sq.replicate(1, s) + sq.transpose().replicate(s, 1) -
                      2.0 * (points * points.transpose());
  d = d.cwiseMax(0.0);  // clamp the tiny negatives cancellation produces
  d.diagonal().setZero();
  return d;
}

namespace {

// Entropy (nats) and conditional row for a given precision beta.
double conditional_row(const Eigen::MatrixXd& sq_dists, Eigen::Index i, double beta,
                       Eigen::VectorXd& row) {
  const Eigen::Index s = sq_dists.rows();
  double sum_p = 0.0;
  double sum_dp = 0.0;
  for (Eigen::Index j = 0; j < s; ++j) {
    if (j == i) {
      row[j] = 0.0;
      continue;
    }
    const double p = std::exp(-beta * sq_dists(i, j));
    row[j] = p;
    sum_p += p;
    sum_dp += sq_dists(i, j) * p;
  }
  if (sum_p <= 0.0) {
    row.setZero();
    return -1.0;  // signals an unusable beta (all mass underflowed)
  }
  row /= sum_p;
  return std::log(sum_p) + beta * sum_dp / sum_p;
}

}  // namespace

Eigen::MatrixXd tsne_joint_probabilities(const Eigen::MatrixXd& sq_dists,
                                         double perplexity) {
  const Eigen::Index s = sq_dists.rows();
  if (s < 2) throw std::invalid_argument("t-SNE needs at least 2 points");
  if (!(perplexity > 1.0 && perplexity < static_cast<double>(s))) {
    throw std::invalid_argument("perplexity must satisfy 1 < perplexity < S");
  }

  Eigen::MatrixXd cond = Eigen::MatrixXd::Zero(s, s);
  Eigen::VectorXd row(s);
  const double target_h = std::log(perplexity);

  for (Eigen::Index i = 0; i < s; ++i) {
    // A point at zero distance from every other point has no usable scale;
    // give it a uniform conditional.
    double max_d = 0.0;
    for (Eigen::Index j = 0; j < s; ++j) {
      if (j != i) max_d = std::max(max_d, sq_dists(i, j));
    }
    if (max_d == 0.0) {
      cond.row(i).setConstant(1.0 / static_cast<double>(s - 1));
      cond(i, i) = 0.0;
      continue;
    }

    double beta = 1.0, beta_lo = 0.0;
    double beta_hi = std::numeric_limits<double>::infinity();
    for (int it = 0; it < 200; ++it) {
      const double h = conditional_row(sq_dists, i, beta, row);
      if (h < 0.0) {  // underflow: beta far too large
        beta_hi = beta;
        beta = 0.5 * (beta_lo + beta);
        continue;
      }
      if (std::abs(std::exp(h) - perplexity) <= 1e-4) break;
      if (h > target_h) {  // too spread out: raise beta
        beta_lo = beta;
        beta = std::isinf(beta_hi) ? beta * 2.0 : 0.5 * (beta + beta_hi);
      } else {
        beta_hi = beta;
        beta = 0.5 * (beta_lo + beta);
      }
    }
    if (row.sum() <= 0.0) conditional_row(sq_dists, i, beta, row);
    cond.row(i) = row.transpose();
  }

  Eigen::MatrixXd p = (cond + cond.transpose()) / (2.0 * static_cast<double>(s));
  return p;
}

double tsne_kl_and_gradient(const Eigen::MatrixXd& p, const Eigen::MatrixXd& y,
                            Eigen::MatrixXd* grad) {
  const Eigen::Index s = y.rows();
  Eigen::MatrixXd w(s, s);
  double sum_w = 0.0;
  for (Eigen::Index i = 0; i < s; ++i) {
    w(i, i) = 0.0;
    for (Eigen::Index j = i + 1; j < s; ++j) {
      const double wij = 1.0 / (1.0 + (y.row(i) - y.row(j)).squaredNorm());
      w(i, j) = wij;
      w(j, i) = wij;
      sum_w += 2.0 * wij;
    }
  }

  double kl = 0.0;
  for (Eigen::Index i = 0; i < s; ++i) {
    for (Eigen::Index j = 0; j < s; ++j) {
      if (i == j || p(i, j) <= 0.0) continue;
      const double q = w(i, j) / sum_w;
      kl += p(i, j) * std::log(p(i, j) / q);
    }
  }

  if (grad != nullptr) {
    grad->setZero(s, y.cols());
    for (Eigen::Index i = 0; i < s; ++i) {
      for (Eigen::Index j = 0; j < s; ++j) {
        if (i == j) continue;
        const double coeff = 4.0 * (p(i, j) - w(i, j) / sum_w) * w(i, j);
        grad->row(i) += coeff * (y.row(i) - y.row(j));
      }
    }
  }
  return kl;
}

TsneResult tsne(const Eigen::MatrixXd& points, const TsneParams& params) {
  const Eigen::Index s = points.rows();
  if (params.dim != 2 && params.dim != 3) {
    throw std::invalid_argument("t-SNE embedding dimension must be 2 or 3");
  }
  if (params.iterations < 1) throw std::invalid_argument("iterations must be >= 1");

  const Eigen::MatrixXd sq_dists = squared_distance_matrix(points);
  const Eigen::MatrixXd p_plain = tsne_joint_probabilities(sq_dists, params.perplexity);

  std::mt19937_64 rng(params.seed);
  std::normal_distribution<double> noise(0.0, 1e-4);
  Eigen::MatrixXd y(s, params.dim);
  for (Eigen::Index i = 0; i < s; ++i)
    for (int c = 0; c < params.dim; ++c) y(i, c) = noise(rng);

  const int exaggerated_iters = params.iterations / 4;
  const double lr = params.learning_rate > 0.0
                        ? params.learning_rate
                        : static_cast<double>(s) / params.exaggeration;

  Eigen::MatrixXd update = Eigen::MatrixXd::Zero(s, params.dim);
  Eigen::MatrixXd gains = Eigen::MatrixXd::Ones(s, params.dim);
  Eigen::MatrixXd grad(s, params.dim);

  for (int it = 1; it <= params.iterations; ++it) {
    const bool exaggerate = it <= exaggerated_iters;
    const double momentum = exaggerate ? params.momentum_early : params.momentum_late;
    if (exaggerate) {
      tsne_kl_and_gradient(params.exaggeration * p_plain, y, &grad);
    } else {
      tsne_kl_and_gradient(p_plain, y, &grad);
    }
    if (!grad.allFinite()) {
      throw std::runtime_error("t-SNE gradient became non-finite at iteration " +
                               std::to_string(it));
    }
    for (Eigen::Index i = 0; i < s; ++i) {
      for (int c = 0; c < params.dim; ++c) {
        const bool same_sign = (grad(i, c) > 0.0) == (update(i, c) > 0.0);
        gains(i, c) = same_sign ? std::max(gains(i, c) * 0.8, 0.01) : gains(i, c) + 0.2;
        update(i, c) = momentum * update(i, c) - lr * gains(i, c) * grad(i, c);
      }
    }
    y += update;
    y.rowwise() -= y.colwise().mean().eval();
  }

  TsneResult res;
  res.embedding = y;
  res.iterations_run = params.iterations;
  res.final_kl = tsne_kl_and_gradient(p_plain, y, nullptr);
  if (!res.embedding.allFinite()) {
    throw std::runtime_error("t-SNE produced a non-finite embedding");
  }
  return res;
}

}  // namespace genenet
