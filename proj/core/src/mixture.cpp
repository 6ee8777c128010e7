#include "genenet/mixture.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

#include "genenet/stats.hpp"

namespace genenet {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

// Point order must not leak into the fit: everything downstream of this
// permutation (seeding, reductions) sees points in lexicographic order.
std::vector<Eigen::Index> lexicographic_order(const Eigen::MatrixXd& pts) {
  std::vector<Eigen::Index> idx(pts.rows());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](Eigen::Index a, Eigen::Index b) {
    for (Eigen::Index c = 0; c < pts.cols(); ++c) {
      if (pts(a, c) != pts(b, c)) return pts(a, c) < pts(b, c);
    }
    return false;
  });
  return idx;
}

// k-means++ seeding followed by a single assignment pass.
void init_params(const Eigen::MatrixXd& pts, int k, uint64_t seed,
                 const Eigen::VectorXd& floor_var, Eigen::VectorXd& weights,
                 Eigen::MatrixXd& means, Eigen::MatrixXd& vars) {
  const Eigen::Index s = pts.rows();
  const Eigen::Index d = pts.cols();
  std::mt19937_64 rng(seed);

  std::vector<Eigen::Index> centers;
  std::uniform_int_distribution<Eigen::Index> first(0, s - 1);
  centers.push_back(first(rng));
  Eigen::VectorXd dist2 = (pts.rowwise() - pts.row(centers[0])).rowwise().squaredNorm();
  while (static_cast<int>(centers.size()) < k) {
    const double total = dist2.sum();
    Eigen::Index chosen;
    if (total <= 0.0) {
      // All remaining mass is on already-chosen points; fall back to uniform.
      chosen = first(rng);
    } else {
      std::uniform_real_distribution<double> u(0.0, total);
      double target = u(rng);
      chosen = s - 1;
      for (Eigen::Index i = 0; i < s; ++i) {
        target -= dist2[i];
        if (target <= 0.0) {
          chosen = i;
          break;
        }
      }
    }
    centers.push_back(chosen);
    dist2 = dist2.cwiseMin(
        (pts.rowwise() - pts.row(chosen)).rowwise().squaredNorm().eval());
  }

  means.resize(k, d);
  for (int c = 0; c < k; ++c) means.row(c) = pts.row(centers[c]);

  std::vector<int> assign(s);
  std::vector<long> count(k, 0);
  for (Eigen::Index i = 0; i < s; ++i) {
    int best = 0;
    double best_d = (pts.row(i) - means.row(0)).squaredNorm();
    for (int c = 1; c < k; ++c) {
      const double dd = (pts.row(i) - means.row(c)).squaredNorm();
      if (dd < best_d) {
        best_d = dd;
        best = c;
      }
    }
    assign[i] = best;
    count[best]++;
  }

  weights.resize(k);
  vars.resize(k, d);
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(k, d);
  Eigen::MatrixXd sum2 = Eigen::MatrixXd::Zero(k, d);
  for (Eigen::Index i = 0; i < s; ++i) {
    sum.row(assign[i]) += pts.row(i);
    sum2.row(assign[i]) += pts.row(i).cwiseProduct(pts.row(i));
  }
  for (int c = 0; c < k; ++c) {
    if (count[c] > 0) {
      means.row(c) = sum.row(c) / count[c];
      vars.row(c) = sum2.row(c) / count[c] -
                    means.row(c).cwiseProduct(means.row(c));
      weights[c] = static_cast<double>(count[c]) / static_cast<double>(s);
    } else {
      // Duplicate seed point left this cluster empty; keep the seed mean.
      vars.row(c).setZero();
      weights[c] = 1.0 / static_cast<double>(s);
    }
    vars.row(c) = vars.row(c).cwiseMax(floor_var.transpose());
  }
  weights /= weights.sum();
}

// Log joint log(pi_k) + log N(x_i; mu_k, var_k) for every (i, k).
Eigen::MatrixXd log_joint(const Eigen::MatrixXd& pts, const Eigen::VectorXd& weights,
                          const Eigen::MatrixXd& means, const Eigen::MatrixXd& vars) {
  const Eigen::Index s = pts.rows();
  const int k = static_cast<int>(weights.size());
  const Eigen::Index d = pts.cols();
  Eigen::MatrixXd lj(s, k);
  for (int c = 0; c < k; ++c) {
    double log_norm = -0.5 * d * kLog2Pi;
    for (Eigen::Index a = 0; a < d; ++a) log_norm -= 0.5 * std::log(vars(c, a));
    const double log_w = weights[c] > 0.0 ? std::log(weights[c])
                                          : -std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < s; ++i) {
      double q = 0.0;
      for (Eigen::Index a = 0; a < d; ++a) {
        const double diff = pts(i, a) - means(c, a);
        q += diff * diff / vars(c, a);
      }
      lj(i, c) = log_w + log_norm - 0.5 * q;
    }
  }
  return lj;
}

struct EmRun {
  Eigen::VectorXd weights;
  Eigen::MatrixXd means;
  Eigen::MatrixXd vars;
  double ll = -std::numeric_limits<double>::infinity();
  long iterations = 0;
  bool converged = false;
  std::vector<double> ll_trace;
};

EmRun run_em(const Eigen::MatrixXd& pts, int k, uint64_t seed,
             const Eigen::VectorXd& floor_var, const GmmFitOptions& opt) {
  const Eigen::Index s = pts.rows();
  EmRun run;
  init_params(pts, k, seed, floor_var, run.weights, run.means, run.vars);

  double prev_ll = -std::numeric_limits<double>::infinity();
  for (int it = 1; it <= opt.max_iter; ++it) {
    Eigen::MatrixXd lj = log_joint(pts, run.weights, run.means, run.vars);
    double ll = 0.0;
    Eigen::MatrixXd resp(s, k);
    for (Eigen::Index i = 0; i < s; ++i) {
      const double lse = stats::log_sum_exp(lj.row(i).transpose());
      ll += lse;
      for (int c = 0; c < k; ++c) resp(i, c) = std::exp(lj(i, c) - lse);
    }
    run.ll = ll;
    run.ll_trace.push_back(ll);
    run.iterations = it;
    if (ll - prev_ll < opt.tol && it > 1) {
      run.converged = true;
      break;
    }
    prev_ll = ll;

    const Eigen::VectorXd nk = resp.colwise().sum();
    for (int c = 0; c < k; ++c) {
      if (nk[c] <= 0.0) continue;  // component lost all mass; keep parameters
      run.means.row(c) = (resp.col(c).transpose() * pts) / nk[c];
      Eigen::RowVectorXd m2 = Eigen::RowVectorXd::Zero(pts.cols());
      for (Eigen::Index i = 0; i < s; ++i) {
        const Eigen::RowVectorXd diff = pts.row(i) - run.means.row(c);
        m2 += resp(i, c) * diff.cwiseProduct(diff);
      }
      run.vars.row(c) = (m2 / nk[c]).cwiseMax(floor_var.transpose());
    }
    run.weights = nk / static_cast<double>(s);
    run.weights /= run.weights.sum();
  }
  return run;
}

}  // namespace

GmmModel fit_gmm(const Eigen::MatrixXd& points, int k, uint64_t seed,
                 const GmmFitOptions& opt) {
  const Eigen::Index s = points.rows();
  if (s == 0) throw std::invalid_argument("fit_gmm: empty input");
  if (k < 1) throw std::invalid_argument("fit_gmm: k must be >= 1");
  if (k > s) throw std::invalid_argument("fit_gmm: k exceeds number of points");
  if (opt.restarts < 1) throw std::invalid_argument("fit_gmm: restarts must be >= 1");

  const auto order = lexicographic_order(points);
  Eigen::MatrixXd pts(points.rows(), points.cols());
  for (Eigen::Index i = 0; i < s; ++i) pts.row(i) = points.row(order[i]);

  // Variance floor: 1e-6 of the per-axis data variance, with an absolute
  // backstop for constant axes.
  Eigen::VectorXd floor_var(pts.cols());
  for (Eigen::Index a = 0; a < pts.cols(); ++a) {
    const double mu = pts.col(a).mean();
    const double var = (pts.col(a).array() - mu).square().sum() / static_cast<double>(s);
    floor_var[a] = std::max(1e-6 * var, 1e-12);
  }

  EmRun best;
  uint64_t best_seed = seed;
  for (int r = 0; r < opt.restarts; ++r) {
    EmRun run = run_em(pts, k, seed + static_cast<uint64_t>(r), floor_var, opt);
    if (run.ll > best.ll) {
      best = std::move(run);
      best_seed = seed + static_cast<uint64_t>(r);
    }
  }

  GmmModel model;
  model.weights = best.weights;
  model.means = best.means;
  model.variances = best.vars;
  model.log_likelihood = best.ll;
  model.iterations = best.iterations;
  model.converged = best.converged;
  model.seed = best_seed;
  model.ll_trace = std::move(best.ll_trace);
  if (!std::isfinite(model.log_likelihood)) {
    throw std::runtime_error("fit_gmm produced a non-finite log-likelihood");
  }
  return model;
}

Eigen::MatrixXd responsibilities(const GmmModel& model, const Eigen::MatrixXd& points) {
  if (points.cols() != model.dim()) {
    throw std::invalid_argument("responsibilities: point dimension mismatch");
  }
  const Eigen::MatrixXd lj =
      log_joint(points, model.weights, model.means, model.variances);
  Eigen::MatrixXd resp(points.rows(), model.n_components());
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    const double lse = stats::log_sum_exp(lj.row(i).transpose());
    for (int c = 0; c < model.n_components(); ++c) {
      resp(i, c) = std::exp(lj(i, c) - lse);
    }
  }
  return resp;
}

std::vector<CancerType> match_components(const GmmModel& model,
                                         const std::vector<CancerType>& labels,
                                         const Eigen::MatrixXd& points) {
  const int k = model.n_components();
  if (static_cast<Eigen::Index>(labels.size()) != points.rows()) {
    throw std::invalid_argument("match_components: labels/points size mismatch");
  }
  std::vector<CancerType> present;
  for (CancerType t : all_cancer_types()) {
    if (std::find(labels.begin(), labels.end(), t) != labels.end()) present.push_back(t);
  }
  if (static_cast<int>(present.size()) != k) {
    throw std::invalid_argument("match_components: component count (" + std::to_string(k) +
                                ") != distinct labels (" + std::to_string(present.size()) + ")");
  }
  if (k > 9) throw std::invalid_argument("match_components supports at most 9 components");

  const Eigen::MatrixXd resp = responsibilities(model, points);
  Eigen::MatrixXd mass = Eigen::MatrixXd::Zero(k, k);  // component x label
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    const int li = static_cast<int>(
        std::find(present.begin(), present.end(), labels[i]) - present.begin());
    for (int c = 0; c < k; ++c) mass(c, li) += resp(i, c);
  }

  // Exhaustive search over assignments; first maximum in permutation order
  // keeps the result deterministic.
  std::vector<int> perm(k), best_perm(k);
  std::iota(perm.begin(), perm.end(), 0);
  best_perm = perm;
  double best_mass = -1.0;
  do {
    double total = 0.0;
    for (int c = 0; c < k; ++c) total += mass(c, perm[c]);
    if (total > best_mass) {
      best_mass = total;
      best_perm = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));

  std::vector<CancerType> out(k);
  for (int c = 0; c < k; ++c) out[c] = present[best_perm[c]];
  return out;
}

void write_gmm_json(const GmmModel& model, const std::string& path) {
  nlohmann::json j;
  j["weights"] = std::vector<double>(model.weights.data(),
                                     model.weights.data() + model.weights.size());
  nlohmann::json means = nlohmann::json::array();
  nlohmann::json vars = nlohmann::json::array();
  for (int c = 0; c < model.n_components(); ++c) {
    means.push_back(std::vector<double>(model.means.row(c).begin(), model.means.row(c).end()));
    vars.push_back(std::vector<double>(model.variances.row(c).begin(),
                                       model.variances.row(c).end()));
  }
  j["means"] = means;
  j["variances"] = vars;
  j["log_likelihood"] = model.log_likelihood;
  j["iterations"] = model.iterations;
  j["converged"] = model.converged;
  j["seed"] = model.seed;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(2) << '\n';
}

GmmModel read_gmm_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  nlohmann::json j;
  in >> j;
  GmmModel model;
  const auto weights = j.at("weights").get<std::vector<double>>();
  const auto means = j.at("means").get<std::vector<std::vector<double>>>();
  const auto vars = j.at("variances").get<std::vector<std::vector<double>>>();
  const int k = static_cast<int>(weights.size());
  const int d = k > 0 ? static_cast<int>(means.at(0).size()) : 0;
  model.weights = Eigen::Map<const Eigen::VectorXd>(weights.data(), k);
  model.means.resize(k, d);
  model.variances.resize(k, d);
  for (int c = 0; c < k; ++c) {
    for (int a = 0; a < d; ++a) {
      model.means(c, a) = means.at(c).at(a);
      model.variances(c, a) = vars.at(c).at(a);
    }
  }
  model.log_likelihood = j.at("log_likelihood").get<double>();
  model.iterations = j.at("iterations").get<long>();
  model.converged = j.at("converged").get<bool>();
  model.seed = j.at("seed").get<uint64_t>();
  return model;
}

}  // namespace genenet
