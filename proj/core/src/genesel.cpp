#include "genenet/genesel.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "genenet/csv.hpp"
#include "genenet/stats.hpp"

namespace genenet {

namespace {

constexpr double kBetaCap = 30.0;     // on the standardized predictor scale
constexpr int kMaxNewtonIter = 100;
constexpr double kGradTol = 1e-8;

struct FitInput {
  Eigen::VectorXd z;        // standardized predictor
  std::vector<int> y;       // 0 = baseline, 1..C = contrast index + 1
  int n_contrasts = 0;
  double mu = 0.0, sigma = 1.0;
};

// Log-likelihood, gradient and negative Hessian of the multinomial logit
// with parameters theta = (b0_1, b1_1, ..., b0_C, b1_C).
double log_likelihood(const FitInput& in, const Eigen::VectorXd& theta,
                      Eigen::VectorXd* grad, Eigen::MatrixXd* info) {
  const int c = in.n_contrasts;
  const Eigen::Index s = in.z.size();
  if (grad) grad->setZero(2 * c);
  if (info) info->setZero(2 * c, 2 * c);
  double ll = 0.0;
  Eigen::VectorXd eta(c), prob(c);
  for (Eigen::Index i = 0; i < s; ++i) {
    const double zi = in.z[i];
    double m = 0.0;  // log-sum-exp shift including the baseline's eta = 0
    for (int k = 0; k < c; ++k) {
      eta[k] = theta[2 * k] + theta[2 * k + 1] * zi;
      m = std::max(m, eta[k]);
    }
    double denom = std::exp(-m);
    for (int k = 0; k < c; ++k) denom += std::exp(eta[k] - m);
    const double log_denom = m + std::log(denom);
    ll += (in.y[i] > 0 ? eta[in.y[i] - 1] : 0.0) - log_denom;
    if (!grad && !info) continue;
    for (int k = 0; k < c; ++k) prob[k] = std::exp(eta[k] - log_denom);
    if (grad) {
      for (int k = 0; k < c; ++k) {
        const double r = (in.y[i] == k + 1 ? 1.0 : 0.0) - prob[k];
        (*grad)[2 * k] += r;
        (*grad)[2 * k + 1] += r * zi;
      }
    }
    if (info) {
      for (int k = 0; k < c; ++k) {
        for (int l = 0; l < c; ++l) {
          const double w = prob[k] * ((k == l ? 1.0 : 0.0) - prob[l]);
          (*info)(2 * k, 2 * l) += w;
          (*info)(2 * k, 2 * l + 1) += w * zi;
          (*info)(2 * k + 1, 2 * l) += w * zi;
          (*info)(2 * k + 1, 2 * l + 1) += w * zi * zi;
        }
      }
    }
  }
  return ll;
}

}  // namespace

std::string_view to_string(ScreenStatus s) {
  switch (s) {
    case ScreenStatus::Ok: return "ok";
    case ScreenStatus::DegenerateConstant: return "degenerate_constant";
    case ScreenStatus::SeparatedNonconverged: return "separated_nonconverged";
  }
  return "?";
}

std::string_view to_string(SelectionRule r) {
  return r == SelectionRule::AnyContrast ? "any_contrast" : "all_contrasts";
}

GeneScreenResult screen_gene(const ExpressionMatrix& m, Eigen::Index gene_index,
                             CancerType baseline) {
  if (gene_index < 0 || gene_index >= m.n_genes()) {
    throw std::invalid_argument("gene_index out of range");
  }
  const Eigen::Index s = m.n_samples();

  std::vector<CancerType> contrasts;
  bool baseline_present = false;
  for (CancerType t : all_cancer_types()) {
    const bool present = std::find(m.labels.begin(), m.labels.end(), t) != m.labels.end();
    if (!present) continue;
    if (t == baseline) {
      baseline_present = true;
    } else {
      contrasts.push_back(t);
    }
  }
  if (!baseline_present) throw std::invalid_argument("baseline class has no samples");
  if (contrasts.empty()) throw std::invalid_argument("screening needs >= 2 classes");

  GeneScreenResult res;
  res.gene_id = m.gene_ids[gene_index];
  const int c = static_cast<int>(contrasts.size());

  FitInput in;
  in.n_contrasts = c;
  in.y.resize(s);
  std::vector<long> class_count(c + 1, 0);
  for (Eigen::Index i = 0; i < s; ++i) {
    int code = 0;
    for (int k = 0; k < c; ++k) {
      if (m.labels[i] == contrasts[k]) code = k + 1;
    }
    in.y[i] = code;
    class_count[code]++;
  }

  const Eigen::VectorXd x = m.values.col(gene_index);
  in.mu = x.mean();
  in.sigma = std::sqrt((x.array() - in.mu).square().sum() / static_cast<double>(s));

  if (in.sigma <= 0.0) {
    // No information in a constant gene: intercept-only model, p = 1.
    res.status = ScreenStatus::DegenerateConstant;
    for (int k = 0; k < c; ++k) {
      ContrastResult r;
      r.contrast = contrasts[k];
      r.intercept = std::log(static_cast<double>(class_count[k + 1]) /
                             static_cast<double>(class_count[0]));
      r.beta = 0.0;
      r.std_err = 0.0;
      r.p_value = 1.0;
      res.contrasts.push_back(r);
    }
    return res;
  }
  in.z = (x.array() - in.mu) / in.sigma;

  // Newton-Raphson with step halving; the standardized predictor keeps the
  // information matrix well conditioned.
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(2 * c);
  Eigen::VectorXd grad(2 * c);
  Eigen::MatrixXd info(2 * c, 2 * c);
  double ll = log_likelihood(in, theta, &grad, &info);
  bool converged = false;
  bool separated = false;

  for (int it = 0; it < kMaxNewtonIter; ++it) {
    if (grad.lpNorm<Eigen::Infinity>() < kGradTol) {
      converged = true;
      break;
    }
    const Eigen::VectorXd step = info.ldlt().solve(grad);
    if (!step.allFinite()) {
      separated = true;
      break;
    }
    double scale = 1.0;
    Eigen::VectorXd candidate;
    double new_ll = -std::numeric_limits<double>::infinity();
    for (int h = 0; h < 40; ++h) {
      candidate = theta + scale * step;
      new_ll = log_likelihood(in, candidate, nullptr, nullptr);
      if (new_ll >= ll) break;
      scale *= 0.5;
    }
    if (new_ll < ll) {
      separated = true;  // no ascent direction left
      break;
    }
    theta = candidate;
    ll = new_ll;
    // A slope running away on the standardized scale means (quasi-)complete
    // separation; cap it and report from the last usable information matrix.
    bool capped = false;
    for (int k = 0; k < c; ++k) {
      if (std::abs(theta[2 * k + 1]) > kBetaCap) {
        theta[2 * k + 1] = std::copysign(kBetaCap, theta[2 * k + 1]);
        capped = true;
      }
    }
    ll = log_likelihood(in, theta, &grad, &info);
    if (capped) {
      separated = true;
      break;
    }
  }

  res.status = separated ? ScreenStatus::SeparatedNonconverged
               : converged ? ScreenStatus::Ok
                           : ScreenStatus::SeparatedNonconverged;

  Eigen::MatrixXd cov = info.ldlt().solve(Eigen::MatrixXd::Identity(2 * c, 2 * c));
  for (int k = 0; k < c; ++k) {
    ContrastResult r;
    r.contrast = contrasts[k];
    const double beta_std = theta[2 * k + 1];
    const double var_std = cov(2 * k + 1, 2 * k + 1);
    const double se_std = var_std > 0.0 && std::isfinite(var_std)
                              ? std::sqrt(var_std)
                              : std::numeric_limits<double>::infinity();
    r.beta = beta_std / in.sigma;
    r.intercept = theta[2 * k] - beta_std * in.mu / in.sigma;
    r.std_err = se_std / in.sigma;
    r.p_value = std::isfinite(se_std) && se_std > 0.0
                    ? stats::normal_two_sided_p(beta_std / se_std)
                    : 1.0;
    res.contrasts.push_back(r);
  }
  return res;
}

std::vector<GeneScreenResult> screen_all(const ExpressionMatrix& m, CancerType baseline) {
  const Eigen::Index g = m.n_genes();
  std::vector<GeneScreenResult> results(g);
#pragma omp parallel for schedule(dynamic, 64)
  for (Eigen::Index j = 0; j < g; ++j) {
    try {
      results[j] = screen_gene(m, j, baseline);
    } catch (const std::exception&) {
      // Never abort the batch for one gene; flag it instead.
      results[j].gene_id = m.gene_ids[j];
      results[j].status = ScreenStatus::SeparatedNonconverged;
    }
  }
  return results;
}

SelectionReport select_genes(const std::vector<GeneScreenResult>& results,
                             double alpha, SelectionRule rule) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must be in (0,1)");
  SelectionReport report;
  report.alpha = alpha;
  report.rule = rule;

  for (size_t gi = 0; gi < results.size(); ++gi) {
    const auto& r = results[gi];
    double min_p = 1.0, max_p = 0.0;
    for (const auto& contrast : r.contrasts) {
      min_p = std::min(min_p, contrast.p_value);
      max_p = std::max(max_p, contrast.p_value);
    }
    if (r.contrasts.empty()) {
      min_p = max_p = 1.0;
    }
    const bool any = min_p < alpha;
    const bool all = !r.contrasts.empty() && max_p < alpha;
    if (any) report.count_any_contrast++;
    if (all) report.count_all_contrasts++;
    const bool selected = rule == SelectionRule::AnyContrast ? any : all;
    if (selected) report.selected_gene_ids.push_back(r.gene_id);
    for (const auto& contrast : r.contrasts) {
      ManhattanPoint pt;
      pt.gene_position = static_cast<long>(gi);
      pt.contrast = contrast.contrast;
      pt.neg_log10_p = std::min(300.0, -std::log10(std::max(contrast.p_value, 1e-300)));
      pt.selected = selected;
      report.manhattan.push_back(pt);
    }
  }
  return report;
}

void manhattan_export(const SelectionReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "# alpha," << csv::format_double(report.alpha) << '\n';
  out << "# threshold_neg_log10_p," << csv::format_double(-std::log10(report.alpha)) << '\n';
  out << "# rule," << to_string(report.rule) << '\n';
  out << "contrast,gene_position,neg_log10_p,selected\n";
  for (const auto& pt : report.manhattan) {
    out << to_string(pt.contrast) << ',' << pt.gene_position << ','
        << csv::format_double(pt.neg_log10_p) << ',' << (pt.selected ? 1 : 0) << '\n';
  }
}

void write_screen_results(const std::vector<GeneScreenResult>& results,
                          const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "gene_id,gene_position,status,contrast,beta,intercept,std_err,p_value\n";
  for (size_t gi = 0; gi < results.size(); ++gi) {
    const auto& r = results[gi];
    for (const auto& contrast : r.contrasts) {
      out << r.gene_id << ',' << gi << ',' << to_string(r.status) << ','
          << to_string(contrast.contrast) << ',' << csv::format_double(contrast.beta)
          << ',' << csv::format_double(contrast.intercept) << ','
          << csv::format_double(contrast.std_err) << ','
          << csv::format_double(contrast.p_value) << '\n';
    }
  }
}

void write_selection_json(const SelectionReport& report, const std::string& path) {
  nlohmann::json j;
  j["alpha"] = report.alpha;
  j["rule"] = std::string(to_string(report.rule));
  j["count_any_contrast"] = report.count_any_contrast;
  j["count_all_contrasts"] = report.count_all_contrasts;
  j["selected_count"] = report.selected_gene_ids.size();
  j["selected_gene_ids"] = report.selected_gene_ids;
  j["wald_reference"] = "standard normal";
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(2) << '\n';
}

}  // namespace genenet
