#include "genenet/netbuild.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "genenet/stats.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace genenet {

namespace {

// Columns of the result have zero mean and unit L2 norm, so any pairwise
// Pearson coefficient is a plain dot product. Zero-variance columns are
// zeroed and reported.
Eigen::MatrixXd standardized_columns(const Eigen::MatrixXd& x,
                                     std::vector<int32_t>& degenerate) {
  const Eigen::Index n = x.rows();
  Eigen::MatrixXd z = x.rowwise() - x.colwise().mean();
  for (Eigen::Index j = 0; j < z.cols(); ++j) {
    const double norm = z.col(j).norm();
    if (norm > 0.0) {
      z.col(j) /= norm;
    } else {
      z.col(j).setZero();
      degenerate.push_back(static_cast<int32_t>(j));
    }
  }
  (void)n;
  return z;
}

// Vectors to correlate as columns: genes are already columns of the
// expression matrix; patients are its rows.
Eigen::MatrixXd axis_columns(const ExpressionMatrix& m, CorrelationAxis axis) {
  if (axis == CorrelationAxis::Genes) return m.values;
  return m.values.transpose();
}

const std::vector<std::string>& axis_ids(const ExpressionMatrix& m, CorrelationAxis axis) {
  return axis == CorrelationAxis::Genes ? m.gene_ids : m.sample_ids;
}

void check_axis_preconditions(const Eigen::MatrixXd& cols) {
  if (cols.rows() < 2) {
    throw std::invalid_argument(
        "correlation needs vectors of length >= 2 (got " +
        std::to_string(cols.rows()) + ")");
  }
}

GraphBuildMeta make_meta(const EdgeRule& rule, const std::string& source_label,
                         long n_observations) {
  GraphBuildMeta meta;
  meta.rule = rule.kind == EdgeRule::Kind::FisherSignificance ? "fisher_significance"
                                                              : "hard_threshold";
  meta.alpha = rule.kind == EdgeRule::Kind::FisherSignificance ? rule.alpha : 0.0;
  meta.rho_min = rule.kind == EdgeRule::Kind::HardThreshold ? rule.rho_min : 0.0;
  meta.sided = rule.sided == EdgeRule::Sided::TwoSided ? "two-sided" : "one-sided-positive";
  meta.source_label = source_label;
  meta.n_observations = n_observations;
  return meta;
}

}  // namespace

CorrelationMatrix correlation_matrix(const ExpressionMatrix& m, CorrelationAxis axis,
                                     const std::string& source_label) {
  const Eigen::MatrixXd cols = axis_columns(m, axis);
  check_axis_preconditions(cols);

  CorrelationMatrix cm;
  cm.axis = axis;
  cm.source_label = source_label;
  cm.n_observations = cols.rows();
  cm.ids = axis_ids(m, axis);

  Eigen::MatrixXd z = standardized_columns(cols, cm.degenerate);
  if (static_cast<Eigen::Index>(cm.degenerate.size()) == z.cols()) {
    throw std::invalid_argument("every vector is constant; correlation undefined");
  }

  const Eigen::Index n = z.cols();
  cm.values = Eigen::MatrixXd::Zero(n, n);
  cm.values.selfadjointView<Eigen::Lower>().rankUpdate(z.transpose());
  cm.values.triangularView<Eigen::StrictlyUpper>() =
      cm.values.transpose().triangularView<Eigen::StrictlyUpper>();
  // Exact unit diagonal for non-degenerate vectors.
  for (Eigen::Index j = 0; j < n; ++j) cm.values(j, j) = 1.0;
  for (int32_t j : cm.degenerate) cm.values(j, j) = 0.0;
  return cm;
}

FisherResult fisher_transform(double rho, long n_observations) {
  if (n_observations < 4) {
    throw std::invalid_argument("fisher_transform needs n_observations >= 4");
  }
  FisherResult r;
  if (std::abs(rho) >= 1.0) {
    rho = std::copysign(1.0 - 1e-15, rho);
    r.saturated = true;
  }
  r.z = std::atanh(rho);
  const double se = 1.0 / std::sqrt(static_cast<double>(n_observations - 3));
  r.p = stats::normal_two_sided_p(r.z / se);
  return r;
}

EdgeRule EdgeRule::fisher(double alpha, Sided sided) {
  EdgeRule r;
  r.kind = Kind::FisherSignificance;
  r.alpha = alpha;
  r.sided = sided;
  r.rho_min = 0.0;
  r.validate();
  return r;
}

EdgeRule EdgeRule::hard_threshold(double rho_min, Sided sided) {
  EdgeRule r;
  r.kind = Kind::HardThreshold;
  r.rho_min = rho_min;
  r.sided = sided;
  r.alpha = 0.0;
  r.validate();
  return r;
}

void EdgeRule::validate() const {
  if (kind == Kind::FisherSignificance) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must be in (0,1)");
  } else {
    if (!(rho_min > 0.0 && rho_min < 1.0)) throw std::invalid_argument("rho_min must be in (0,1)");
  }
}

bool EdgeRule::passes(double rho, long n_observations) const {
  if (kind == Kind::HardThreshold) {
    return sided == Sided::OneSidedPositive ? rho > rho_min : std::abs(rho) > rho_min;
  }
  const FisherResult f = fisher_transform(rho, n_observations);
  if (sided == Sided::TwoSided) return f.p < alpha;
  if (f.z <= 0.0) return false;
  return 0.5 * f.p < alpha;
}

SparseGraph build_graph(const CorrelationMatrix& cm, const EdgeRule& rule) {
  rule.validate();
  SparseGraph g;
  g.n_nodes = cm.size();
  g.node_ids = cm.ids;
  g.node_kind = cm.axis == CorrelationAxis::Genes ? SparseGraph::NodeKind::Gene
                                                  : SparseGraph::NodeKind::Patient;
  g.build_meta = make_meta(rule, cm.source_label, cm.n_observations);
  for (Eigen::Index i = 0; i < cm.size(); ++i) {
    for (Eigen::Index j = i + 1; j < cm.size(); ++j) {
      if (rule.passes(cm.values(i, j), cm.n_observations)) {
        g.edges.emplace_back(static_cast<int32_t>(i), static_cast<int32_t>(j));
      }
    }
  }
  return g;
}

SparseGraph build_correlation_graph(const ExpressionMatrix& m, CorrelationAxis axis,
                                    const EdgeRule& rule, const std::string& source_label,
                                    long tile_size) {
  rule.validate();
  if (tile_size < 1) throw std::invalid_argument("tile_size must be >= 1");
  const Eigen::MatrixXd cols = axis_columns(m, axis);
  check_axis_preconditions(cols);

  std::vector<int32_t> degenerate;
  const Eigen::MatrixXd z = standardized_columns(cols, degenerate);
  const long n = z.cols();
  const long n_obs = z.rows();
  const long tiles = (n + tile_size - 1) / tile_size;

  // Tile pairs (ti <= tj) flattened so the loop parallelizes evenly; each
  // pair gets its own edge bucket and results are merged in a fixed order.
  std::vector<std::pair<long, long>> pairs;
  for (long ti = 0; ti < tiles; ++ti)
    for (long tj = ti; tj < tiles; ++tj) pairs.emplace_back(ti, tj);
  std::vector<std::vector<std::pair<int32_t, int32_t>>> buckets(pairs.size());

#pragma omp parallel for schedule(dynamic)
  for (long k = 0; k < static_cast<long>(pairs.size()); ++k) {
    const auto [ti, tj] = pairs[k];
    const long i0 = ti * tile_size;
    const long j0 = tj * tile_size;
    const long bi = std::min(tile_size, n - i0);
    const long bj = std::min(tile_size, n - j0);
    const Eigen::MatrixXd tile = z.middleCols(i0, bi).transpose() * z.middleCols(j0, bj);
    auto& local = buckets[k];
    for (long a = 0; a < bi; ++a) {
      const long j_start = (ti == tj) ? a + 1 : 0;
      for (long b = j_start; b < bj; ++b) {
        if (rule.passes(tile(a, b), n_obs)) {
          local.emplace_back(static_cast<int32_t>(i0 + a), static_cast<int32_t>(j0 + b));
        }
      }
    }
  }

  SparseGraph g;
  g.n_nodes = n;
  g.node_ids = axis_ids(m, axis);
  g.node_kind = axis == CorrelationAxis::Genes ? SparseGraph::NodeKind::Gene
                                               : SparseGraph::NodeKind::Patient;
  g.build_meta = make_meta(rule, source_label, n_obs);
  size_t total = 0;
  for (const auto& b : buckets) total += b.size();
  g.edges.reserve(total);
  for (const auto& b : buckets) g.edges.insert(g.edges.end(), b.begin(), b.end());
  std::sort(g.edges.begin(), g.edges.end());
  return g;
}

void write_build_meta(const SparseGraph& g, const std::string& path) {
  nlohmann::json j;
  j["rule"] = g.build_meta.rule;
  if (g.build_meta.rule == "fisher_significance") j["alpha"] = g.build_meta.alpha;
  if (g.build_meta.rule == "hard_threshold") j["rho_min"] = g.build_meta.rho_min;
  j["sided"] = g.build_meta.sided;
  j["source_label"] = g.build_meta.source_label;
  j["n_observations"] = g.build_meta.n_observations;
  j["n_nodes"] = g.n_nodes;
  j["n_edges"] = g.n_edges();
  j["n_non_isolated"] = count_non_isolated(g);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(2) << '\n';
}

}  // namespace genenet
