#include <doctest.h>

#include <cmath>

#include "genenet/netbuild.hpp"
#include "support/oracles.hpp"
#include "support/testutil.hpp"

using namespace genenet;

namespace {

ExpressionMatrix matrix_from(const Eigen::MatrixXd& values) {
  ExpressionMatrix m;
  m.values = values;
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    m.sample_ids.push_back("s" + std::to_string(i));
    m.labels.push_back(CancerType::BRCA);
  }
  for (Eigen::Index j = 0; j < values.cols(); ++j) {
    m.gene_ids.push_back("g" + std::to_string(j));
  }
  return m;
}

}  // namespace

TEST_CASE("pearson correlation basics") {
  Eigen::MatrixXd v(3, 3);
  v.col(0) << 1, 2, 3;
  v.col(1) << 3, 2, 1;
  v.col(2) << 1, 2, 4;
  const CorrelationMatrix cm = correlation_matrix(matrix_from(v), CorrelationAxis::Genes);

  CHECK(cm.values(0, 0) == 1.0);  // self-correlation of a non-constant vector
  CHECK(cm.values(0, 1) == doctest::Approx(-1.0).epsilon(1e-12));
  // rho([1,2,3],[1,2,4]) = 9 / sqrt(84)
  CHECK(cm.values(0, 2) == doctest::Approx(9.0 / std::sqrt(84.0)).epsilon(1e-12));
  CHECK(cm.n_observations == 3);
  CHECK(cm.degenerate.empty());
}

TEST_CASE("correlation matrix is symmetric with flagged degenerate rows") {
  Eigen::MatrixXd v = testutil::random_matrix(8, 5, 12);
  v.col(3).setConstant(2.5);  // degenerate gene
  const CorrelationMatrix cm = correlation_matrix(matrix_from(v), CorrelationAxis::Genes);
  CHECK(cm.degenerate == std::vector<int32_t>{3});
  CHECK(cm.values.col(3).cwiseAbs().maxCoeff() == 0.0);
  CHECK((cm.values - cm.values.transpose()).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(cm.values.allFinite());
  for (Eigen::Index i = 0; i < cm.size(); ++i) {
    for (Eigen::Index j = 0; j < cm.size(); ++j) {
      CHECK(std::abs(cm.values(i, j)) <= 1.0 + 1e-12);
    }
  }
}

TEST_CASE("correlation against the scalar oracle") {
  const Eigen::MatrixXd v = testutil::random_matrix(12, 8, 77, 0.0, 5.0);
  const ExpressionMatrix m = matrix_from(v);
  const CorrelationMatrix cm = correlation_matrix(m, CorrelationAxis::Genes);
  for (Eigen::Index a = 0; a < 8; ++a) {
    for (Eigen::Index b = a + 1; b < 8; ++b) {
      CHECK(cm.values(a, b) ==
            doctest::Approx(oracle::pearson(v.col(a), v.col(b))).epsilon(1e-12));
    }
  }
  // Patient axis correlates rows.
  const CorrelationMatrix cp = correlation_matrix(m, CorrelationAxis::Patients);
  CHECK(cp.size() == 12);
  CHECK(cp.n_observations == 8);
  CHECK(cp.values(0, 1) ==
        doctest::Approx(oracle::pearson(v.row(0).transpose(), v.row(1).transpose()))
            .epsilon(1e-12));
}

TEST_CASE("correlation is invariant under positive affine transforms") {
  Eigen::MatrixXd v = testutil::random_matrix(10, 2, 5);
  const double before = correlation_matrix(matrix_from(v), CorrelationAxis::Genes).values(0, 1);
  v.col(0) = (3.7 * v.col(0)).array() + 11.0;
  const double after = correlation_matrix(matrix_from(v), CorrelationAxis::Genes).values(0, 1);
  CHECK(after == doctest::Approx(before).epsilon(1e-12));
}

TEST_CASE("correlation preconditions") {
  Eigen::MatrixXd one_row(1, 3);
  one_row << 1, 2, 3;
  CHECK_THROWS_AS(correlation_matrix(matrix_from(one_row), CorrelationAxis::Genes),
                  std::invalid_argument);
  Eigen::MatrixXd constant(4, 2);
  constant.setConstant(1.0);
  CHECK_THROWS_AS(correlation_matrix(matrix_from(constant), CorrelationAxis::Genes),
                  std::invalid_argument);
}

TEST_CASE("fisher transform") {
  SUBCASE("null case") {
    const FisherResult r = fisher_transform(0.0, 100);
    CHECK(r.z == 0.0);
    CHECK(r.p == 1.0);
    CHECK(!r.saturated);
  }
  SUBCASE("rho = 0.8 gives z = ln(9)/2") {
    const FisherResult r = fisher_transform(0.8, 100);
    CHECK(r.z == doctest::Approx(0.5 * std::log(9.0)).epsilon(1e-12));
  }
  SUBCASE("rho = 0.5, n = 103 against the quadrature oracle") {
    const FisherResult r = fisher_transform(0.5, 103);
    CHECK(r.z == doctest::Approx(0.549306144334055).epsilon(1e-12));
    const double se = 0.1;
    const double expected = static_cast<double>(oracle::normal_two_sided_p(r.z / se));
    CHECK(r.p == doctest::Approx(expected).epsilon(1e-6));
    CHECK(r.p == doctest::Approx(4.0e-8).epsilon(0.02));  // the reported magnitude
  }
  SUBCASE("|rho| >= 1 saturates instead of overflowing") {
    const FisherResult r = fisher_transform(1.0, 50);
    CHECK(r.saturated);
    CHECK(std::isfinite(r.z));
    CHECK(std::isfinite(r.p));
    const FisherResult rn = fisher_transform(-1.0, 50);
    CHECK(rn.saturated);
    CHECK(rn.z < 0.0);
  }
  SUBCASE("needs n >= 4") {
    CHECK_THROWS_AS(fisher_transform(0.5, 3), std::invalid_argument);
  }
  SUBCASE("p decreases in |rho| and in n") {
    double prev = 1.1;
    for (double rho : {0.1, 0.3, 0.5, 0.7, 0.9}) {
      const double p = fisher_transform(rho, 30).p;
      CHECK(p < prev);
      prev = p;
    }
    prev = 1.1;
    for (long n : {10L, 30L, 100L, 300L}) {
      const double p = fisher_transform(0.4, n).p;
      CHECK(p < prev);
      prev = p;
    }
  }
}

TEST_CASE("build_graph applies the edge rule") {
  CorrelationMatrix cm;
  cm.axis = CorrelationAxis::Genes;
  cm.n_observations = 50;
  cm.ids = {"a", "b", "c"};

  SUBCASE("zero off-diagonals give no edges") {
    cm.values = Eigen::MatrixXd::Identity(3, 3);
    const SparseGraph g = build_graph(cm, EdgeRule::hard_threshold(0.8));
    CHECK(g.n_edges() == 0);
    CHECK(g.n_nodes == 3);
  }
  SUBCASE("all off-diagonals 0.9 over threshold 0.8 give a triangle") {
    cm.values = Eigen::MatrixXd::Constant(3, 3, 0.9);
    cm.values.diagonal().setOnes();
    const SparseGraph g = build_graph(cm, EdgeRule::hard_threshold(0.8));
    CHECK(g.n_edges() == 3);
    g.validate();
  }
  SUBCASE("one-sided rule ignores negative correlations, two-sided keeps them") {
    cm.values = Eigen::MatrixXd::Identity(3, 3);
    cm.values(0, 1) = cm.values(1, 0) = -0.95;
    const SparseGraph one = build_graph(cm, EdgeRule::hard_threshold(0.8));
    CHECK(one.n_edges() == 0);
    const SparseGraph two =
        build_graph(cm, EdgeRule::hard_threshold(0.8, EdgeRule::Sided::TwoSided));
    CHECK(two.n_edges() == 1);
  }
  SUBCASE("build_meta records the rule") {
    cm.values = Eigen::MatrixXd::Identity(3, 3);
    const SparseGraph g = build_graph(cm, EdgeRule::fisher(0.05));
    CHECK(g.build_meta.rule == "fisher_significance");
    CHECK(g.build_meta.alpha == 0.05);
    CHECK(g.build_meta.n_observations == 50);
  }
}

TEST_CASE("edge rule validation") {
  CHECK_THROWS_AS(EdgeRule::hard_threshold(0.0), std::invalid_argument);
  CHECK_THROWS_AS(EdgeRule::hard_threshold(1.0), std::invalid_argument);
  CHECK_THROWS_AS(EdgeRule::fisher(0.0), std::invalid_argument);
  CHECK_THROWS_AS(EdgeRule::fisher(1.5), std::invalid_argument);
}

TEST_CASE("threshold monotonicity: edge sets nest") {
  const ExpressionMatrix m = matrix_from(testutil::random_matrix(10, 7, 21));
  const CorrelationMatrix cm = correlation_matrix(m, CorrelationAxis::Genes);

  std::vector<std::pair<int32_t, int32_t>> prev_edges;
  bool first = true;
  for (double rho_min : {0.1, 0.3, 0.5, 0.7, 0.9}) {
    const SparseGraph g = build_graph(cm, EdgeRule::hard_threshold(rho_min,
                                                                   EdgeRule::Sided::TwoSided));
    if (!first) {
      for (const auto& e : g.edges) {
        CHECK(std::find(prev_edges.begin(), prev_edges.end(), e) != prev_edges.end());
      }
    }
    prev_edges = g.edges;
    first = false;
  }

  // Lowering alpha can only remove fisher edges.
  prev_edges.clear();
  first = true;
  for (double alpha : {0.2, 0.05, 0.01, 0.001}) {
    const SparseGraph g = build_graph(cm, EdgeRule::fisher(alpha));
    if (!first) {
      for (const auto& e : g.edges) {
        CHECK(std::find(prev_edges.begin(), prev_edges.end(), e) != prev_edges.end());
      }
    }
    prev_edges = g.edges;
    first = false;
  }
}

TEST_CASE("full pipeline matches the scalar-at-a-time oracle on 12x8 matrices") {
  for (uint64_t seed : {101, 102, 103, 104, 105}) {
    const Eigen::MatrixXd v = testutil::random_matrix(12, 8, seed, 0.0, 3.0);
    const ExpressionMatrix m = matrix_from(v);

    for (const EdgeRule& rule :
         {EdgeRule::hard_threshold(0.5, EdgeRule::Sided::TwoSided),
          EdgeRule::fisher(0.05)}) {
      const SparseGraph got = build_graph(correlation_matrix(m, CorrelationAxis::Genes), rule);

      std::vector<std::pair<int32_t, int32_t>> expected;
      for (int a = 0; a < 8; ++a) {
        for (int b = a + 1; b < 8; ++b) {
          const double rho = oracle::pearson(v.col(a), v.col(b));
          bool edge;
          if (rule.kind == EdgeRule::Kind::HardThreshold) {
            edge = std::abs(rho) > rule.rho_min;
          } else {
            const double z = std::atanh(rho);
            const double se = 1.0 / std::sqrt(12.0 - 3.0);
            edge = static_cast<double>(oracle::normal_two_sided_p(z / se)) < rule.alpha;
          }
          if (edge) expected.emplace_back(a, b);
        }
      }
      CHECK(got.edges == expected);
    }
  }
}

TEST_CASE("tiled streaming builder equals the materialized path exactly") {
  const ExpressionMatrix m = matrix_from(testutil::random_matrix(30, 50, 31, 0.0, 2.0));
  const EdgeRule rule = EdgeRule::hard_threshold(0.3, EdgeRule::Sided::TwoSided);
  const SparseGraph dense = build_graph(correlation_matrix(m, CorrelationAxis::Genes), rule);
  for (long tile : {1L, 7L, 16L, 64L}) {
    const SparseGraph tiled =
        build_correlation_graph(m, CorrelationAxis::Genes, rule, "all", tile);
    CHECK(tiled.edges == dense.edges);
    CHECK(tiled.n_nodes == dense.n_nodes);
  }
  // Fisher rule through the tiled path too.
  const EdgeRule fisher_rule = EdgeRule::fisher(0.01);
  const SparseGraph dense_f =
      build_graph(correlation_matrix(m, CorrelationAxis::Genes), fisher_rule);
  const SparseGraph tiled_f =
      build_correlation_graph(m, CorrelationAxis::Genes, fisher_rule, "all", 13);
  CHECK(tiled_f.edges == dense_f.edges);
}

TEST_CASE("degree distribution") {
  SUBCASE("empty graph on 5 nodes") {
    SparseGraph g;
    g.n_nodes = 5;
    g.node_ids = {"a", "b", "c", "d", "e"};
    const auto hist = degree_distribution(g);
    CHECK(hist.size() == 1);
    CHECK(hist.at(0) == 5);
  }
  SUBCASE("triangle") {
    const auto hist = degree_distribution(testutil::complete_graph(3));
    CHECK(hist.size() == 1);
    CHECK(hist.at(2) == 3);
  }
  SUBCASE("counts sum to n and weighted sum is 2E") {
    const SparseGraph g = testutil::random_graph(40, 0.2, 9);
    const auto hist = degree_distribution(g);
    long count = 0, weighted = 0;
    for (const auto& [d, c] : hist) {
      count += c;
      weighted += d * c;
    }
    CHECK(count == g.n_nodes);
    CHECK(weighted == 2 * g.n_edges());
  }
}
