#include <doctest.h>

#include <cmath>
#include <numeric>

#include "genenet/centrality.hpp"
#include "support/oracles.hpp"
#include "support/testutil.hpp"

using namespace genenet;

TEST_CASE("degree centrality") {
  SUBCASE("star K_{1,4}") {
    SparseGraph g;
    g.n_nodes = 5;
    for (int v = 0; v < 5; ++v) g.node_ids.push_back("n" + std::to_string(v));
    for (int leaf = 1; leaf < 5; ++leaf) g.edges.emplace_back(0, leaf);
    const auto s = degree_centrality(g);
    CHECK(s.scores[0] == 4.0);
    for (int leaf = 1; leaf < 5; ++leaf) CHECK(s.scores[leaf] == 1.0);
  }
  SUBCASE("empty graph is all zeros") {
    SparseGraph g;
    g.n_nodes = 4;
    g.node_ids = {"a", "b", "c", "d"};
    const auto s = degree_centrality(g);
    for (double v : s.scores) CHECK(v == 0.0);
  }
  SUBCASE("matches dense row sums on a random graph") {
    const SparseGraph g = testutil::random_graph(10, 0.4, 3);
    const auto s = degree_centrality(g);
    const Eigen::VectorXd expected = oracle::degree_dense(g);
    for (int v = 0; v < 10; ++v) CHECK(s.scores[v] == expected[v]);
  }
}

TEST_CASE("eigenvector centrality") {
  SUBCASE("cycle C5: all scores 1/sqrt(5)") {
    const auto s = eigenvector_centrality(testutil::cycle_graph(5));
    for (double v : s.scores) CHECK(v == doctest::Approx(1.0 / std::sqrt(5.0)).epsilon(1e-8));
  }
  SUBCASE("path P3: scores proportional to (1, sqrt(2), 1)") {
    const auto s = eigenvector_centrality(testutil::path_graph(3));
    const double norm = std::sqrt(1.0 + 2.0 + 1.0);
    CHECK(s.scores[0] == doctest::Approx(1.0 / norm).epsilon(1e-8));
    CHECK(s.scores[1] == doctest::Approx(std::sqrt(2.0) / norm).epsilon(1e-8));
    CHECK(s.scores[2] == doctest::Approx(1.0 / norm).epsilon(1e-8));
  }
  SUBCASE("matches the dense eigensolver on random graphs") {
    for (uint64_t seed = 0; seed < 10; ++seed) {
      const SparseGraph g = testutil::random_graph(12, 0.25, 1000 + seed);
      const auto s = eigenvector_centrality(g, 1e-12, 100000);
      const Eigen::VectorXd expected = oracle::eigenvector_dense(g);
      for (int v = 0; v < 12; ++v) {
        CHECK(s.scores[v] == doctest::Approx(expected[v]).epsilon(1e-6));
      }
    }
  }
  SUBCASE("unit L2 norm, scores restricted to the largest component") {
    SparseGraph g = testutil::path_graph(3);  // plus two isolated nodes
    g.n_nodes = 5;
    g.node_ids.push_back("x");
    g.node_ids.push_back("y");
    const auto s = eigenvector_centrality(g);
    double norm = 0.0;
    for (double v : s.scores) norm += v * v;
    CHECK(std::sqrt(norm) == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(s.scores[3] == 0.0);
    CHECK(s.scores[4] == 0.0);
  }
  SUBCASE("non-convergence reports the residual") {
    try {
      eigenvector_centrality(testutil::cycle_graph(6), 1e-16, 2);
      FAIL("expected non-convergence");
    } catch (const std::runtime_error& e) {
      CHECK(std::string(e.what()).find("residual") != std::string::npos);
    }
  }
}

TEST_CASE("pagerank") {
  SUBCASE("cycle: uniform 1/n") {
    const auto s = pagerank(testutil::cycle_graph(7));
    for (double v : s.scores) CHECK(v == doctest::Approx(1.0 / 7.0).epsilon(1e-10));
  }
  SUBCASE("isolated node next to an edge pair scores exactly 1/3") {
    SparseGraph g;
    g.n_nodes = 3;
    g.node_ids = {"iso", "a", "b"};
    g.edges.emplace_back(1, 2);
    const auto s = pagerank(g, 0.85, 1e-14, 10000);
    CHECK(s.scores[0] == doctest::Approx(1.0 / 3.0).epsilon(1e-10));
    const Eigen::VectorXd expected = oracle::pagerank_dense(g, 0.85);
    for (int v = 0; v < 3; ++v) {
      CHECK(s.scores[v] == doctest::Approx(expected[v]).epsilon(1e-10));
    }
  }
  SUBCASE("matches the dense linear solve on random graphs") {
    for (uint64_t seed = 0; seed < 10; ++seed) {
      const SparseGraph g = testutil::random_graph(10, 0.3, 2000 + seed);
      const auto s = pagerank(g, 0.85, 1e-14, 100000);
      const Eigen::VectorXd expected = oracle::pagerank_dense(g, 0.85);
      for (int v = 0; v < 10; ++v) {
        CHECK(s.scores[v] == doctest::Approx(expected[v]).epsilon(1e-8));
      }
    }
  }
  SUBCASE("mass is conserved") {
    for (uint64_t seed = 0; seed < 5; ++seed) {
      const SparseGraph g = testutil::random_graph(20, 0.15, 3000 + seed);
      const auto s = pagerank(g);
      const double total = std::accumulate(s.scores.begin(), s.scores.end(), 0.0);
      CHECK(std::abs(total - 1.0) < 1e-12);
    }
  }
  SUBCASE("rejects bad damping") {
    CHECK_THROWS_AS(pagerank(testutil::cycle_graph(4), 0.0), std::invalid_argument);
    CHECK_THROWS_AS(pagerank(testutil::cycle_graph(4), 1.0), std::invalid_argument);
  }
}

TEST_CASE("betweenness") {
  SUBCASE("path P5 is (0, 3, 4, 3, 0)") {
    const auto s = betweenness(testutil::path_graph(5));
    const std::vector<double> expected = {0, 3, 4, 3, 0};
    for (int v = 0; v < 5; ++v) CHECK(s.scores[v] == doctest::Approx(expected[v]).epsilon(1e-12));
  }
  SUBCASE("complete graph K4 is all zeros") {
    const auto s = betweenness(testutil::complete_graph(4));
    for (double v : s.scores) CHECK(v == 0.0);
  }
  SUBCASE("matches the Floyd-Warshall path-counting oracle") {
    for (uint64_t seed = 0; seed < 10; ++seed) {
      const SparseGraph g = testutil::random_graph(12, 0.3, 4000 + seed);
      const auto s = betweenness(g);
      const Eigen::VectorXd expected = oracle::betweenness_floyd_warshall(g);
      for (int v = 0; v < 12; ++v) {
        CHECK(s.scores[v] == doctest::Approx(expected[v]).epsilon(1e-9));
      }
    }
  }
  SUBCASE("sampled estimator is unbiased within 5% of the exact maximum") {
    const SparseGraph g = testutil::random_graph(50, 0.12, 555);
    const auto exact = betweenness(g);
    const double max_exact =
        *std::max_element(exact.scores.begin(), exact.scores.end());
    std::vector<double> mean(g.n_nodes, 0.0);
    const int runs = 200;
    for (int r = 0; r < runs; ++r) {
      BetweennessOptions opt;
      opt.exact = false;
      opt.sample_count = 10;
      opt.seed = 9000 + r;
      const auto est = betweenness(g, opt);
      for (long v = 0; v < g.n_nodes; ++v) mean[v] += est.scores[v] / runs;
    }
    double total_err = 0.0;
    for (long v = 0; v < g.n_nodes; ++v) total_err += std::abs(mean[v] - exact.scores[v]);
    CHECK(total_err / g.n_nodes < 0.05 * max_exact);
  }
  SUBCASE("sample_count out of range") {
    BetweennessOptions opt;
    opt.exact = false;
    opt.sample_count = 99;
    CHECK_THROWS_AS(betweenness(testutil::path_graph(5), opt), std::invalid_argument);
  }
}

TEST_CASE("centrality is equivariant under node relabeling") {
  const SparseGraph g = testutil::random_graph(11, 0.3, 42);

  // Reverse permutation: node v becomes n-1-v.
  SparseGraph permuted;
  permuted.n_nodes = g.n_nodes;
  permuted.node_ids.resize(g.n_nodes);
  const auto perm = [&](int32_t v) { return static_cast<int32_t>(g.n_nodes - 1 - v); };
  for (long v = 0; v < g.n_nodes; ++v) permuted.node_ids[perm(v)] = g.node_ids[v];
  for (const auto& [u, v] : g.edges) {
    int32_t a = perm(u), b = perm(v);
    if (a > b) std::swap(a, b);
    permuted.edges.emplace_back(a, b);
  }
  std::sort(permuted.edges.begin(), permuted.edges.end());

  const auto check_permuted = [&](const CentralityScores& base,
                                  const CentralityScores& moved) {
    for (long v = 0; v < g.n_nodes; ++v) {
      CHECK(moved.scores[perm(v)] == doctest::Approx(base.scores[v]).epsilon(1e-9));
    }
    const long argmax_base = static_cast<long>(
        std::max_element(base.scores.begin(), base.scores.end()) - base.scores.begin());
    const long argmax_moved = static_cast<long>(
        std::max_element(moved.scores.begin(), moved.scores.end()) - moved.scores.begin());
    CHECK(moved.scores[perm(argmax_base)] == doctest::Approx(moved.scores[argmax_moved]));
  };
  check_permuted(degree_centrality(g), degree_centrality(permuted));
  check_permuted(eigenvector_centrality(g), eigenvector_centrality(permuted));
  check_permuted(pagerank(g), pagerank(permuted));
  check_permuted(betweenness(g), betweenness(permuted));
}

TEST_CASE("reversed edge input yields identical scores") {
  const SparseGraph g = testutil::random_graph(14, 0.25, 913);
  SparseGraph reversed = g;
  std::reverse(reversed.edges.begin(), reversed.edges.end());
  std::sort(reversed.edges.begin(), reversed.edges.end());  // normalization re-sorts
  const auto a = betweenness(g);
  const auto b = betweenness(reversed);
  for (long v = 0; v < g.n_nodes; ++v) CHECK(a.scores[v] == b.scores[v]);
}

TEST_CASE("rank_table") {
  SparseGraph g;
  g.n_nodes = 5;
  g.node_ids = {"n0", "n1", "n2", "n3", "n4"};

  SUBCASE("all-equal scores: first three indices plus a full tie group") {
    CentralityScores s;
    s.measure = CentralityScores::Measure::Degree;
    s.scores = {2, 2, 2, 2, 2};
    const RankedTable t = rank_table(s, g, 3);
    REQUIRE(t.top.size() == 3);
    CHECK(t.top[0].node_id == "n0");
    CHECK(t.top[1].node_id == "n1");
    CHECK(t.top[2].node_id == "n2");
    REQUIRE(t.ties.size() == 1);
    CHECK(t.ties[0].size() == 5);
  }
  SUBCASE("distinct scores: strict top-k, no ties") {
    CentralityScores s;
    s.measure = CentralityScores::Measure::Pagerank;
    s.scores = {0.1, 0.5, 0.2, 0.15, 0.05};
    const RankedTable t = rank_table(s, g, 2);
    REQUIRE(t.top.size() == 2);
    CHECK(t.top[0].node_id == "n1");
    CHECK(t.top[1].node_id == "n2");
    CHECK(t.ties.empty());
  }
  SUBCASE("boundary tie group is reported in full") {
    CentralityScores s;
    s.measure = CentralityScores::Measure::Betweenness;
    s.scores = {9, 7, 7, 7, 1};
    const RankedTable t = rank_table(s, g, 2);
    REQUIRE(t.top.size() == 2);
    CHECK(t.top[1].node_id == "n1");
    REQUIRE(t.ties.size() == 1);
    CHECK(t.ties[0] == std::vector<std::string>{"n1", "n2", "n3"});
  }
  SUBCASE("k是 clamped to n") {
    CentralityScores s;
    s.measure = CentralityScores::Measure::Degree;
    s.scores = {1, 2, 3, 4, 5};
    CHECK(rank_table(s, g, 50).top.size() == 5);
    CHECK_THROWS_AS(rank_table(s, g, 0), std::invalid_argument);
  }
}
