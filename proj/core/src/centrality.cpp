#include "genenet/centrality.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <stdexcept>

#include "genenet/csv.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace genenet {

std::string_view to_string(CentralityScores::Measure m) {
  switch (m) {
    case CentralityScores::Measure::Degree: return "degree";
    case CentralityScores::Measure::Eigenvector: return "eigenvector";
    case CentralityScores::Measure::Pagerank: return "pagerank";
    case CentralityScores::Measure::Betweenness: return "betweenness";
  }
  return "?";
}

CentralityScores degree_centrality(const SparseGraph& g) {
  CentralityScores s;
  s.measure = CentralityScores::Measure::Degree;
  s.scores.assign(g.n_nodes, 0.0);
  for (const auto& [u, v] : g.edges) {
    s.scores[u] += 1.0;
    s.scores[v] += 1.0;
  }
  return s;
}

CentralityScores eigenvector_centrality(const SparseGraph& g, double tol, long max_iter) {
  CentralityScores s;
  s.measure = CentralityScores::Measure::Eigenvector;
  s.tol = tol;
  s.max_iter = max_iter;
  s.scores.assign(g.n_nodes, 0.0);
  if (g.n_nodes == 0) return s;

  const Csr csr = build_csr(g);
  const std::vector<int32_t> lcc = largest_component(csr);

  std::vector<double> x(g.n_nodes, 0.0), next(g.n_nodes, 0.0);
  const double init = 1.0 / std::sqrt(static_cast<double>(lcc.size()));
  for (int32_t v : lcc) x[v] = init;

  // Iterating on A + I keeps the dominant eigenpair of the component but
  // rules out the period-2 oscillation a bipartite component would produce.
  for (long it = 1; it <= max_iter; ++it) {
    for (int32_t v : lcc) {
      double acc = x[v];
      for (int64_t k = csr.offsets[v]; k < csr.offsets[v + 1]; ++k) {
        acc += x[csr.neighbors[k]];
      }
      next[v] = acc;
    }
    double norm = 0.0;
    for (int32_t v : lcc) norm += next[v] * next[v];
    norm = std::sqrt(norm);
    double diff = 0.0;
    for (int32_t v : lcc) {
      next[v] /= norm;
      diff = std::max(diff, std::abs(next[v] - x[v]));
      x[v] = next[v];
    }
    s.iterations_run = it;
    s.residual = diff;
    if (diff < tol) {
      for (int32_t v : lcc) s.scores[v] = x[v];
      return s;
    }
  }
  throw std::runtime_error("eigenvector centrality did not converge in " +
                           std::to_string(max_iter) + " iterations (residual " +
                           std::to_string(s.residual) + ")");
}

CentralityScores pagerank(const SparseGraph& g, double damping, double tol, long max_iter) {
  if (!(damping > 0.0 && damping < 1.0)) {
    throw std::invalid_argument("damping must be in (0,1)");
  }
  CentralityScores s;
  s.measure = CentralityScores::Measure::Pagerank;
  s.damping = damping;
  s.tol = tol;
  s.max_iter = max_iter;
  const long n = g.n_nodes;
  s.scores.assign(n, 0.0);
  if (n == 0) return s;

  const Csr csr = build_csr(g);
  std::vector<double> x(n, 1.0 / n), next(n);
  const double teleport = (1.0 - damping) / n;

  for (long it = 1; it <= max_iter; ++it) {
    for (long v = 0; v < n; ++v) {
      double acc = 0.0;
      for (int64_t k = csr.offsets[v]; k < csr.offsets[v + 1]; ++k) {
        const int32_t u = csr.neighbors[k];
        acc += x[u] / static_cast<double>(csr.degree(u));
      }
      if (csr.degree(v) == 0) acc = x[v];  // dangling node keeps its mass
      next[v] = teleport + damping * acc;
    }
    double diff = 0.0;
    for (long v = 0; v < n; ++v) diff += std::abs(next[v] - x[v]);
    x.swap(next);
    s.iterations_run = it;
    s.residual = diff;
    if (diff < tol) {
      s.scores = x;
      return s;
    }
  }
  throw std::runtime_error("pagerank did not converge in " + std::to_string(max_iter) +
                           " iterations (residual " + std::to_string(s.residual) + ")");
}

namespace {

// One Brandes source sweep: BFS, then dependency accumulation scanning the
// visit order backwards. Predecessor sets are implicit (dist[u]+1==dist[w]).
void brandes_source(const Csr& csr, int32_t src, std::vector<int32_t>& order,
                    std::vector<int64_t>& dist, std::vector<double>& sigma,
                    std::vector<double>& delta, std::vector<double>& acc) {
  const long n = static_cast<long>(csr.offsets.size()) - 1;
  order.clear();
  std::fill(dist.begin(), dist.end(), -1);
  std::fill(sigma.begin(), sigma.end(), 0.0);
  std::fill(delta.begin(), delta.end(), 0.0);

  dist[src] = 0;
  sigma[src] = 1.0;
  order.push_back(src);
  for (size_t head = 0; head < order.size(); ++head) {
    const int32_t v = order[head];
    for (int64_t k = csr.offsets[v]; k < csr.offsets[v + 1]; ++k) {
      const int32_t w = csr.neighbors[k];
      if (dist[w] < 0) {
        dist[w] = dist[v] + 1;
        order.push_back(w);
      }
      if (dist[w] == dist[v] + 1) sigma[w] += sigma[v];
    }
  }
  for (size_t i = order.size(); i-- > 1;) {
    const int32_t w = order[i];
    for (int64_t k = csr.offsets[w]; k < csr.offsets[w + 1]; ++k) {
      const int32_t v = csr.neighbors[k];
      if (dist[v] + 1 == dist[w]) {
        delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w]);
      }
    }
    acc[w] += delta[w];
  }
  (void)n;
}

}  // namespace

CentralityScores betweenness(const SparseGraph& g, const BetweennessOptions& opt) {
  CentralityScores s;
  s.measure = CentralityScores::Measure::Betweenness;
  const long n = g.n_nodes;
  s.scores.assign(n, 0.0);
  if (n == 0) return s;

  std::vector<int32_t> sources;
  if (opt.exact) {
    sources.resize(n);
    std::iota(sources.begin(), sources.end(), 0);
  } else {
    if (opt.sample_count < 1 || opt.sample_count > n) {
      throw std::invalid_argument("sample_count must be in [1, n_nodes]");
    }
    s.sample_count = opt.sample_count;
    s.seed = opt.seed;
    std::vector<int32_t> all(n);
    std::iota(all.begin(), all.end(), 0);
    std::mt19937_64 rng(opt.seed);
    for (long i = 0; i < opt.sample_count; ++i) {
      std::uniform_int_distribution<long> pick(i, n - 1);
      std::swap(all[i], all[pick(rng)]);
    }
    sources.assign(all.begin(), all.begin() + opt.sample_count);
  }

  const Csr csr = build_csr(g);
  const long n_sources = static_cast<long>(sources.size());

#ifdef _OPENMP
  const int n_threads = omp_get_max_threads();
#else
  const int n_threads = 1;
#endif
  // Contiguous source blocks with per-block accumulators merged in block
  // order keep the result independent of scheduling.
  const long n_blocks = std::min<long>(n_sources, n_threads * 4);
  std::vector<std::vector<double>> partial(std::max<long>(n_blocks, 1));

#pragma omp parallel for schedule(dynamic)
  for (long b = 0; b < n_blocks; ++b) {
    const long lo = b * n_sources / n_blocks;
    const long hi = (b + 1) * n_sources / n_blocks;
    auto& acc = partial[b];
    acc.assign(n, 0.0);
    std::vector<int32_t> order;
    order.reserve(n);
    std::vector<int64_t> dist(n);
    std::vector<double> sigma(n), delta(n);
    for (long i = lo; i < hi; ++i) {
      brandes_source(csr, sources[i], order, dist, sigma, delta, acc);
    }
  }
  for (long b = 0; b < n_blocks; ++b) {
    if (partial[b].empty()) continue;
    for (long v = 0; v < n; ++v) s.scores[v] += partial[b][v];
  }

  // Each unordered pair contributes from both endpoints as sources in exact
  // mode; halve to count it once. The sampled estimator scales by n / k.
  const double scale = opt.exact ? 0.5
                                 : 0.5 * static_cast<double>(n) /
                                       static_cast<double>(opt.sample_count);
  for (double& v : s.scores) v *= scale;
  return s;
}

RankedTable rank_table(const CentralityScores& scores, const SparseGraph& g, long k) {
  if (k < 1) throw std::invalid_argument("k must be >= 1");
  const long n = static_cast<long>(scores.scores.size());
  if (n != g.n_nodes) throw std::invalid_argument("scores/graph size mismatch");
  k = std::min(k, n);

  std::vector<int32_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](int32_t a, int32_t b) {
    if (scores.scores[a] != scores.scores[b]) return scores.scores[a] > scores.scores[b];
    return a < b;
  });

  RankedTable t;
  t.measure = scores.measure;
  for (long r = 0; r < k; ++r) {
    t.top.push_back({r + 1, g.node_ids[idx[r]], scores.scores[idx[r]]});
  }

  // Report every score value inside the top-k that is shared by 2+ nodes.
  std::map<double, std::vector<std::string>, std::greater<double>> groups;
  for (long r = 0; r < k; ++r) {
    const double sc = scores.scores[idx[r]];
    if (groups.count(sc)) continue;
    std::vector<std::string> members;
    for (long v = 0; v < n; ++v) {
      if (scores.scores[v] == sc) members.push_back(g.node_ids[v]);
    }
    if (members.size() >= 2) groups[sc] = std::move(members);
  }
  for (auto& [sc, members] : groups) t.ties.push_back(std::move(members));
  return t;
}

void write_ranked_table_csv(const RankedTable& t, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "rank,node_id,score\n";
  for (const auto& e : t.top) {
    out << e.rank << ',' << e.node_id << ',' << csv::format_double(e.score) << '\n';
  }
}

void write_ranked_table_json(const RankedTable& t, const CentralityScores& scores,
                             const std::string& path) {
  nlohmann::json j;
  j["measure"] = std::string(to_string(t.measure));
  nlohmann::json top = nlohmann::json::array();
  for (const auto& e : t.top) {
    top.push_back({{"rank", e.rank}, {"node_id", e.node_id}, {"score", e.score}});
  }
  j["top"] = top;
  j["ties"] = t.ties;
  nlohmann::json params;
  switch (scores.measure) {
    case CentralityScores::Measure::Pagerank:
      params["damping"] = scores.damping;
      params["tol"] = scores.tol;
      params["max_iter"] = scores.max_iter;
      params["iterations_run"] = scores.iterations_run;
      params["dangling_policy"] = "self-loop";
      break;
    case CentralityScores::Measure::Eigenvector:
      params["tol"] = scores.tol;
      params["max_iter"] = scores.max_iter;
      params["iterations_run"] = scores.iterations_run;
      params["component"] = "largest";
      break;
    case CentralityScores::Measure::Betweenness:
      params["mode"] = scores.sample_count < 0 ? "exact" : "sampled";
      if (scores.sample_count >= 0) {
        params["sample_count"] = scores.sample_count;
        params["seed"] = scores.seed;
      }
      params["normalized"] = false;
      break;
    case CentralityScores::Measure::Degree:
      params["normalized"] = false;
      break;
  }
  j["params"] = params;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(2) << '\n';
}

void write_scores_csv(const CentralityScores& scores, const SparseGraph& g,
                      const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "node_id," << to_string(scores.measure) << '\n';
  for (long v = 0; v < g.n_nodes; ++v) {
    out << g.node_ids[v] << ',' << csv::format_double(scores.scores[v]) << '\n';
  }
}

}  // namespace genenet
