#include "genenet/exprgroup.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace genenet {

namespace {

constexpr const char* kGroupOrder = "0ABCD";

int group_index(char g) {
  for (int i = 0; i < 5; ++i) {
    if (kGroupOrder[i] == g) return i;
  }
  throw std::invalid_argument(std::string("unknown group label '") + g + "'");
}

// Node colors follow the published scheme so exported graphs read the same.
const char* group_color(char g) {
  switch (g) {
    case 'A': return "red";
    case 'B': return "yellow";
    case 'C': return "black";
    case 'D': return "blue";
    default: return "none";
  }
}

}  // namespace

std::vector<double> group_statistic(const ExpressionMatrix& m_all, CancerType c) {
  const Eigen::Index s = m_all.n_samples();
  const Eigen::Index g = m_all.n_genes();
  if (s < 2) throw std::invalid_argument("group_statistic needs >= 2 samples");

  std::vector<Eigen::Index> rows;
  for (Eigen::Index i = 0; i < s; ++i) {
    if (m_all.labels[i] == c) rows.push_back(i);
  }
  if (rows.empty()) {
    throw std::invalid_argument(std::string("no samples of type ") +
                                std::string(to_string(c)));
  }

  std::vector<double> stats(g);
  for (Eigen::Index j = 0; j < g; ++j) {
    const auto col = m_all.values.col(j);
    const double mu = col.mean();
    const double sigma = std::sqrt((col.array() - mu).square().sum() /
                                   static_cast<double>(s));
    if (sigma <= 0.0) {
      stats[j] = std::numeric_limits<double>::quiet_NaN();
      continue;
    }
    double acc = 0.0;
    for (Eigen::Index i : rows) acc += (m_all.values(i, j) - mu) / sigma;
    stats[j] = acc / static_cast<double>(rows.size());
  }
  return stats;
}

GroupAssignment assign_groups(const std::vector<double>& stats,
                              const std::vector<std::string>& gene_ids,
                              CancerType cancer_type,
                              const std::array<double, 4>& edges) {
  if (stats.size() != gene_ids.size()) {
    throw std::invalid_argument("stats/gene_ids length mismatch");
  }
  for (int i = 0; i + 1 < 4; ++i) {
    if (!(edges[i] < edges[i + 1])) {
      throw std::invalid_argument("bin edges must be strictly increasing");
    }
  }
  GroupAssignment a;
  a.cancer_type = cancer_type;
  a.gene_ids = gene_ids;
  a.bin_edges = edges;
  a.groups.resize(stats.size());
  for (size_t j = 0; j < stats.size(); ++j) {
    const double v = stats[j];
    if (std::isnan(v)) {
      a.groups[j] = '0';
    } else if (v < edges[1]) {  // the lower bound of A is open-ended
      a.groups[j] = 'A';
    } else if (v < edges[2]) {
      a.groups[j] = 'B';
    } else if (v < edges[3]) {
      a.groups[j] = 'C';
    } else {
      a.groups[j] = 'D';
    }
  }
  return a;
}

GroupGraph build_group_graph(const GroupAssignment& a) {
  GroupGraph gg;
  gg.assignment = a;
  std::array<long, 5> members{};
  for (char g : a.groups) members[group_index(g)]++;
  for (int gi = 0; gi < 5; ++gi) {
    if (members[gi] == 0) continue;
    GroupComponents c;
    c.group = kGroupOrder[gi];
    c.members = members[gi];
    c.components = gi == 0 ? members[gi] : 1;
    c.largest = gi == 0 ? 1 : members[gi];
    gg.component_summary.push_back(c);
  }
  return gg;
}

SparseGraph GroupGraph::materialize(long max_clique_size) const {
  SparseGraph g;
  g.n_nodes = static_cast<long>(assignment.gene_ids.size());
  g.node_ids = assignment.gene_ids;
  g.node_kind = SparseGraph::NodeKind::Gene;
  g.build_meta.rule = "same_group_clique";
  g.build_meta.source_label = std::string(to_string(assignment.cancer_type));

  for (char group : {'A', 'B', 'C', 'D'}) {
    std::vector<int32_t> idx;
    for (size_t j = 0; j < assignment.groups.size(); ++j) {
      if (assignment.groups[j] == group) idx.push_back(static_cast<int32_t>(j));
    }
    if (static_cast<long>(idx.size()) > max_clique_size) continue;
    for (size_t a = 0; a < idx.size(); ++a) {
      for (size_t b = a + 1; b < idx.size(); ++b) {
        g.edges.emplace_back(idx[a], idx[b]);
      }
    }
  }
  std::sort(g.edges.begin(), g.edges.end());
  return g;
}

void GroupGraph::write_graphml(const std::string& path, long max_clique_size) const {
  const SparseGraph g = materialize(max_clique_size);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\">\n"
      << "  <key id=\"d0\" for=\"node\" attr.name=\"group\" attr.type=\"string\"/>\n"
      << "  <key id=\"d1\" for=\"node\" attr.name=\"color\" attr.type=\"string\"/>\n"
      << "  <graph id=\"G\" edgedefault=\"undirected\">\n";
  for (long v = 0; v < g.n_nodes; ++v) {
    const char group = assignment.groups[v];
    out << "    <node id=\"" << g.node_ids[v] << "\">\n"
        << "      <data key=\"d0\">" << group << "</data>\n"
        << "      <data key=\"d1\">" << group_color(group) << "</data>\n"
        << "    </node>\n";
  }
  for (size_t k = 0; k < g.edges.size(); ++k) {
    out << "    <edge id=\"e" << k << "\" source=\"" << g.node_ids[g.edges[k].first]
        << "\" target=\"" << g.node_ids[g.edges[k].second] << "\"/>\n";
  }
  out << "  </graph>\n</graphml>\n";
}

ConservationReport compare_grouping(const GroupAssignment& a1, const GroupAssignment& a2) {
  if (a1.gene_ids != a2.gene_ids) {
    throw std::invalid_argument("compare_grouping: gene id lists differ");
  }
  ConservationReport r;
  const long n = static_cast<long>(a1.groups.size());
  long diag = 0;
  for (long j = 0; j < n; ++j) {
    const int g1 = group_index(a1.groups[j]);
    const int g2 = group_index(a2.groups[j]);
    r.contingency[g1][g2]++;
    if (g1 == g2) diag++;
  }
  r.agreement = n > 0 ? static_cast<double>(diag) / static_cast<double>(n) : 0.0;

  // Adjusted Rand index from the contingency table.
  auto choose2 = [](long v) { return 0.5 * static_cast<double>(v) * (v - 1); };
  double sum_ij = 0.0, sum_a = 0.0, sum_b = 0.0;
  for (int i = 0; i < 5; ++i) {
    long row = 0, col = 0;
    for (int j = 0; j < 5; ++j) {
      sum_ij += choose2(r.contingency[i][j]);
      row += r.contingency[i][j];
      col += r.contingency[j][i];
    }
    sum_a += choose2(row);
    sum_b += choose2(col);
  }
  const double total_pairs = choose2(n);
  if (total_pairs > 0.0) {
    const double expected = sum_a * sum_b / total_pairs;
    const double max_index = 0.5 * (sum_a + sum_b);
    r.adjusted_rand = max_index == expected
                          ? 1.0
                          : (sum_ij - expected) / (max_index - expected);
  } else {
    r.adjusted_rand = 1.0;
  }
  return r;
}

void write_group_assignment(const GroupAssignment& a, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "gene_id,group\n";
  for (size_t j = 0; j < a.gene_ids.size(); ++j) {
    out << a.gene_ids[j] << ',' << a.groups[j] << '\n';
  }
}

void write_conservation_json(const ConservationReport& r, const std::string& type1,
                             const std::string& type2, const std::string& path) {
  nlohmann::json j;
  j["type1"] = type1;
  j["type2"] = type2;
  j["groups"] = {"0", "A", "B", "C", "D"};
  nlohmann::json table = nlohmann::json::array();
  for (int i = 0; i < 5; ++i) {
    table.push_back(std::vector<long>(r.contingency[i].begin(), r.contingency[i].end()));
  }
  j["contingency"] = table;
  j["agreement"] = r.agreement;
  j["adjusted_rand"] = r.adjusted_rand;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(2) << '\n';
}

}  // namespace genenet
