#include "genenet/graph.hpp"

#include <algorithm>
#include <fstream>
#include <stdexcept>
#include <unordered_map>

#include "genenet/csv.hpp"

namespace genenet {

void SparseGraph::validate() const {
  if (n_nodes < 0) throw std::invalid_argument("negative node count");
  if (node_ids.size() != static_cast<size_t>(n_nodes)) {
    throw std::invalid_argument("node_ids length != n_nodes");
  }
  for (size_t k = 0; k < edges.size(); ++k) {
    const auto [u, v] = edges[k];
    if (u >= v) throw std::invalid_argument("edge not normalized to u < v (or self-loop)");
    if (u < 0 || v >= n_nodes) throw std::invalid_argument("edge endpoint out of range");
    if (k > 0 && edges[k - 1] == edges[k]) throw std::invalid_argument("duplicate edge");
  }
}

Csr build_csr(const SparseGraph& g) {
  Csr csr;
  csr.offsets.assign(g.n_nodes + 1, 0);
  for (const auto& [u, v] : g.edges) {
    csr.offsets[u + 1]++;
    csr.offsets[v + 1]++;
  }
  for (long i = 0; i < g.n_nodes; ++i) csr.offsets[i + 1] += csr.offsets[i];
  csr.neighbors.resize(2 * g.edges.size());
  std::vector<int64_t> cursor(csr.offsets.begin(), csr.offsets.end() - 1);
  for (const auto& [u, v] : g.edges) {
    csr.neighbors[cursor[u]++] = v;
    csr.neighbors[cursor[v]++] = u;
  }
  for (long i = 0; i < g.n_nodes; ++i) {
    std::sort(csr.neighbors.begin() + csr.offsets[i],
              csr.neighbors.begin() + csr.offsets[i + 1]);
  }
  return csr;
}

std::map<long, long> degree_distribution(const SparseGraph& g) {
  std::vector<long> deg(g.n_nodes, 0);
  for (const auto& [u, v] : g.edges) {
    deg[u]++;
    deg[v]++;
  }
  std::map<long, long> hist;
  for (long d : deg) hist[d]++;
  return hist;
}

long count_non_isolated(const SparseGraph& g) {
  std::vector<char> seen(g.n_nodes, 0);
  for (const auto& [u, v] : g.edges) {
    seen[u] = 1;
    seen[v] = 1;
  }
  long n = 0;
  for (char c : seen) n += c;
  return n;
}

std::vector<int32_t> connected_components(const Csr& csr) {
  const long n = static_cast<long>(csr.offsets.size()) - 1;
  std::vector<int32_t> comp(n, -1);
  std::vector<int32_t> stack;
  int32_t next = 0;
  for (long s = 0; s < n; ++s) {
    if (comp[s] >= 0) continue;
    comp[s] = next;
    stack.push_back(static_cast<int32_t>(s));
    while (!stack.empty()) {
      const int32_t v = stack.back();
      stack.pop_back();
      for (int64_t k = csr.offsets[v]; k < csr.offsets[v + 1]; ++k) {
        const int32_t w = csr.neighbors[k];
        if (comp[w] < 0) {
          comp[w] = next;
          stack.push_back(w);
        }
      }
    }
    ++next;
  }
  return comp;
}

std::vector<int32_t> largest_component(const Csr& csr) {
  const auto comp = connected_components(csr);
  if (comp.empty()) return {};
  std::unordered_map<int32_t, long> sizes;
  for (int32_t c : comp) sizes[c]++;
  // Components are numbered by first occurrence, so the smallest id wins ties.
  int32_t best = 0;
  long best_size = -1;
  for (int32_t c = 0; c < static_cast<int32_t>(sizes.size()); ++c) {
    if (sizes[c] > best_size) {
      best = c;
      best_size = sizes[c];
    }
  }
  std::vector<int32_t> nodes;
  nodes.reserve(best_size);
  for (int32_t v = 0; v < static_cast<int32_t>(comp.size()); ++v) {
    if (comp[v] == best) nodes.push_back(v);
  }
  return nodes;
}

void write_edge_list(const SparseGraph& g, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "source,target\n";
  for (const auto& [u, v] : g.edges) {
    out << g.node_ids[u] << ',' << g.node_ids[v] << '\n';
  }
}

void write_node_list(const SparseGraph& g, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (const auto& id : g.node_ids) out << id << '\n';
}

SparseGraph read_edge_list(const std::string& path, const std::string& nodes_path,
                           SparseGraph::NodeKind kind) {
  SparseGraph g;
  g.node_kind = kind;
  std::unordered_map<std::string, int32_t> index;
  auto intern = [&](const std::string& id) {
    auto [it, inserted] = index.emplace(id, static_cast<int32_t>(g.node_ids.size()));
    if (inserted) g.node_ids.push_back(id);
    return it->second;
  };

  if (!nodes_path.empty()) {
    std::ifstream in(nodes_path);
    if (!in) throw std::runtime_error("cannot open node list: " + nodes_path);
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!line.empty()) intern(line);
    }
  }

  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open edge list: " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty edge list: " + path);
  long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    auto fields = csv::split_line(line);
    if (fields.size() != 2) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": expected 2 fields");
    }
    int32_t u = intern(fields[0]);
    int32_t v = intern(fields[1]);
    if (u == v) continue;
    if (u > v) std::swap(u, v);
    g.edges.emplace_back(u, v);
  }
  g.n_nodes = static_cast<long>(g.node_ids.size());
  std::sort(g.edges.begin(), g.edges.end());
  g.edges.erase(std::unique(g.edges.begin(), g.edges.end()), g.edges.end());
  g.validate();
  return g;
}

namespace {

std::string xml_escape(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

void write_graphml(const SparseGraph& g, const std::string& path,
                   const std::string& node_attr_name,
                   const std::vector<std::string>* node_attr) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\">\n";
  const bool with_attr = !node_attr_name.empty() && node_attr != nullptr;
  if (with_attr) {
    out << "  <key id=\"d0\" for=\"node\" attr.name=\"" << xml_escape(node_attr_name)
        << "\" attr.type=\"string\"/>\n";
  }
  out << "  <graph id=\"G\" edgedefault=\"undirected\">\n";
  for (long v = 0; v < g.n_nodes; ++v) {
    out << "    <node id=\"" << xml_escape(g.node_ids[v]) << "\"";
    if (with_attr) {
      out << ">\n      <data key=\"d0\">" << xml_escape((*node_attr)[v])
          << "</data>\n    </node>\n";
    } else {
      out << "/>\n";
    }
  }
  for (size_t k = 0; k < g.edges.size(); ++k) {
    const auto& [u, v] = g.edges[k];
    out << "    <edge id=\"e" << k << "\" source=\"" << xml_escape(g.node_ids[u])
        << "\" target=\"" << xml_escape(g.node_ids[v]) << "\"/>\n";
  }
  out << "  </graph>\n</graphml>\n";
}

void write_degree_histogram(const SparseGraph& g, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "degree,count\n";
  for (const auto& [d, c] : degree_distribution(g)) {
    out << d << ',' << c << '\n';
  }
}

}  // namespace genenet
