#include "genenet/hcluster.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "genenet/csv.hpp"

namespace genenet {

std::string_view to_string(Linkage l) {
  switch (l) {
    case Linkage::Ward: return "ward";
    case Linkage::Average: return "average";
    case Linkage::Complete: return "complete";
    case Linkage::Single: return "single";
  }
  return "?";
}

void Dendrogram::validate() const {
  if (static_cast<int>(merges.size()) != n_leaves - 1) {
    throw std::invalid_argument("dendrogram must have n_leaves - 1 merges");
  }
  std::vector<int> size_of(2 * n_leaves - 1, 1);
  std::vector<char> used(2 * n_leaves - 1, 0);
  for (size_t t = 0; t < merges.size(); ++t) {
    const auto& m = merges[t];
    const int id = n_leaves + static_cast<int>(t);
    if (m.left < 0 || m.right < 0 || m.left >= id || m.right >= id || m.left == m.right) {
      throw std::invalid_argument("merge children out of range");
    }
    if (used[m.left] || used[m.right]) {
      throw std::invalid_argument("cluster merged twice");
    }
    used[m.left] = used[m.right] = 1;
    size_of[id] = size_of[m.left] + size_of[m.right];
    if (m.size != size_of[id]) throw std::invalid_argument("inconsistent merge size");
    if (t > 0 && m.height < merges[t - 1].height - 1e-9 * std::abs(merges[t - 1].height)) {
      throw std::invalid_argument("merge heights decrease");
    }
  }
  if (leaf_order.size() != static_cast<size_t>(n_leaves)) {
    throw std::invalid_argument("leaf_order must cover every leaf");
  }
  std::vector<char> seen(n_leaves, 0);
  for (int v : leaf_order) {
    if (v < 0 || v >= n_leaves || seen[v]) {
      throw std::invalid_argument("leaf_order is not a permutation");
    }
    seen[v] = 1;
  }
}

Dendrogram hierarchical_cluster(const Eigen::MatrixXd& points, Linkage linkage) {
  const int s = static_cast<int>(points.rows());
  if (s < 2) throw std::invalid_argument("hierarchical clustering needs >= 2 samples");

  // Ward's recurrence operates on squared Euclidean distances; heights are
  // reported in Euclidean units (square root of the recurrence value).
  const bool squared = linkage == Linkage::Ward;

  Eigen::MatrixXd dist(s, s);
  for (int i = 0; i < s; ++i) {
    dist(i, i) = 0.0;
    for (int j = i + 1; j < s; ++j) {
      const double d2 = (points.row(i) - points.row(j)).squaredNorm();
      const double d = squared ? d2 : std::sqrt(d2);
      dist(i, j) = d;
      dist(j, i) = d;
    }
  }

  std::vector<int> cluster_id(s);   // slot -> dendrogram id
  std::vector<int> cluster_size(s, 1);
  std::vector<char> active(s, 1);
  std::iota(cluster_id.begin(), cluster_id.end(), 0);

  Dendrogram dend;
  dend.n_leaves = s;
  dend.merges.reserve(s - 1);

  for (int step = 0; step < s - 1; ++step) {
    int bi = -1, bj = -1;
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < s; ++i) {
      if (!active[i]) continue;
      for (int j = i + 1; j < s; ++j) {
        if (!active[j]) continue;
        if (dist(i, j) < best) {
          best = dist(i, j);
          bi = i;
          bj = j;
        }
      }
    }

    const int na = cluster_size[bi];
    const int nb = cluster_size[bj];
    const double d_ab = dist(bi, bj);
    for (int k = 0; k < s; ++k) {
      if (!active[k] || k == bi || k == bj) continue;
      const double d_ak = dist(bi, k);
      const double d_bk = dist(bj, k);
      double d_new = 0.0;
      switch (linkage) {
        case Linkage::Single:
          d_new = std::min(d_ak, d_bk);
          break;
        case Linkage::Complete:
          d_new = std::max(d_ak, d_bk);
          break;
        case Linkage::Average:
          d_new = (na * d_ak + nb * d_bk) / static_cast<double>(na + nb);
          break;
        case Linkage::Ward: {
          const double nk = cluster_size[k];
          d_new = ((na + nk) * d_ak + (nb + nk) * d_bk - nk * d_ab) /
                  static_cast<double>(na + nb + nk);
          break;
        }
      }
      dist(bi, k) = d_new;
      dist(k, bi) = d_new;
    }

    Dendrogram::Merge m;
    m.left = std::min(cluster_id[bi], cluster_id[bj]);
    m.right = std::max(cluster_id[bi], cluster_id[bj]);
    m.height = squared ? std::sqrt(std::max(d_ab, 0.0)) : d_ab;
    m.size = na + nb;
    dend.merges.push_back(m);

    cluster_id[bi] = s + step;
    cluster_size[bi] = na + nb;
    active[bj] = 0;
  }

  // Leaf order by depth-first traversal of the final tree, left child first.
  dend.leaf_order.reserve(s);
  std::vector<int> stack = {2 * s - 2};
  while (!stack.empty()) {
    const int id = stack.back();
    stack.pop_back();
    if (id < s) {
      dend.leaf_order.push_back(id);
    } else {
      const auto& m = dend.merges[id - s];
      stack.push_back(m.right);
      stack.push_back(m.left);
    }
  }

  dend.validate();
  return dend;
}

std::vector<int> cut_dendrogram(const Dendrogram& dend, double height) {
  const int s = dend.n_leaves;
  std::vector<int> parent(s);
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int v) {
    while (parent[v] != v) {
      parent[v] = parent[parent[v]];
      v = parent[v];
    }
    return v;
  };

  // rep[id] = one leaf under dendrogram node id.
  std::vector<int> rep(2 * s - 1, -1);
  for (int i = 0; i < s; ++i) rep[i] = i;
  for (size_t t = 0; t < dend.merges.size(); ++t) {
    const auto& m = dend.merges[t];
    rep[s + t] = rep[m.left];
    if (m.height <= height) {
      parent[find(rep[m.left])] = find(rep[m.right]);
    }
  }

  std::vector<int> label(s, -1);
  int next = 0;
  std::vector<int> root_label(s, -1);
  for (int i = 0; i < s; ++i) {
    const int r = find(i);
    if (root_label[r] < 0) root_label[r] = next++;
    label[i] = root_label[r];
  }
  return label;
}

void write_merge_table(const Dendrogram& dend, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "step,left,right,height,size\n";
  for (size_t t = 0; t < dend.merges.size(); ++t) {
    const auto& m = dend.merges[t];
    out << t << ',' << m.left << ',' << m.right << ','
        << csv::format_double(m.height) << ',' << m.size << '\n';
  }
}

}  // namespace genenet
