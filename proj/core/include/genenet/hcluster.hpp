// Agglomerative hierarchical clustering (Euclidean metric) with
// Lance-Williams distance updates, and height-based dendrogram cutting.

#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace genenet {

enum class Linkage { Ward, Average, Complete, Single };

std::string_view to_string(Linkage l);

struct Dendrogram {
  // Children indices follow the usual convention: values < n_leaves are
  // original samples, n_leaves + t is the cluster created by merge t.
  struct Merge {
    int left;
    int right;
    double height;
    int size;  // leaves under the merged cluster
  };
  std::vector<Merge> merges;   // n_leaves - 1 entries
  std::vector<int> leaf_order; // permutation of 0..n_leaves-1
  int n_leaves = 0;

  void validate() const;
};

Dendrogram hierarchical_cluster(const Eigen::MatrixXd& points, Linkage linkage);

// Samples end up in one cluster iff they are joined at height <= cut.
// Labels are contiguous integers ordered by first occurrence.
std::vector<int> cut_dendrogram(const Dendrogram& dend, double height);

void write_merge_table(const Dendrogram& dend, const std::string& path);

}  // namespace genenet
