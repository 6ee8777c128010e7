// Expression-level grouping: per-gene within-type means of globally
// z-scored expression, binned into the five groups {0, A, B, C, D};
// same-group adjacency networks and cross-type conservation reports.

#pragma once

#include <array>
#include <string>
#include <vector>

#include "genenet/expr.hpp"
#include "genenet/graph.hpp"

namespace genenet {

// Default bin boundaries: A below -2, B in [-2, 2), C in [2, 8), D from 8 up.
inline constexpr std::array<double, 4> kDefaultGroupEdges = {-10.0, -2.0, 2.0, 8.0};

struct GroupAssignment {
  CancerType cancer_type;
  std::vector<std::string> gene_ids;
  std::vector<char> groups;  // '0', 'A', 'B', 'C' or 'D' per gene
  std::array<double, 4> bin_edges;
};

// For each gene: mean over samples of type c of the globally z-normalized
// expression (mean/sigma over all samples). Genes constant across the whole
// cohort get NaN (missing; group 0 downstream).
std::vector<double> group_statistic(const ExpressionMatrix& m_all, CancerType c);

// Half-open bins [e1,e2) -> A, [e2,e3) -> B, [e3,e4) -> C, [e4,inf) -> D;
// values below e1 clamp to A; missing (NaN) -> 0.
GroupAssignment assign_groups(const std::vector<double>& stats,
                              const std::vector<std::string>& gene_ids,
                              CancerType cancer_type,
                              const std::array<double, 4>& edges = kDefaultGroupEdges);

struct GroupComponents {
  char group;
  long members;
  long components;  // group 0 genes are isolated; other groups form one clique
  long largest;
};

struct GroupGraph {
  GroupAssignment assignment;
  std::vector<GroupComponents> component_summary;

  // Explicit clique edges; groups larger than max_clique_size export as
  // membership only (a full clique there is quadratic and adds nothing).
  SparseGraph materialize(long max_clique_size = 2000) const;
  void write_graphml(const std::string& path, long max_clique_size = 2000) const;
};

GroupGraph build_group_graph(const GroupAssignment& a);

struct ConservationReport {
  // contingency[g1][g2]: genes in group g1 under type 1 and g2 under type 2,
  // groups ordered 0, A, B, C, D.
  std::array<std::array<long, 5>, 5> contingency{};
  double agreement = 0.0;     // trace / total
  double adjusted_rand = 0.0;
};

ConservationReport compare_grouping(const GroupAssignment& a1, const GroupAssignment& a2);

void write_group_assignment(const GroupAssignment& a, const std::string& path);
void write_conservation_json(const ConservationReport& r, const std::string& type1,
                             const std::string& type2, const std::string& path);

}  // namespace genenet
