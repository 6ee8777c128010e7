// Per-gene multinomial logistic screening against a baseline cancer type:
// one single-predictor model per gene, Wald p-values per contrast, and
// significance filtering with Manhattan-plot export.

#pragma once

#include <string>
#include <vector>

#include "genenet/expr.hpp"

namespace genenet {

enum class ScreenStatus { Ok, DegenerateConstant, SeparatedNonconverged };

std::string_view to_string(ScreenStatus s);

struct ContrastResult {
  CancerType contrast;    // the non-baseline class of this log-odds equation
  double beta = 0.0;      // slope on the original expression scale
  double intercept = 0.0;
  double std_err = 0.0;
  double p_value = 1.0;   // two-sided Wald
};

struct GeneScreenResult {
  std::string gene_id;
  std::vector<ContrastResult> contrasts;  // classes present minus baseline
  ScreenStatus status = ScreenStatus::Ok;
};

GeneScreenResult screen_gene(const ExpressionMatrix& m, Eigen::Index gene_index,
                             CancerType baseline);

// One result per gene, order fixed by gene index; per-gene fits run in
// parallel and individual failures never abort the batch.
std::vector<GeneScreenResult> screen_all(const ExpressionMatrix& m, CancerType baseline);

enum class SelectionRule { AnyContrast, AllContrasts };

std::string_view to_string(SelectionRule r);

struct ManhattanPoint {
  long gene_position;
  CancerType contrast;
  double neg_log10_p;  // capped at 300
  bool selected;
};

struct SelectionReport {
  double alpha = 0.0;
  SelectionRule rule = SelectionRule::AllContrasts;
  std::vector<std::string> selected_gene_ids;
  std::vector<ManhattanPoint> manhattan;
  long count_any_contrast = 0;  // both rules' totals, for the record
  long count_all_contrasts = 0;
};

SelectionReport select_genes(const std::vector<GeneScreenResult>& results,
                             double alpha, SelectionRule rule);

// CSV of (contrast, gene position, -log10 p, selected); metadata rows carry
// alpha and the -log10(alpha) threshold line.
void manhattan_export(const SelectionReport& report, const std::string& path);

void write_screen_results(const std::vector<GeneScreenResult>& results,
                          const std::string& path);
void write_selection_json(const SelectionReport& report, const std::string& path);

}  // namespace genenet
