// Expression matrix loading, validation, labeling, subsetting and
// normalization. Every downstream module consumes these outputs.
//
// Canonical on-disk format (matches the UCI RNA-Seq distribution):
//   data file   : header ",gene_0,gene_1,..."; one row per sample,
//                 first field the sample id, remaining fields the levels.
//   labels file : header ",Class"; rows "sample_id,BRCA".

#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <vector>

#include "genenet/cancer_type.hpp"

namespace genenet {

class DataError : public std::runtime_error {
 public:
  enum class Kind {
    MissingFile,
    RaggedRow,
    NonNumericCell,
    DuplicateId,
    LabelMismatch,
    UnknownLabel,
    EmptyMatrix,
    EmptySubset,
  };

  DataError(Kind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

// S x G matrix of non-negative expression levels plus row/column identity.
// Immutable after construction; safe for concurrent reads.
struct ExpressionMatrix {
  Eigen::MatrixXd values;               // S rows (samples) x G cols (genes)
  std::vector<std::string> sample_ids;  // length S, unique
  std::vector<std::string> gene_ids;    // length G, unique
  std::vector<CancerType> labels;       // length S

  Eigen::Index n_samples() const { return values.rows(); }
  Eigen::Index n_genes() const { return values.cols(); }

  // Throws DataError if any structural invariant is violated.
  void validate() const;

  // Count of samples per class, canonical order.
  std::array<Eigen::Index, kCancerTypeCount> label_histogram() const;
};

struct NormalizationSpec {
  enum class Mode { None, CenterColumns, ZscoreColumns };
  Mode mode = Mode::None;
  int ddof = 0;  // degrees-of-freedom convention for the variance
};

struct NormalizeResult {
  ExpressionMatrix matrix;
  // Columns with zero variance under zscore; emitted as all-zero.
  std::vector<Eigen::Index> constant_columns;
};

ExpressionMatrix load_dataset(const std::string& data_path,
                              const std::string& labels_path);

void save_dataset(const ExpressionMatrix& m, const std::string& data_path,
                  const std::string& labels_path);

// JSON sidecar: dimensions, label histogram, normalization applied.
void write_sidecar(const ExpressionMatrix& m, const NormalizationSpec& spec,
                   const std::string& path);

ExpressionMatrix subset_by_label(const ExpressionMatrix& m, CancerType c);

NormalizeResult normalize(const ExpressionMatrix& m, const NormalizationSpec& spec);

}  // namespace genenet
