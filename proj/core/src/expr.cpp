#include "genenet/expr.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <unordered_map>
#include <unordered_set>

#include "genenet/csv.hpp"

namespace genenet {

namespace {

void check_unique(const std::vector<std::string>& ids, const char* what) {
  std::unordered_set<std::string_view> seen;
  seen.reserve(ids.size());
  for (const auto& id : ids) {
    if (!seen.insert(id).second) {
      throw DataError(DataError::Kind::DuplicateId,
                      std::string("duplicate ") + what + " id: " + id);
    }
  }
}

std::ifstream open_or_throw(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw DataError(DataError::Kind::MissingFile, "cannot open file: " + path);
  }
  return in;
}

}  // namespace

void ExpressionMatrix::validate() const {
  if (values.rows() == 0 || values.cols() == 0) {
    throw DataError(DataError::Kind::EmptyMatrix, "matrix has no samples or no genes");
  }
  if (static_cast<Eigen::Index>(sample_ids.size()) != values.rows()) {
    throw DataError(DataError::Kind::LabelMismatch, "sample_ids length != row count");
  }
  if (static_cast<Eigen::Index>(gene_ids.size()) != values.cols()) {
    throw DataError(DataError::Kind::LabelMismatch, "gene_ids length != column count");
  }
  if (labels.size() != sample_ids.size()) {
    throw DataError(DataError::Kind::LabelMismatch, "labels length != sample count");
  }
  check_unique(sample_ids, "sample");
  check_unique(gene_ids, "gene");
}

std::array<Eigen::Index, kCancerTypeCount> ExpressionMatrix::label_histogram() const {
  std::array<Eigen::Index, kCancerTypeCount> hist{};
  for (CancerType t : labels) hist[static_cast<int>(t)]++;
  return hist;
}

ExpressionMatrix load_dataset(const std::string& data_path,
                              const std::string& labels_path) {
  // Labels first: sample id -> class.
  std::unordered_map<std::string, CancerType> label_map;
  {
    std::ifstream in = open_or_throw(labels_path);
    std::string line;
    if (!std::getline(in, line)) {
      throw DataError(DataError::Kind::EmptyMatrix, "labels file is empty: " + labels_path);
    }
    long line_no = 1;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty() || line == "\r") continue;
      auto fields = csv::split_line(line);
      if (fields.size() != 2) {
        throw DataError(DataError::Kind::RaggedRow,
                        labels_path + ":" + std::to_string(line_no) +
                            ": expected 2 fields, got " + std::to_string(fields.size()));
      }
      auto t = parse_cancer_type(fields[1]);
      if (!t) {
        throw DataError(DataError::Kind::UnknownLabel,
                        labels_path + ":" + std::to_string(line_no) +
                            ": unknown class label '" + fields[1] + "'");
      }
      if (!label_map.emplace(fields[0], *t).second) {
        throw DataError(DataError::Kind::DuplicateId,
                        labels_path + ": duplicate sample id: " + fields[0]);
      }
    }
  }

  ExpressionMatrix m;
  std::vector<double> cells;  // row-major staging
  {
    std::ifstream in = open_or_throw(data_path);
    std::string line;
    if (!std::getline(in, line)) {
      throw DataError(DataError::Kind::EmptyMatrix, "data file is empty: " + data_path);
    }
    auto header = csv::split_line(line);
    if (header.size() < 2) {
      throw DataError(DataError::Kind::EmptyMatrix, data_path + ": header has no gene columns");
    }
    m.gene_ids.assign(header.begin() + 1, header.end());
    const size_t n_genes = m.gene_ids.size();

    long line_no = 1;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty() || line == "\r") continue;
      auto fields = csv::split_line(line);
      if (fields.size() != n_genes + 1) {
        throw DataError(DataError::Kind::RaggedRow,
                        data_path + ":" + std::to_string(line_no) + ": expected " +
                            std::to_string(n_genes + 1) + " fields, got " +
                            std::to_string(fields.size()));
      }
      m.sample_ids.push_back(fields[0]);
      for (size_t j = 1; j < fields.size(); ++j) {
        double v;
        if (!csv::parse_double(fields[j], v)) {
          throw DataError(DataError::Kind::NonNumericCell,
                          data_path + ":" + std::to_string(line_no) +
                              ": non-numeric cell '" + fields[j] + "' in column " +
                              m.gene_ids[j - 1]);
        }
        cells.push_back(v);
      }
    }
  }

  const auto S = static_cast<Eigen::Index>(m.sample_ids.size());
  const auto G = static_cast<Eigen::Index>(m.gene_ids.size());
  if (S == 0) {
    throw DataError(DataError::Kind::EmptyMatrix, data_path + ": no sample rows");
  }
  m.values.resize(S, G);
  for (Eigen::Index i = 0; i < S; ++i)
    for (Eigen::Index j = 0; j < G; ++j)
      m.values(i, j) = cells[static_cast<size_t>(i) * G + j];

  m.labels.reserve(S);
  for (const auto& id : m.sample_ids) {
    auto it = label_map.find(id);
    if (it == label_map.end()) {
      throw DataError(DataError::Kind::LabelMismatch,
                      "sample '" + id + "' present in data but missing from labels");
    }
    m.labels.push_back(it->second);
  }
  if (label_map.size() != m.sample_ids.size()) {
    for (const auto& [id, t] : label_map) {
      if (std::find(m.sample_ids.begin(), m.sample_ids.end(), id) == m.sample_ids.end()) {
        throw DataError(DataError::Kind::LabelMismatch,
                        "sample '" + id + "' present in labels but missing from data");
      }
    }
  }

  m.validate();
  return m;
}

void save_dataset(const ExpressionMatrix& m, const std::string& data_path,
                  const std::string& labels_path) {
  {
    std::ofstream out(data_path);
    if (!out) throw std::runtime_error("cannot write " + data_path);
    out << "";
    for (const auto& g : m.gene_ids) out << ',' << g;
    out << '\n';
    for (Eigen::Index i = 0; i < m.n_samples(); ++i) {
      out << m.sample_ids[i];
      for (Eigen::Index j = 0; j < m.n_genes(); ++j) {
        out << ',' << csv::format_double(m.values(i, j));
      }
      out << '\n';
    }
  }
  {
    std::ofstream out(labels_path);
    if (!out) throw std::runtime_error("cannot write " + labels_path);
    out << ",Class\n";
    for (Eigen::Index i = 0; i < m.n_samples(); ++i) {
      out << m.sample_ids[i] << ',' << to_string(m.labels[i]) << '\n';
    }
  }
}

void write_sidecar(const ExpressionMatrix& m, const NormalizationSpec& spec,
                   const std::string& path) {
  nlohmann::json j;
  j["n_samples"] = m.n_samples();
  j["n_genes"] = m.n_genes();
  nlohmann::json hist;
  auto counts = m.label_histogram();
  for (CancerType t : all_cancer_types()) {
    hist[std::string(to_string(t))] = counts[static_cast<int>(t)];
  }
  j["label_histogram"] = hist;
  switch (spec.mode) {
    case NormalizationSpec::Mode::None: j["normalization"] = "none"; break;
    case NormalizationSpec::Mode::CenterColumns: j["normalization"] = "center-columns"; break;
    case NormalizationSpec::Mode::ZscoreColumns: j["normalization"] = "zscore-columns"; break;
  }
  j["ddof"] = spec.ddof;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(2) << '\n';
}

ExpressionMatrix subset_by_label(const ExpressionMatrix& m, CancerType c) {
  std::vector<Eigen::Index> rows;
  for (Eigen::Index i = 0; i < m.n_samples(); ++i) {
    if (m.labels[i] == c) rows.push_back(i);
  }
  if (rows.empty()) {
    throw DataError(DataError::Kind::EmptySubset,
                    std::string("no samples with label ") + std::string(to_string(c)));
  }
  ExpressionMatrix out;
  out.values.resize(static_cast<Eigen::Index>(rows.size()), m.n_genes());
  out.sample_ids.reserve(rows.size());
  out.labels.reserve(rows.size());
  for (size_t k = 0; k < rows.size(); ++k) {
    out.values.row(static_cast<Eigen::Index>(k)) = m.values.row(rows[k]);
    out.sample_ids.push_back(m.sample_ids[rows[k]]);
    out.labels.push_back(c);
  }
  out.gene_ids = m.gene_ids;
  return out;
}

NormalizeResult normalize(const ExpressionMatrix& m, const NormalizationSpec& spec) {
  m.validate();
  if (spec.ddof != 0 && spec.ddof != 1) {
    throw std::invalid_argument("ddof must be 0 or 1");
  }
  NormalizeResult res;
  res.matrix = m;
  if (spec.mode == NormalizationSpec::Mode::None) return res;

  const auto S = m.n_samples();
  Eigen::RowVectorXd mu = m.values.colwise().mean();
  res.matrix.values = m.values.rowwise() - mu;
  if (spec.mode == NormalizationSpec::Mode::CenterColumns) return res;

  // Z-score: constant columns are emitted as all-zero and flagged so that
  // gene indices stay aligned with the input.
  const double denom = static_cast<double>(S - spec.ddof);
  if (denom <= 0) throw std::invalid_argument("zscore needs more samples than ddof");
  for (Eigen::Index j = 0; j < m.n_genes(); ++j) {
    const double var = res.matrix.values.col(j).squaredNorm() / denom;
    if (var > 0.0) {
      res.matrix.values.col(j) /= std::sqrt(var);
    } else {
      res.matrix.values.col(j).setZero();
      res.constant_columns.push_back(j);
    }
  }
  return res;
}

}  // namespace genenet
