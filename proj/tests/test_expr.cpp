#include <doctest.h>

#include <fstream>

#include "genenet/csv.hpp"
#include "genenet/expr.hpp"
#include "genenet/stats.hpp"
#include "support/testutil.hpp"

using namespace genenet;

namespace {

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  out << content;
}

}  // namespace

TEST_CASE("load_dataset reads the two-file format") {
  testutil::TempDir tmp("expr_load");
  write_file(tmp.file("data.csv"),
             ",gene_0,gene_1,gene_2\n"
             "sample_0,1.5,0,2.25\n"
             "sample_1,3,4.5,0.125\n");
  write_file(tmp.file("labels.csv"),
             ",Class\n"
             "sample_0,PRAD\n"
             "sample_1,BRCA\n");
  const ExpressionMatrix m = load_dataset(tmp.file("data.csv"), tmp.file("labels.csv"));
  CHECK(m.n_samples() == 2);
  CHECK(m.n_genes() == 3);
  CHECK(m.values(0, 2) == 2.25);
  CHECK(m.labels[0] == CancerType::PRAD);
  CHECK(m.labels[1] == CancerType::BRCA);
  CHECK(m.gene_ids[1] == "gene_1");
}

TEST_CASE("load_dataset accepts a minimal 1x1 matrix with value 0") {
  testutil::TempDir tmp("expr_min");
  write_file(tmp.file("data.csv"), ",gene_0\ns0,0\n");
  write_file(tmp.file("labels.csv"), ",Class\ns0,KIRC\n");
  const ExpressionMatrix m = load_dataset(tmp.file("data.csv"), tmp.file("labels.csv"));
  CHECK(m.n_samples() == 1);
  CHECK(m.n_genes() == 1);
  CHECK(m.values(0, 0) == 0.0);
}

TEST_CASE("load_dataset reports each malformed input distinctly") {
  testutil::TempDir tmp("expr_err");
  const std::string data = tmp.file("data.csv");
  const std::string labels = tmp.file("labels.csv");
  write_file(labels, ",Class\ns0,BRCA\ns1,COAD\n");

  SUBCASE("missing file") {
    try {
      load_dataset(tmp.file("nope.csv"), labels);
      FAIL("expected DataError");
    } catch (const DataError& e) {
      CHECK(e.kind() == DataError::Kind::MissingFile);
    }
  }
  SUBCASE("ragged row") {
    write_file(data, ",g0,g1\ns0,1,2\ns1,3\n");
    try {
      load_dataset(data, labels);
      FAIL("expected DataError");
    } catch (const DataError& e) {
      CHECK(e.kind() == DataError::Kind::RaggedRow);
    }
  }
  SUBCASE("non-numeric cell") {
    write_file(data, ",g0,g1\ns0,1,abc\ns1,3,4\n");
    try {
      load_dataset(data, labels);
      FAIL("expected DataError");
    } catch (const DataError& e) {
      CHECK(e.kind() == DataError::Kind::NonNumericCell);
    }
  }
  SUBCASE("duplicate sample id") {
    write_file(data, ",g0\ns0,1\ns0,2\n");
    try {
      load_dataset(data, labels);
      FAIL("expected DataError");
    } catch (const DataError& e) {
      CHECK(e.kind() == DataError::Kind::DuplicateId);
    }
  }
  SUBCASE("duplicate gene id") {
    write_file(data, ",g0,g0\ns0,1,2\ns1,3,4\n");
    try {
      load_dataset(data, labels);
      FAIL("expected DataError");
    } catch (const DataError& e) {
      CHECK(e.kind() == DataError::Kind::DuplicateId);
    }
  }
  SUBCASE("sample in data missing from labels") {
    write_file(data, ",g0\ns0,1\nsX,2\n");
    try {
      load_dataset(data, labels);
      FAIL("expected DataError");
    } catch (const DataError& e) {
      CHECK(e.kind() == DataError::Kind::LabelMismatch);
    }
  }
  SUBCASE("sample in labels missing from data") {
    write_file(data, ",g0\ns0,1\n");
    try {
      load_dataset(data, labels);
      FAIL("expected DataError");
    } catch (const DataError& e) {
      CHECK(e.kind() == DataError::Kind::LabelMismatch);
    }
  }
  SUBCASE("unknown class label") {
    write_file(data, ",g0\ns0,1\ns1,2\n");
    write_file(labels, ",Class\ns0,BRCA\ns1,LUSC\n");
    try {
      load_dataset(data, labels);
      FAIL("expected DataError");
    } catch (const DataError& e) {
      CHECK(e.kind() == DataError::Kind::UnknownLabel);
    }
  }
}

TEST_CASE("save/load round trip is exact at 17 significant digits") {
  testutil::TempDir tmp("expr_rt");
  ExpressionMatrix m = testutil::make_fixture(3, 7, 99);
  m.values(0, 0) = 1.0 / 3.0;
  m.values(1, 1) = 1e-17;
  m.values(2, 3) = 123456.789012345678;
  save_dataset(m, tmp.file("d.csv"), tmp.file("l.csv"));
  const ExpressionMatrix back = load_dataset(tmp.file("d.csv"), tmp.file("l.csv"));
  REQUIRE(back.n_samples() == m.n_samples());
  REQUIRE(back.n_genes() == m.n_genes());
  CHECK((back.values.array() == m.values.array()).all());
  CHECK(back.sample_ids == m.sample_ids);
  CHECK(back.gene_ids == m.gene_ids);
  CHECK(back.labels == m.labels);
}

TEST_CASE("subset_by_label") {
  const ExpressionMatrix m = testutil::make_fixture(4, 6, 7);

  SUBCASE("selects exactly the rows of the class, preserving order") {
    const ExpressionMatrix sub = subset_by_label(m, CancerType::COAD);
    CHECK(sub.n_samples() == 4);
    CHECK(sub.gene_ids == m.gene_ids);
    Eigen::Index k = 0;
    for (Eigen::Index i = 0; i < m.n_samples(); ++i) {
      if (m.labels[i] != CancerType::COAD) continue;
      CHECK(sub.sample_ids[k] == m.sample_ids[i]);
      CHECK((sub.values.row(k).array() == m.values.row(i).array()).all());
      ++k;
    }
  }
  SUBCASE("subset of a single-class matrix is the identity") {
    const ExpressionMatrix brca = subset_by_label(m, CancerType::BRCA);
    const ExpressionMatrix again = subset_by_label(brca, CancerType::BRCA);
    CHECK((again.values.array() == brca.values.array()).all());
    CHECK(again.sample_ids == brca.sample_ids);
  }
  SUBCASE("zero matching samples is an error") {
    const ExpressionMatrix brca = subset_by_label(m, CancerType::BRCA);
    try {
      subset_by_label(brca, CancerType::PRAD);
      FAIL("expected DataError");
    } catch (const DataError& e) {
      CHECK(e.kind() == DataError::Kind::EmptySubset);
    }
  }
  SUBCASE("subsets over all classes partition the rows") {
    long total = 0;
    for (CancerType t : all_cancer_types()) {
      const ExpressionMatrix sub = subset_by_label(m, t);
      total += sub.n_samples();
      for (Eigen::Index i = 0; i < sub.n_samples(); ++i) {
        CHECK(sub.labels[i] == t);
      }
    }
    CHECK(total == m.n_samples());
  }
}

TEST_CASE("normalize") {
  ExpressionMatrix m;
  m.values.resize(3, 1);
  m.values << 1, 2, 3;
  m.sample_ids = {"a", "b", "c"};
  m.gene_ids = {"g"};
  m.labels = {CancerType::BRCA, CancerType::BRCA, CancerType::BRCA};

  SUBCASE("center: column [1,2,3] becomes [-1,0,1]") {
    NormalizationSpec spec{NormalizationSpec::Mode::CenterColumns, 0};
    const auto res = normalize(m, spec);
    CHECK(res.matrix.values(0, 0) == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(res.matrix.values(1, 0) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(res.matrix.values(2, 0) == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("zscore ddof=0: column [2,4] becomes [-1,1]") {
    ExpressionMatrix m2;
    m2.values.resize(2, 1);
    m2.values << 2, 4;
    m2.sample_ids = {"a", "b"};
    m2.gene_ids = {"g"};
    m2.labels = {CancerType::BRCA, CancerType::BRCA};
    const auto res = normalize(m2, {NormalizationSpec::Mode::ZscoreColumns, 0});
    CHECK(res.matrix.values(0, 0) == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(res.matrix.values(1, 0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(res.constant_columns.empty());
  }
  SUBCASE("zscore flags constant columns and emits zeros") {
    ExpressionMatrix m2;
    m2.values.resize(3, 2);
    m2.values << 5, 1, 5, 2, 5, 3;
    m2.sample_ids = {"a", "b", "c"};
    m2.gene_ids = {"g0", "g1"};
    m2.labels = {CancerType::BRCA, CancerType::BRCA, CancerType::BRCA};
    const auto res = normalize(m2, {NormalizationSpec::Mode::ZscoreColumns, 0});
    CHECK(res.constant_columns == std::vector<Eigen::Index>{0});
    CHECK(res.matrix.values.col(0).cwiseAbs().maxCoeff() == 0.0);
    CHECK(res.matrix.values.col(1).mean() == doctest::Approx(0.0).epsilon(1e-9));
  }
  SUBCASE("centering is idempotent within 1e-12") {
    const ExpressionMatrix big = testutil::make_fixture(5, 11, 3);
    NormalizationSpec spec{NormalizationSpec::Mode::CenterColumns, 0};
    const auto once = normalize(big, spec);
    const auto twice = normalize(once.matrix, spec);
    CHECK((twice.matrix.values - once.matrix.values).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("zscore post-conditions on a full fixture") {
    const ExpressionMatrix big = testutil::make_fixture(6, 9, 4);
    for (int ddof : {0, 1}) {
      const auto res = normalize(big, {NormalizationSpec::Mode::ZscoreColumns, ddof});
      for (Eigen::Index j = 0; j < res.matrix.n_genes(); ++j) {
        CHECK(std::abs(res.matrix.values.col(j).mean()) < 1e-9);
        const double denom = static_cast<double>(big.n_samples() - ddof);
        const double var = res.matrix.values.col(j).squaredNorm() / denom;
        CHECK(var == doctest::Approx(1.0).epsilon(1e-6));
      }
    }
  }
}

TEST_CASE("sidecar records dimensions and label histogram") {
  testutil::TempDir tmp("expr_meta");
  const ExpressionMatrix m = testutil::make_fixture(2, 4, 5);
  write_sidecar(m, {}, tmp.file("meta.json"));
  std::ifstream in(tmp.file("meta.json"));
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  CHECK(text.find("\"n_samples\": 10") != std::string::npos);
  CHECK(text.find("\"n_genes\": 4") != std::string::npos);
  CHECK(text.find("\"BRCA\": 2") != std::string::npos);
}

TEST_CASE("validate rejects broken invariants") {
  ExpressionMatrix m = testutil::make_fixture(2, 3, 1);
  SUBCASE("valid fixture passes") { CHECK_NOTHROW(m.validate()); }
  SUBCASE("duplicate sample id") {
    m.sample_ids[1] = m.sample_ids[0];
    CHECK_THROWS_AS(m.validate(), DataError);
  }
  SUBCASE("label count mismatch") {
    m.labels.pop_back();
    CHECK_THROWS_AS(m.validate(), DataError);
  }
}
