// Copyright 2026 The geneval Authors
// SPDX-License-Identifier: Apache-2.0

#include "geneval/error.hpp"
#include "geneval/types.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>

using namespace geneval;
using geneval::testing::Gen;

namespace {

RowMatrix rows(std::initializer_list<std::initializer_list<double>> values) {
  RowMatrix m(static_cast<Index>(values.size()), static_cast<Index>(values.begin()->size()));
  Index i = 0;
  for (const auto& r : values) {
    Index j = 0;
    for (double v : r) m(i, j++) = v;
    ++i;
  }
  return m;
}

bool contains(const std::vector<std::string>& v, const std::string& s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

}  // namespace

TEST_CASE("labels compare case-insensitively") {
  CHECK(labels_equal("Text2Img", "text2img"));
  CHECK_FALSE(labels_equal("db", "dbx"));
  CHECK(is_real_label("REAL"));
  CHECK_FALSE(is_real_label("realistic"));
  CHECK(normalize_label("TI") == "ti");
}

TEST_CASE("embedding set invariants") {
  CHECK_NOTHROW(EmbeddingSet(rows({{1, 2, 3}}), "clip-image", "real"));
  CHECK_THROWS_AS(EmbeddingSet(RowMatrix(0, 3), "clip-image", "real"), ValidationError);
  CHECK_THROWS_AS(EmbeddingSet(RowMatrix(2, 0), "clip-image", "real"), ValidationError);
  CHECK_THROWS_AS(EmbeddingSet(rows({{1, 2}}), "", "real"), ValidationError);
  CHECK_THROWS_WITH_AS(EmbeddingSet(rows({{1, std::nan("")}}), "b", "real"), "non-finite entry at (0,1)",
                       ValidationError);
  CHECK_THROWS_AS(EmbeddingSet(rows({{std::numeric_limits<double>::infinity()}}), "b", "real"), ValidationError);
}

TEST_CASE("validate_probability_set examples") {
  CHECK(validate_probabilities(rows({{0.5, 0.5}, {1.0, 0.0}})).ok());

  const auto sum = validate_probabilities(rows({{0.7, 0.7}}));
  REQUIRE(sum.violations.size() == 1);
  CHECK(sum.violations[0] == "row 0 sums to 1.4");

  const auto nan = validate_probabilities(rows({{0.5, std::nan("")}}));
  CHECK(contains(nan.violations, "non-finite entry at (0,1)"));

  const auto narrow = validate_probabilities(rows({{1.0}}));
  CHECK(contains(narrow.violations, "class count 1 < 2"));

  const auto range = validate_probabilities(rows({{1.5, -0.5}}));
  CHECK(range.violations.size() == 2);

  // Every problem is reported, not only the first.
  const auto many = validate_probabilities(rows({{0.7, 0.7}, {0.5, 0.5}, {0.2, 0.2}}));
  CHECK(many.violations.size() == 2);
  CHECK(many.violations[1] == "row 2 sums to 0.4");
}

TEST_CASE("row sums within 1e-4 are accepted") {
  CHECK(validate_probabilities(rows({{0.50004, 0.5}})).ok());
  CHECK_FALSE(validate_probabilities(rows({{0.5002, 0.5}})).ok());
  CHECK_THROWS_AS(ProbabilitySet(rows({{0.7, 0.7}}), "b", "real"), ValidationError);
}

TEST_CASE("property: validation accepts exactly the invariant-satisfying matrices") {
  Gen gen(11);
  for (int trial = 0; trial < 500; ++trial) {
    const Index n = gen.integer(1, 6);
    const Index c = gen.integer(2, 6);
    RowMatrix p = gen.probabilities(n, c, 0.5);
    const int corruption = gen.integer(0, 3);
    const Index i = gen.integer(0, static_cast<int>(n - 1));
    const Index j = gen.integer(0, static_cast<int>(c - 1));
    switch (corruption) {
      case 0: break;
      case 1: p(i, j) += 0.01; break;
      case 2: p(i, j) = std::numeric_limits<double>::quiet_NaN(); break;
      case 3: p(i, j) = -0.2; break;
    }
    bool expect_ok = true;
    for (Index r = 0; r < n; ++r) {
      double s = 0.0;
      for (Index k = 0; k < c; ++k) {
        const double v = p(r, k);
        if (!std::isfinite(v) || v < 0.0 || v > 1.0) expect_ok = false;
        s += v;
      }
      if (!(std::abs(s - 1.0) <= 1e-4)) expect_ok = false;
    }
    CHECK(validate_probabilities(p).ok() == expect_ok);
  }
}

TEST_CASE("merge_sets examples") {
  const EmbeddingSet a(rows({{1, 2, 3}}), "base", "val");
  const EmbeddingSet b(rows({{4, 5, 6}}), "base", "test");
  const auto m = merge_sets(a, b);
  CHECK(m.n() == 2);
  CHECK(m.data()(0, 0) == 1);
  CHECK(m.data()(1, 2) == 6);
  CHECK(m.backbone_id() == "base");

  CHECK_THROWS_WITH_AS(merge_sets(a, EmbeddingSet(rows({{1, 2, 3, 4}}), "base", "x")),
                       doctest::Contains("dimension mismatch"), ValidationError);
  CHECK_THROWS_WITH_AS(merge_sets(a, EmbeddingSet(rows({{1, 2, 3}}), "clip", "x")),
                       doctest::Contains("backbone mismatch"), ValidationError);

  Gen gen(3);
  const EmbeddingSet val(gen.gaussian(210, 8), "base", "val");
  const EmbeddingSet test(gen.gaussian(210, 8), "base", "test");
  CHECK(merge_sets(val, test).n() == 420);
}

TEST_CASE("property: merge_sets is associative and keeps the backbone") {
  Gen gen(5);
  for (int trial = 0; trial < 50; ++trial) {
    const Index d = gen.integer(1, 4);
    const EmbeddingSet a(gen.gaussian(gen.integer(1, 4), d), "bb", "a");
    const EmbeddingSet b(gen.gaussian(gen.integer(1, 4), d), "bb", "b");
    const EmbeddingSet c(gen.gaussian(gen.integer(1, 4), d), "bb", "c");
    const auto left = merge_sets(merge_sets(a, b), c);
    const auto right = merge_sets(a, merge_sets(b, c));
    CHECK(left.data() == right.data());
    CHECK(left.backbone_id() == "bb");
    CHECK(left.data().topRows(a.n()) == a.data());
  }
}

TEST_CASE("probability merge and subset") {
  const ProbabilitySet a(rows({{0.5, 0.5}}), "base", "gen");
  const ProbabilitySet b(rows({{1.0, 0.0}}), "base", "gen");
  const auto m = merge_sets(a, b);
  CHECK(m.n() == 2);
  const auto s = m.subset({1});
  CHECK(s.probs()(0, 0) == 1.0);
  CHECK_THROWS_AS(m.subset({2}), ValidationError);
}

TEST_CASE("gaussian summary invariants") {
  Matrix cov(2, 2);
  cov << 1.0, 0.5, 0.5, 2.0;
  CHECK_NOTHROW(GaussianSummary(Vector::Zero(2), cov, 2, "base"));
  CHECK_THROWS_AS(GaussianSummary(Vector::Zero(2), cov, 1, "base"), ValidationError);
  Matrix asym = cov;
  asym(0, 1) += 1e-6;
  CHECK_THROWS_AS(GaussianSummary(Vector::Zero(2), asym, 5, "base"), ValidationError);
  CHECK_THROWS_AS(GaussianSummary(Vector::Zero(3), cov, 5, "base"), ValidationError);
}

TEST_CASE("metric names and directions") {
  for (MetricName m : kAllMetrics) CHECK(parse_metric_name(to_string(m)) == m);
  CHECK(parse_metric_name("fid*") == MetricName::FID_star);
  CHECK(parse_metric_name("is_star") == MetricName::IS_star);
  CHECK(better_direction(MetricName::IS) == Better::higher);
  CHECK(better_direction(MetricName::IS_star) == Better::higher);
  CHECK(better_direction(MetricName::Precision) == Better::higher);
  CHECK(better_direction(MetricName::Recall) == Better::higher);
  CHECK(better_direction(MetricName::FID) == Better::lower);
  CHECK(better_direction(MetricName::FID_star) == Better::lower);
  CHECK(better_direction(MetricName::FCD) == Better::lower);
  CHECK(better_direction(MetricName::KID) == Better::lower);
  CHECK_THROWS_AS(parse_metric_name("SSIM"), ValidationError);
  CHECK(make_result(MetricName::KID, 0.1, 0.02, 420, 420, "base").better == Better::lower);
}

TEST_CASE("dataset manifest validation") {
  const std::string sum(64, 'a');
  std::vector<ManifestEntry> entries = {{"a", "a.png", "real", Split::train, sum},
                                        {"b", "b.png", "real", Split::val, sum},
                                        {"c", "c.png", "db", Split::generated, sum}};
  const DatasetManifest m("ucm", entries);
  CHECK(m.count(Split::train) == 1);
  CHECK(m.count(Split::generated) == 1);
  CHECK(m.count(Split::test) == 0);

  entries.push_back({"a", "dup.png", "real", Split::test, sum});
  entries.push_back({"d", "d.png", "real", Split::test, ""});
  entries.push_back({"e", "e.png", "real", Split::test, "xyz"});
  const auto report = DatasetManifest::validate(entries);
  CHECK(report.violations.size() == 3);
  CHECK(contains(report.violations, "duplicate image_id 'a'"));
  CHECK_THROWS_AS(DatasetManifest("ucm", entries), ValidationError);
  CHECK(parse_split("Generated") == Split::generated);
  CHECK_THROWS_AS(parse_split("holdout"), ValidationError);
}
