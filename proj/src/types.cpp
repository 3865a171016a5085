// Copyright 2026 The geneval Authors
// SPDX-License-Identifier: Apache-2.0

#include "geneval/types.hpp"

#include "geneval/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <unordered_set>

namespace geneval {

namespace {

char lower(char c) { return static_cast<char>(std::tolower(static_cast<unsigned char>(c))); }

RowMatrix gather_rows(const RowMatrix& m, const std::vector<Index>& rows) {
  RowMatrix out(static_cast<Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] < 0 || rows[i] >= m.rows()) {
      throw ValidationError(fmt::format("row index {} out of range [0, {})", rows[i], m.rows()));
    }
    out.row(static_cast<Index>(i)) = m.row(rows[i]);
  }
  return out;
}

void check_concat(Index da, Index db, const std::string& ba, const std::string& bb) {
  if (da != db) {
    throw ValidationError(fmt::format("dimension mismatch: {} vs {}", da, db));
  }
  if (ba != bb) {
    throw ValidationError(fmt::format("backbone mismatch: '{}' vs '{}'", ba, bb));
  }
}

RowMatrix concat_rows(const RowMatrix& a, const RowMatrix& b) {
  RowMatrix out(a.rows() + b.rows(), a.cols());
  out.topRows(a.rows()) = a;
  out.bottomRows(b.rows()) = b;
  return out;
}

}  // namespace

bool labels_equal(std::string_view a, std::string_view b) {
  return a.size() == b.size() &&
         std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) { return lower(x) == lower(y); });
}

std::string normalize_label(std::string_view label) {
  std::string out(label);
  std::transform(out.begin(), out.end(), out.begin(), lower);
  return out;
}

bool is_real_label(std::string_view label) { return labels_equal(label, kRealLabel); }

std::string ValidationReport::summary() const {
  if (ok()) return "ok";
  return fmt::format("{}", fmt::join(violations, "; "));
}

EmbeddingSet::EmbeddingSet(RowMatrix data, std::string backbone_id, std::string source_label)
    : data_(std::move(data)), backbone_id_(std::move(backbone_id)), source_label_(std::move(source_label)) {
  if (data_.rows() < 1 || data_.cols() < 1) {
    throw ValidationError(fmt::format("embedding set must be non-empty, got {}x{}", data_.rows(), data_.cols()));
  }
  if (backbone_id_.empty()) throw ValidationError("embedding set has an empty backbone_id");
  for (Index i = 0; i < data_.rows(); ++i) {
    for (Index j = 0; j < data_.cols(); ++j) {
      if (!std::isfinite(data_(i, j))) {
        throw ValidationError(fmt::format("non-finite entry at ({},{})", i, j));
      }
    }
  }
}

EmbeddingSet EmbeddingSet::subset(const std::vector<Index>& rows) const {
  return EmbeddingSet(gather_rows(data_, rows), backbone_id_, source_label_);
}

ValidationReport validate_probabilities(const RowMatrix& probs) {
  ValidationReport report;
  if (probs.rows() < 1) report.violations.emplace_back("no rows");
  if (probs.cols() < 2) report.violations.push_back(fmt::format("class count {} < 2", probs.cols()));
  for (Index i = 0; i < probs.rows(); ++i) {
    bool finite_row = true;
    double sum = 0.0;
    for (Index j = 0; j < probs.cols(); ++j) {
      const double v = probs(i, j);
      if (!std::isfinite(v)) {
        report.violations.push_back(fmt::format("non-finite entry at ({},{})", i, j));
        finite_row = false;
        continue;
      }
      if (v < 0.0 || v > 1.0) {
        report.violations.push_back(fmt::format("entry out of range at ({},{}): {}", i, j, v));
      }
      sum += v;
    }
    if (finite_row && probs.cols() > 0 && std::abs(sum - 1.0) > kRowSumTolerance) {
      report.violations.push_back(fmt::format("row {} sums to {}", i, sum));
    }
  }
  return report;
}

ValidationReport validate_probability_set(const ProbabilitySet& p) { return validate_probabilities(p.probs()); }

ProbabilitySet::ProbabilitySet(RowMatrix probs, std::string backbone_id, std::string source_label)
    : probs_(std::move(probs)), backbone_id_(std::move(backbone_id)), source_label_(std::move(source_label)) {
  if (backbone_id_.empty()) throw ValidationError("probability set has an empty backbone_id");
  auto report = validate_probabilities(probs_);
  if (!report.ok()) throw ValidationError("invalid probability set: " + report.summary());
}

ProbabilitySet ProbabilitySet::subset(const std::vector<Index>& rows) const {
  return ProbabilitySet(gather_rows(probs_, rows), backbone_id_, source_label_);
}

EmbeddingSet merge_sets(const EmbeddingSet& a, const EmbeddingSet& b) {
  check_concat(a.d(), b.d(), a.backbone_id(), b.backbone_id());
  return EmbeddingSet(concat_rows(a.data(), b.data()), a.backbone_id(), a.source_label());
}

ProbabilitySet merge_sets(const ProbabilitySet& a, const ProbabilitySet& b) {
  check_concat(a.class_count(), b.class_count(), a.backbone_id(), b.backbone_id());
  return ProbabilitySet(concat_rows(a.probs(), b.probs()), a.backbone_id(), a.source_label());
}

GaussianSummary::GaussianSummary(Vector mean, Matrix covariance, Index sample_count, std::string backbone_id)
    : mean_(std::move(mean)),
      covariance_(std::move(covariance)),
      sample_count_(sample_count),
      backbone_id_(std::move(backbone_id)) {
  if (sample_count_ < 2) {
    throw ValidationError(fmt::format("gaussian summary needs at least 2 samples, got {}", sample_count_));
  }
  if (mean_.size() < 1 || covariance_.rows() != mean_.size() || covariance_.cols() != mean_.size()) {
    throw ValidationError(fmt::format("gaussian summary shape mismatch: mean {} vs covariance {}x{}",
                                      mean_.size(), covariance_.rows(), covariance_.cols()));
  }
  if (!mean_.allFinite() || !covariance_.allFinite()) {
    throw ValidationError("gaussian summary has non-finite entries");
  }
  const double asym = (covariance_ - covariance_.transpose()).cwiseAbs().maxCoeff();
  if (asym > kSymmetryTolerance) {
    throw ValidationError(fmt::format("covariance is not symmetric (max |A - A^T| = {})", asym));
  }
}

std::string_view to_string(MetricName m) {
  switch (m) {
    case MetricName::IS: return "IS";
    case MetricName::IS_star: return "IS_star";
    case MetricName::FID: return "FID";
    case MetricName::FID_star: return "FID_star";
    case MetricName::FCD: return "FCD";
    case MetricName::KID: return "KID";
    case MetricName::Precision: return "Precision";
    case MetricName::Recall: return "Recall";
  }
  return "?";
}

std::string_view display_name(MetricName m) {
  switch (m) {
    case MetricName::IS_star: return "IS*";
    case MetricName::FID_star: return "FID*";
    default: return to_string(m);
  }
}

std::string_view to_string(Better b) { return b == Better::higher ? "higher" : "lower"; }

MetricName parse_metric_name(std::string_view s) {
  for (MetricName m : kAllMetrics) {
    if (labels_equal(s, to_string(m)) || labels_equal(s, display_name(m))) return m;
  }
  throw ValidationError(fmt::format("unknown metric '{}'", s));
}

Better better_direction(MetricName m) {
  switch (m) {
    case MetricName::FID:
    case MetricName::FID_star:
    case MetricName::FCD:
    case MetricName::KID:
      return Better::lower;
    default:
      return Better::higher;
  }
}

MetricResult make_result(MetricName metric, double value, std::optional<double> dispersion,
                         std::optional<Index> n_real, Index n_gen, std::string backbone_id,
                         std::optional<std::uint64_t> seed) {
  MetricResult r;
  r.metric = metric;
  r.value = value;
  r.dispersion = dispersion;
  r.better = better_direction(metric);
  r.n_real = n_real;
  r.n_gen = n_gen;
  r.backbone_id = std::move(backbone_id);
  r.seed = seed;
  return r;
}

std::string_view to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
    case Split::generated: return "generated";
  }
  return "?";
}

Split parse_split(std::string_view s) {
  for (Split v : {Split::train, Split::val, Split::test, Split::generated}) {
    if (labels_equal(s, to_string(v))) return v;
  }
  throw ValidationError(fmt::format("unknown split '{}'", s));
}

DatasetManifest::DatasetManifest(std::string dataset, std::vector<ManifestEntry> entries)
    : dataset_(std::move(dataset)), entries_(std::move(entries)) {
  auto report = validate(entries_);
  if (!report.ok()) throw ValidationError("invalid manifest: " + report.summary());
}

ValidationReport DatasetManifest::validate(const std::vector<ManifestEntry>& entries) {
  ValidationReport report;
  std::unordered_set<std::string> seen;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& e = entries[i];
    if (e.image_id.empty()) report.violations.push_back(fmt::format("entry {} has an empty image_id", i));
    if (!seen.insert(e.image_id).second) {
      report.violations.push_back(fmt::format("duplicate image_id '{}'", e.image_id));
    }
    if (e.checksum.empty()) {
      report.violations.push_back(fmt::format("entry '{}' has an empty checksum", e.image_id));
    } else if (!std::all_of(e.checksum.begin(), e.checksum.end(),
                            [](char c) { return std::isxdigit(static_cast<unsigned char>(c)) != 0; })) {
      report.violations.push_back(fmt::format("entry '{}' checksum is not hex", e.image_id));
    }
  }
  return report;
}

std::size_t DatasetManifest::count(Split split) const {
  return static_cast<std::size_t>(
      std::count_if(entries_.begin(), entries_.end(), [&](const ManifestEntry& e) { return e.split == split; }));
}

}  // namespace geneval
