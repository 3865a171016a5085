// Copyright 2026 The geneval Authors
// SPDX-License-Identifier: Apache-2.0

// Shared value types: feature matrices, class-probability matrices, Gaussian
// summaries, metric results and dataset manifests. All types validate on
// construction and are immutable afterwards.

#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace geneval {

/// N x D, one feature vector (or probability row) per image.
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Source label reserved for real (non-synthetic) images.
inline constexpr std::string_view kRealLabel = "real";

/// ASCII case-insensitive comparison used for source labels.
bool labels_equal(std::string_view a, std::string_view b);
std::string normalize_label(std::string_view label);
bool is_real_label(std::string_view label);

struct ValidationReport {
  std::vector<std::string> violations;

  bool ok() const { return violations.empty(); }
  /// Violations joined with "; ", or "ok".
  std::string summary() const;
};

class EmbeddingSet {
 public:
  /// Throws ValidationError on an empty matrix, non-finite entries or an
  /// empty backbone_id.
  EmbeddingSet(RowMatrix data, std::string backbone_id, std::string source_label);

  const RowMatrix& data() const { return data_; }
  Index n() const { return data_.rows(); }
  Index d() const { return data_.cols(); }
  const std::string& backbone_id() const { return backbone_id_; }
  const std::string& source_label() const { return source_label_; }

  /// Rows at the given indices, in that order.
  EmbeddingSet subset(const std::vector<Index>& rows) const;

 private:
  RowMatrix data_;
  std::string backbone_id_;
  std::string source_label_;
};

class ProbabilitySet {
 public:
  /// Throws ValidationError listing every violation reported by
  /// validate_probabilities().
  ProbabilitySet(RowMatrix probs, std::string backbone_id, std::string source_label);

  const RowMatrix& probs() const { return probs_; }
  Index n() const { return probs_.rows(); }
  Index class_count() const { return probs_.cols(); }
  const std::string& backbone_id() const { return backbone_id_; }
  const std::string& source_label() const { return source_label_; }

  ProbabilitySet subset(const std::vector<Index>& rows) const;

 private:
  RowMatrix probs_;
  std::string backbone_id_;
  std::string source_label_;
};

/// Tolerance on |row sum - 1| for probability rows.
inline constexpr double kRowSumTolerance = 1e-4;

/// Reports every range, finiteness and row-sum violation; never throws.
ValidationReport validate_probabilities(const RowMatrix& probs);
ValidationReport validate_probability_set(const ProbabilitySet& p);

/// Row concatenation, a's rows first. Throws ValidationError on a dimension
/// or backbone mismatch. The result keeps a's source label.
EmbeddingSet merge_sets(const EmbeddingSet& a, const EmbeddingSet& b);
ProbabilitySet merge_sets(const ProbabilitySet& a, const ProbabilitySet& b);

class GaussianSummary {
 public:
  /// Throws ValidationError if sample_count < 2, shapes disagree or the
  /// covariance is not symmetric within kSymmetryTolerance.
  GaussianSummary(Vector mean, Matrix covariance, Index sample_count, std::string backbone_id);

  static constexpr double kSymmetryTolerance = 1e-8;

  const Vector& mean() const { return mean_; }
  const Matrix& covariance() const { return covariance_; }
  Index sample_count() const { return sample_count_; }
  Index d() const { return mean_.size(); }
  const std::string& backbone_id() const { return backbone_id_; }

 private:
  Vector mean_;
  Matrix covariance_;
  Index sample_count_;
  std::string backbone_id_;
};

enum class MetricName { IS, IS_star, FID, FID_star, FCD, KID, Precision, Recall };
enum class Better { higher, lower };

inline constexpr MetricName kAllMetrics[] = {
    MetricName::IS,  MetricName::IS_star,   MetricName::FID,    MetricName::FID_star,
    MetricName::FCD, MetricName::KID,       MetricName::Precision, MetricName::Recall};

/// Identifier form ("IS_star").
std::string_view to_string(MetricName m);
/// Display form ("IS*").
std::string_view display_name(MetricName m);
std::string_view to_string(Better b);
/// Accepts identifier or display form, case-insensitive. Throws ValidationError.
MetricName parse_metric_name(std::string_view s);
Better better_direction(MetricName m);

struct MetricResult {
  MetricName metric = MetricName::IS;
  double value = 0.0;
  std::optional<double> dispersion;
  Better better = Better::higher;
  std::optional<Index> n_real;
  Index n_gen = 0;
  std::string backbone_id;
  std::optional<std::uint64_t> seed;
};

/// Fills `better` from the metric name.
MetricResult make_result(MetricName metric, double value, std::optional<double> dispersion,
                         std::optional<Index> n_real, Index n_gen, std::string backbone_id,
                         std::optional<std::uint64_t> seed = std::nullopt);

enum class Split { train, val, test, generated };

std::string_view to_string(Split s);
Split parse_split(std::string_view s);

struct ManifestEntry {
  std::string image_id;
  std::string path;
  std::string source_label;
  Split split = Split::train;
  std::string checksum;  // lowercase hex SHA-256 of the image bytes
};

class DatasetManifest {
 public:
  /// Throws ValidationError when validate() reports anything.
  DatasetManifest(std::string dataset, std::vector<ManifestEntry> entries);

  /// Duplicate image ids, empty or non-hex checksums.
  static ValidationReport validate(const std::vector<ManifestEntry>& entries);

  const std::string& dataset() const { return dataset_; }
  const std::vector<ManifestEntry>& entries() const { return entries_; }
  std::size_t count(Split split) const;

 private:
  std::string dataset_;
  std::vector<ManifestEntry> entries_;
};

}  // namespace geneval
