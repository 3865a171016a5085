// Copyright 2026 The geneval Authors
// SPDX-License-Identifier: Apache-2.0

// Generative-model metrics over embedding and probability sets: Inception
// Score, Frechet distance (FID and its backbone variants), KID, and k-NN
// manifold precision/recall.

#pragma once

#include "geneval/numstats.hpp"
#include "geneval/types.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace geneval {

struct SplitSpec {
  Index split_count = 10;
  /// Without a seed, splits are contiguous runs in input order.
  std::optional<std::uint64_t> seed;
};

struct KidSpec {
  /// Defaults to min(1000, n_real, n_gen).
  std::optional<Index> subset_size;
  Index subset_count = 100;
  int kernel_degree = 3;
  /// Defaults to 1 / d.
  std::optional<double> kernel_gamma;
  double kernel_coef = 1.0;
  std::uint64_t seed = 0;
};

struct PrSpec {
  Index neighborhood_k = 3;
};

/// Which feature space a backbone belongs to. Decides whether an IS or
/// Frechet result is reported as the plain, starred or CLIP variant.
enum class BackboneRole { base, domain, clip };

std::string_view to_string(BackboneRole role);
BackboneRole parse_backbone_role(std::string_view s);

/// Maps backbone_id prefixes (case-insensitive, longest match wins) to roles.
/// Prefix matching lets a preprocessing suffix ride along in the id.
class BackboneRoles {
 public:
  /// "base-classifier" and "inception" -> base, "domain-finetuned" -> domain,
  /// "clip" -> clip.
  static BackboneRoles defaults();

  void set(std::string prefix, BackboneRole role);
  std::optional<BackboneRole> role_of(std::string_view backbone_id) const;
  /// Throws ValidationError for an unmapped backbone.
  BackboneRole require(std::string_view backbone_id) const;
  const std::vector<std::pair<std::string, BackboneRole>>& entries() const { return entries_; }

 private:
  std::vector<std::pair<std::string, BackboneRole>> entries_;
};

/// IS for base backbones, IS* for domain backbones; throws for clip.
MetricName inception_metric_for(BackboneRole role);
/// FID, FID* or FCD.
MetricName frechet_metric_for(BackboneRole role);

/// exp(mean KL(p(y|x) || p(y))) per split; value is the mean over splits and
/// dispersion the population standard deviation. Rows are renormalized to
/// sum 1 before use. Throws ValidationError when a split would hold fewer
/// than two rows.
MetricResult inception_score(const ProbabilitySet& p, const SplitSpec& spec,
                             const BackboneRoles& roles = BackboneRoles::defaults());

/// Per-split scores in split order (the values behind inception_score).
std::vector<double> inception_split_scores(const ProbabilitySet& p, const SplitSpec& spec);

/// |mu_r - mu_g|^2 + Tr(S_r) + Tr(S_g) - 2 Tr((S_r S_g)^{1/2}).
MetricResult frechet_distance(const GaussianSummary& real, const GaussianSummary& gen,
                              const BackboneRoles& roles = BackboneRoles::defaults(),
                              TraceSqrtOptions options = {});

/// Raw Frechet value without naming; same checks and clamping.
double frechet_value(const GaussianSummary& real, const GaussianSummary& gen, TraceSqrtOptions options = {});

struct PolynomialKernel {
  int degree = 3;
  double gamma = 1.0;
  double coef = 1.0;

  double operator()(double dot) const;
};

/// Unbiased MMD^2 between two samples under `kernel`; diagonal terms of the
/// within-sample sums are excluded. Needs at least two rows on each side.
double mmd2_unbiased(const RowMatrix& x, const RowMatrix& y, const PolynomialKernel& kernel);

/// Seeded subset draws of MMD^2; value mean, dispersion population std.
MetricResult kid(const EmbeddingSet& real, const EmbeddingSet& gen, const KidSpec& spec);

/// Per-subset estimates behind kid(), in draw order.
std::vector<double> kid_subset_estimates(const EmbeddingSet& real, const EmbeddingSet& gen, const KidSpec& spec);

/// Squared distance to the k-th nearest other row, for every row.
std::vector<double> knn_radii_squared(const RowMatrix& points, Index k);

/// Fraction of `queries` inside at least one reference ball (distance <= radius).
double manifold_coverage(const RowMatrix& queries, const RowMatrix& reference,
                         const std::vector<double>& reference_radii_squared);

/// (precision, recall) by exact k-NN radii.
std::pair<MetricResult, MetricResult> precision_recall(const EmbeddingSet& real, const EmbeddingSet& gen,
                                                       const PrSpec& spec);

/// All embeddings and probabilities computed for one image set.
struct FeatureBundle {
  std::vector<EmbeddingSet> embeddings;
  std::vector<ProbabilitySet> probabilities;

  bool empty() const { return embeddings.empty() && probabilities.empty(); }
  /// Row count shared by every set; throws ValidationError on a conflict.
  std::optional<Index> row_count() const;
};

struct SuiteSpecs {
  SplitSpec split;
  KidSpec kid;
  PrSpec pr;
  BackboneRoles roles = BackboneRoles::defaults();
  /// KID and precision/recall are computed in this feature space.
  BackboneRole distribution_role = BackboneRole::base;
  /// Empty means every metric.
  std::vector<MetricName> requested;
  TraceSqrtOptions trace_sqrt;
};

struct SuiteOutcome {
  std::vector<MetricResult> results;
  /// One line per requested metric that could not be computed.
  std::vector<std::string> notices;
};

/// Computes every requested metric whose inputs are present, in canonical
/// metric order. Throws ValidationError for an empty generated bundle,
/// conflicting row counts, or two sets of one bundle sharing a role.
SuiteOutcome evaluate_suite(const FeatureBundle& real, const FeatureBundle& gen, const SuiteSpecs& specs);

}  // namespace geneval
