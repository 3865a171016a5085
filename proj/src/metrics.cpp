// Copyright 2026 The geneval Authors
// SPDX-License-Identifier: Apache-2.0

#include "geneval/metrics.hpp"

#include "geneval/error.hpp"
#include "geneval/random.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace geneval {

namespace {

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
};

// Population standard deviation.
MeanStd mean_std(const std::vector<double>& v) {
  MeanStd out;
  if (v.empty()) return out;
  double sum = 0.0;
  for (double x : v) sum += x;
  out.mean = sum / static_cast<double>(v.size());
  double sq = 0.0;
  for (double x : v) sq += (x - out.mean) * (x - out.mean);
  out.std = std::sqrt(sq / static_cast<double>(v.size()));
  return out;
}

void require_comparable(const std::string& backbone_a, const std::string& backbone_b, Index d_a, Index d_b,
                        const char* what) {
  if (d_a != d_b) throw ValidationError(fmt::format("{}: dimension mismatch {} vs {}", what, d_a, d_b));
  if (backbone_a != backbone_b) {
    throw ValidationError(fmt::format("{}: backbone mismatch '{}' vs '{}'", what, backbone_a, backbone_b));
  }
}

bool starts_with_ci(std::string_view s, std::string_view prefix) {
  return s.size() >= prefix.size() && labels_equal(s.substr(0, prefix.size()), prefix);
}

// Mean KL(p_i || p_bar) of one split; order-invariant in the rows.
double split_mean_kl(const RowMatrix& probs, const std::vector<Index>& rows) {
  const Index classes = probs.cols();
  const auto m = static_cast<double>(rows.size());

  // Plain loops: vectorized reductions pair terms by memory alignment, which
  // would make a row's sum depend on where the row sits.
  RowMatrix normalized(static_cast<Index>(rows.size()), classes);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    double total = 0.0;
    for (Index c = 0; c < classes; ++c) total += probs(rows[i], c);
    for (Index c = 0; c < classes; ++c) normalized(static_cast<Index>(i), c) = probs(rows[i], c) / total;
  }

  Vector marginal(classes);
  std::vector<double> column(rows.size());
  for (Index c = 0; c < classes; ++c) {
    for (std::size_t i = 0; i < rows.size(); ++i) column[i] = normalized(static_cast<Index>(i), c);
    marginal(c) = order_invariant_sum(column) / m;
  }

  std::vector<double> kl(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    double acc = 0.0;
    for (Index c = 0; c < classes; ++c) {
      const double p = normalized(static_cast<Index>(i), c);
      if (p > 0.0) acc += p * (std::log(p) - std::log(marginal(c)));
    }
    kl[i] = acc;
  }
  const double mean = order_invariant_sum(kl) / m;
  const double log_classes = std::log(static_cast<double>(classes));
  // Rounding in the logs and the marginal leaves a residue of a few ulps of
  // log C when every row equals the marginal.
  if (mean <= 4.0 * std::numeric_limits<double>::epsilon() * (1.0 + log_classes)) return 0.0;
  // Mean KL to the marginal is a mutual information, so it lies in [0, log C].
  return std::min(mean, log_classes);
}

Index effective_subset_size(const EmbeddingSet& real, const EmbeddingSet& gen, const KidSpec& spec) {
  const Index available = std::min(real.n(), gen.n());
  const Index m = spec.subset_size.value_or(std::min<Index>(1000, available));
  if (m < 2) throw ValidationError(fmt::format("kid: subset_size must be at least 2, got {}", m));
  if (m > available) {
    throw ValidationError(
        fmt::format("kid: subset_size {} exceeds available rows (real {}, gen {})", m, real.n(), gen.n()));
  }
  return m;
}

// Off-diagonal sum of K restricted to idx x idx.
double within_sum(const Matrix& k, const std::vector<std::int64_t>& idx) {
  double sum = 0.0;
  for (std::size_t a = 0; a < idx.size(); ++a) {
    for (std::size_t b = 0; b < idx.size(); ++b) {
      if (a != b) sum += k(idx[a], idx[b]);
    }
  }
  return sum;
}

double cross_sum(const Matrix& k, const std::vector<std::int64_t>& rows, const std::vector<std::int64_t>& cols) {
  double sum = 0.0;
  for (auto r : rows) {
    for (auto c : cols) sum += k(r, c);
  }
  return sum;
}

Matrix kernel_matrix(const RowMatrix& x, const RowMatrix& y, const PolynomialKernel& kernel) {
  Matrix k = x * y.transpose();
  return k.unaryExpr([&](double dot) { return kernel(dot); });
}

RowMatrix gather(const RowMatrix& m, const std::vector<std::int64_t>& rows) {
  RowMatrix out(static_cast<Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Index>(i)) = m.row(rows[i]);
  return out;
}

double squared_distance(const RowMatrix& a, Index i, const RowMatrix& b, Index j) {
  double sum = 0.0;
  for (Index c = 0; c < a.cols(); ++c) {
    const double diff = a(i, c) - b(j, c);
    sum += diff * diff;
  }
  return sum;
}

// Full kernel matrices are cached when they fit in this many entries.
constexpr Index kMaxCachedKernelEntries = Index{1} << 25;

}  // namespace

std::string_view to_string(BackboneRole role) {
  switch (role) {
    case BackboneRole::base: return "base";
    case BackboneRole::domain: return "domain";
    case BackboneRole::clip: return "clip";
  }
  return "?";
}

BackboneRole parse_backbone_role(std::string_view s) {
  for (BackboneRole r : {BackboneRole::base, BackboneRole::domain, BackboneRole::clip}) {
    if (labels_equal(s, to_string(r))) return r;
  }
  throw ValidationError(fmt::format("unknown backbone role '{}' (expected base, domain or clip)", s));
}

BackboneRoles BackboneRoles::defaults() {
  BackboneRoles roles;
  roles.set("base-classifier", BackboneRole::base);
  roles.set("inception", BackboneRole::base);
  roles.set("domain-finetuned", BackboneRole::domain);
  roles.set("clip", BackboneRole::clip);
  return roles;
}

void BackboneRoles::set(std::string prefix, BackboneRole role) {
  for (auto& entry : entries_) {
    if (labels_equal(entry.first, prefix)) {
      entry.second = role;
      return;
    }
  }
  entries_.emplace_back(std::move(prefix), role);
}

std::optional<BackboneRole> BackboneRoles::role_of(std::string_view backbone_id) const {
  std::optional<BackboneRole> best;
  std::size_t best_len = 0;
  for (const auto& [prefix, role] : entries_) {
    if (starts_with_ci(backbone_id, prefix) && (!best || prefix.size() > best_len)) {
      best = role;
      best_len = prefix.size();
    }
  }
  return best;
}

BackboneRole BackboneRoles::require(std::string_view backbone_id) const {
  auto role = role_of(backbone_id);
  if (!role) throw ValidationError(fmt::format("no backbone role mapping for '{}'", backbone_id));
  return *role;
}

MetricName inception_metric_for(BackboneRole role) {
  switch (role) {
    case BackboneRole::base: return MetricName::IS;
    case BackboneRole::domain: return MetricName::IS_star;
    case BackboneRole::clip: break;
  }
  throw ValidationError("no Inception Score variant is defined for clip backbones");
}

MetricName frechet_metric_for(BackboneRole role) {
  switch (role) {
    case BackboneRole::base: return MetricName::FID;
    case BackboneRole::domain: return MetricName::FID_star;
    case BackboneRole::clip: return MetricName::FCD;
  }
  return MetricName::FID;
}

std::vector<double> inception_split_scores(const ProbabilitySet& p, const SplitSpec& spec) {
  const Index n = p.n();
  if (spec.split_count < 1 || spec.split_count > n) {
    throw ValidationError(fmt::format("inception_score: split_count {} must be in [1, {}]", spec.split_count, n));
  }
  if (n / spec.split_count < 2) {
    throw ValidationError(fmt::format("inception_score: {} rows in {} splits leaves a split smaller than 2 rows", n,
                                      spec.split_count));
  }
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  if (spec.seed) {
    Rng rng(*spec.seed);
    rng.shuffle(order);
  }

  std::vector<double> scores;
  scores.reserve(static_cast<std::size_t>(spec.split_count));
  for (Index s = 0; s < spec.split_count; ++s) {
    const auto begin = static_cast<std::size_t>(s * n / spec.split_count);
    const auto end = static_cast<std::size_t>((s + 1) * n / spec.split_count);
    std::vector<Index> rows(order.begin() + static_cast<std::ptrdiff_t>(begin),
                            order.begin() + static_cast<std::ptrdiff_t>(end));
    // exp(log C) may round one ulp above C.
    scores.push_back(std::clamp(std::exp(split_mean_kl(p.probs(), rows)), 1.0, static_cast<double>(p.class_count())));
  }
  return scores;
}

MetricResult inception_score(const ProbabilitySet& p, const SplitSpec& spec, const BackboneRoles& roles) {
  const MetricName name = inception_metric_for(roles.require(p.backbone_id()));
  const auto stats = mean_std(inception_split_scores(p, spec));
  return make_result(name, stats.mean, stats.std, std::nullopt, p.n(), p.backbone_id(), spec.seed);
}

double frechet_value(const GaussianSummary& real, const GaussianSummary& gen, TraceSqrtOptions options) {
  require_comparable(real.backbone_id(), gen.backbone_id(), real.d(), gen.d(), "frechet_distance");
  const double mean_term = (real.mean() - gen.mean()).squaredNorm();
  const double trace_real = real.covariance().trace() + options.epsilon * static_cast<double>(real.d());
  const double trace_gen = gen.covariance().trace() + options.epsilon * static_cast<double>(gen.d());
  const double cross = trace_sqrt_product(real.covariance(), gen.covariance(), options);
  const double raw = mean_term + trace_real + trace_gen - 2.0 * cross;

  const double scale = trace_real + trace_gen;
  // Residue at round-off level of the trace terms is indistinguishable from 0.
  if (std::abs(raw) <= 1e-10 * scale) return 0.0;
  if (raw < 0.0) {
    if (raw >= -1e-6 * std::max(1.0, scale)) return 0.0;
    throw NumericalError(fmt::format("frechet_distance: negative value {} beyond round-off", raw));
  }
  return raw;
}

MetricResult frechet_distance(const GaussianSummary& real, const GaussianSummary& gen, const BackboneRoles& roles,
                              TraceSqrtOptions options) {
  const double value = frechet_value(real, gen, options);
  const MetricName name = frechet_metric_for(roles.require(real.backbone_id()));
  return make_result(name, value, std::nullopt, real.sample_count(), gen.sample_count(), real.backbone_id());
}

double PolynomialKernel::operator()(double dot) const {
  const double base = dot * gamma + coef;
  double out = 1.0;
  for (int i = 0; i < degree; ++i) out *= base;
  return out;
}

double mmd2_unbiased(const RowMatrix& x, const RowMatrix& y, const PolynomialKernel& kernel) {
  if (x.rows() < 2 || y.rows() < 2) throw ValidationError("mmd2_unbiased: need at least 2 rows per sample");
  if (x.cols() != y.cols()) throw ValidationError("mmd2_unbiased: dimension mismatch");
  const Matrix kxx = kernel_matrix(x, x, kernel);
  const Matrix kyy = kernel_matrix(y, y, kernel);
  const Matrix kxy = kernel_matrix(x, y, kernel);
  const auto m = static_cast<double>(x.rows());
  const auto n = static_cast<double>(y.rows());
  const double sxx = kxx.sum() - kxx.trace();
  const double syy = kyy.sum() - kyy.trace();
  return sxx / (m * (m - 1.0)) + syy / (n * (n - 1.0)) - 2.0 * kxy.sum() / (m * n);
}

std::vector<double> kid_subset_estimates(const EmbeddingSet& real, const EmbeddingSet& gen, const KidSpec& spec) {
  require_comparable(real.backbone_id(), gen.backbone_id(), real.d(), gen.d(), "kid");
  if (spec.subset_count < 1) throw ValidationError("kid: subset_count must be positive");
  if (spec.kernel_degree < 1) throw ValidationError("kid: kernel_degree must be positive");
  const Index m = effective_subset_size(real, gen, spec);
  const PolynomialKernel kernel{spec.kernel_degree, spec.kernel_gamma.value_or(1.0 / static_cast<double>(real.d())),
                                spec.kernel_coef};

  Rng rng(spec.seed);
  std::vector<double> estimates;
  estimates.reserve(static_cast<std::size_t>(spec.subset_count));

  const Index nr = real.n();
  const Index ng = gen.n();
  const bool cache = nr * nr + ng * ng + nr * ng <= kMaxCachedKernelEntries;
  if (cache) {
    const Matrix kxx = kernel_matrix(real.data(), real.data(), kernel);
    const Matrix kyy = kernel_matrix(gen.data(), gen.data(), kernel);
    const Matrix kxy = kernel_matrix(real.data(), gen.data(), kernel);
    const auto md = static_cast<double>(m);
    for (Index s = 0; s < spec.subset_count; ++s) {
      const auto rx = rng.sample_without_replacement(nr, m);
      const auto ry = rng.sample_without_replacement(ng, m);
      estimates.push_back(within_sum(kxx, rx) / (md * (md - 1.0)) + within_sum(kyy, ry) / (md * (md - 1.0)) -
                          2.0 * cross_sum(kxy, rx, ry) / (md * md));
    }
  } else {
    for (Index s = 0; s < spec.subset_count; ++s) {
      const auto rx = rng.sample_without_replacement(nr, m);
      const auto ry = rng.sample_without_replacement(ng, m);
      estimates.push_back(mmd2_unbiased(gather(real.data(), rx), gather(gen.data(), ry), kernel));
    }
  }
  return estimates;
}

MetricResult kid(const EmbeddingSet& real, const EmbeddingSet& gen, const KidSpec& spec) {
  const auto stats = mean_std(kid_subset_estimates(real, gen, spec));
  return make_result(MetricName::KID, stats.mean, stats.std, real.n(), gen.n(), real.backbone_id(), spec.seed);
}

std::vector<double> knn_radii_squared(const RowMatrix& points, Index k) {
  const Index n = points.rows();
  if (k < 1 || k >= n) {
    throw ValidationError(fmt::format("neighborhood k={} must satisfy 1 <= k < n={}", k, n));
  }
  std::vector<double> radii(static_cast<std::size_t>(n));
  std::vector<double> dist(static_cast<std::size_t>(n - 1));
  for (Index i = 0; i < n; ++i) {
    std::size_t w = 0;
    for (Index j = 0; j < n; ++j) {
      if (j != i) dist[w++] = squared_distance(points, i, points, j);
    }
    std::nth_element(dist.begin(), dist.begin() + (k - 1), dist.end());
    radii[static_cast<std::size_t>(i)] = dist[static_cast<std::size_t>(k - 1)];
  }
  return radii;
}

double manifold_coverage(const RowMatrix& queries, const RowMatrix& reference,
                         const std::vector<double>& reference_radii_squared) {
  if (queries.cols() != reference.cols()) throw ValidationError("manifold_coverage: dimension mismatch");
  if (static_cast<Index>(reference_radii_squared.size()) != reference.rows()) {
    throw ValidationError("manifold_coverage: one radius per reference row required");
  }
  if (queries.rows() == 0) return 0.0;
  Index covered = 0;
  for (Index q = 0; q < queries.rows(); ++q) {
    for (Index r = 0; r < reference.rows(); ++r) {
      if (squared_distance(queries, q, reference, r) <= reference_radii_squared[static_cast<std::size_t>(r)]) {
        ++covered;
        break;
      }
    }
  }
  return static_cast<double>(covered) / static_cast<double>(queries.rows());
}

std::pair<MetricResult, MetricResult> precision_recall(const EmbeddingSet& real, const EmbeddingSet& gen,
                                                       const PrSpec& spec) {
  require_comparable(real.backbone_id(), gen.backbone_id(), real.d(), gen.d(), "precision_recall");
  const auto real_radii = knn_radii_squared(real.data(), spec.neighborhood_k);
  const auto gen_radii = knn_radii_squared(gen.data(), spec.neighborhood_k);
  const double precision = manifold_coverage(gen.data(), real.data(), real_radii);
  const double recall = manifold_coverage(real.data(), gen.data(), gen_radii);
  return {make_result(MetricName::Precision, precision, std::nullopt, real.n(), gen.n(), real.backbone_id()),
          make_result(MetricName::Recall, recall, std::nullopt, real.n(), gen.n(), real.backbone_id())};
}

std::optional<Index> FeatureBundle::row_count() const {
  std::optional<Index> n;
  auto visit = [&](Index rows, const std::string& backbone) {
    if (n && *n != rows) {
      throw ValidationError(
          fmt::format("conflicting set sizes within a bundle: {} rows for '{}' vs {} elsewhere", rows, backbone, *n));
    }
    n = rows;
  };
  for (const auto& e : embeddings) visit(e.n(), e.backbone_id());
  for (const auto& p : probabilities) visit(p.n(), p.backbone_id());
  return n;
}

namespace {

template <typename Set>
const Set* find_by_role(const std::vector<Set>& sets, const BackboneRoles& roles, BackboneRole role,
                        const char* side, const char* kind) {
  const Set* found = nullptr;
  for (const auto& s : sets) {
    if (roles.require(s.backbone_id()) != role) continue;
    if (found) {
      throw ValidationError(fmt::format("{} bundle has two {} sets in the {} feature space: '{}' and '{}'", side,
                                        kind, to_string(role), found->backbone_id(), s.backbone_id()));
    }
    found = &s;
  }
  return found;
}

const EmbeddingSet* find_by_backbone(const std::vector<EmbeddingSet>& sets, const std::string& backbone) {
  for (const auto& s : sets) {
    if (s.backbone_id() == backbone) return &s;
  }
  return nullptr;
}

// Every set must map to a role, and no two sets of one kind may share a role.
void check_bundle_roles(const FeatureBundle& b, const BackboneRoles& roles, const char* side) {
  for (BackboneRole role : {BackboneRole::base, BackboneRole::domain, BackboneRole::clip}) {
    find_by_role(b.embeddings, roles, role, side, "embedding");
    find_by_role(b.probabilities, roles, role, side, "probability");
  }
}

BackboneRole role_of_metric(MetricName m, BackboneRole distribution_role) {
  switch (m) {
    case MetricName::IS:
    case MetricName::FID: return BackboneRole::base;
    case MetricName::IS_star:
    case MetricName::FID_star: return BackboneRole::domain;
    case MetricName::FCD: return BackboneRole::clip;
    default: return distribution_role;
  }
}

}  // namespace

SuiteOutcome evaluate_suite(const FeatureBundle& real, const FeatureBundle& gen, const SuiteSpecs& specs) {
  if (gen.empty()) throw ValidationError("evaluate_suite: generated bundle is empty");
  // Throw on conflicting row counts before any work.
  gen.row_count();
  real.row_count();
  check_bundle_roles(gen, specs.roles, "generated");
  check_bundle_roles(real, specs.roles, "real");

  std::vector<MetricName> wanted = specs.requested;
  if (wanted.empty()) wanted.assign(std::begin(kAllMetrics), std::end(kAllMetrics));
  auto requested = [&](MetricName m) { return std::find(wanted.begin(), wanted.end(), m) != wanted.end(); };

  SuiteOutcome out;
  auto skip = [&](MetricName m, const std::string& why) {
    if (requested(m)) out.notices.push_back(fmt::format("{} skipped: {}", display_name(m), why));
  };

  for (MetricName m : {MetricName::IS, MetricName::IS_star}) {
    if (!requested(m)) continue;
    const auto role = role_of_metric(m, specs.distribution_role);
    const auto* probs = find_by_role(gen.probabilities, specs.roles, role, "generated", "probability");
    if (!probs) {
      skip(m, fmt::format("no generated probabilities in the {} feature space", to_string(role)));
      continue;
    }
    out.results.push_back(inception_score(*probs, specs.split, specs.roles));
  }

  for (MetricName m : {MetricName::FID, MetricName::FID_star, MetricName::FCD}) {
    if (!requested(m)) continue;
    if (real.embeddings.empty()) {
      skip(m, "no real embeddings");
      continue;
    }
    const auto role = role_of_metric(m, specs.distribution_role);
    const auto* g = find_by_role(gen.embeddings, specs.roles, role, "generated", "embedding");
    if (!g) {
      skip(m, fmt::format("no generated embeddings in the {} feature space", to_string(role)));
      continue;
    }
    const auto* r = find_by_backbone(real.embeddings, g->backbone_id());
    if (!r) {
      skip(m, fmt::format("no real embeddings for backbone '{}'", g->backbone_id()));
      continue;
    }
    out.results.push_back(
        frechet_distance(mean_and_covariance(*r), mean_and_covariance(*g), specs.roles, specs.trace_sqrt));
  }

  const bool want_kid = requested(MetricName::KID);
  const bool want_pr = requested(MetricName::Precision) || requested(MetricName::Recall);
  if ((want_kid || want_pr) && real.embeddings.empty()) {
    for (MetricName m : {MetricName::KID, MetricName::Precision, MetricName::Recall}) skip(m, "no real embeddings");
  } else if (want_kid || want_pr) {
    const auto* g = find_by_role(gen.embeddings, specs.roles, specs.distribution_role, "generated", "embedding");
    const EmbeddingSet* r = g ? find_by_backbone(real.embeddings, g->backbone_id()) : nullptr;
    if (!g || !r) {
      const std::string why = !g ? fmt::format("no generated embeddings in the {} feature space",
                                               to_string(specs.distribution_role))
                                 : fmt::format("no real embeddings for backbone '{}'", g->backbone_id());
      for (MetricName m : {MetricName::KID, MetricName::Precision, MetricName::Recall}) skip(m, why);
    } else {
      if (want_kid) out.results.push_back(kid(*r, *g, specs.kid));
      if (want_pr) {
        auto [precision, recall] = precision_recall(*r, *g, specs.pr);
        if (requested(MetricName::Precision)) out.results.push_back(std::move(precision));
        if (requested(MetricName::Recall)) out.results.push_back(std::move(recall));
      }
    }
  }
  return out;
}

}  // namespace geneval
