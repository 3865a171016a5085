// Copyright 2026 The geneval Authors
// SPDX-License-Identifier: Apache-2.0

#include "geneval/numstats.hpp"

#include "geneval/error.hpp"

#include <fmt/format.h>
#include <lapacke.h>

#include <algorithm>
#include <limits>
#include <cmath>
#include <vector>

namespace geneval {

namespace {

void check_symmetric(const Matrix& s, const char* what) {
  if (s.rows() != s.cols()) {
    throw ValidationError(fmt::format("{}: matrix is not square ({}x{})", what, s.rows(), s.cols()));
  }
  if (s.size() == 0) throw ValidationError(fmt::format("{}: empty matrix", what));
  if (!s.allFinite()) throw ValidationError(fmt::format("{}: non-finite entries", what));
  const double scale = std::max(1.0, s.cwiseAbs().maxCoeff());
  const double asym = (s - s.transpose()).cwiseAbs().maxCoeff();
  if (asym > kEigenSymmetryTolerance * scale) {
    throw ValidationError(fmt::format("{}: matrix is not symmetric (max |S - S^T| = {})", what, asym));
  }
}

// LAPACK divide-and-conquer on a column-major copy; returns ascending values.
Vector run_dsyevd(Matrix& work, bool vectors) {
  const auto n = static_cast<lapack_int>(work.rows());
  Vector w(work.rows());
  const lapack_int info =
      LAPACKE_dsyevd(LAPACK_COL_MAJOR, vectors ? 'V' : 'N', 'U', n, work.data(), n, w.data());
  if (info < 0) throw Error(fmt::format("dsyevd: illegal argument {}", -info));
  if (info > 0) {
    throw NumericalError(fmt::format("symmetric eigensolver failed to converge on n={} (dsyevd info={})", n, info));
  }
  return w;
}

// Clamps round-off negatives to zero; throws if any eigenvalue is more
// negative than the PSD tolerance allows.
void clamp_psd(Vector& lambda, const char* what) {
  const double scale = lambda.cwiseAbs().maxCoeff();
  for (Index i = 0; i < lambda.size(); ++i) {
    if (lambda(i) < -kPsdTolerance * scale) {
      throw ValidationError(fmt::format("{}: input not PSD (eigenvalue {} with max |eigenvalue| {})", what,
                                        lambda(i), scale));
    }
    if (lambda(i) < 0.0) lambda(i) = 0.0;
  }
}

// Eigenvalues at or below the solver's round-off floor, D * eps * max|lambda|,
// carry no information; their square roots would add noise of order
// sqrt(eps) to a trace, so they are zeroed.
void zero_below_rank_cutoff(Vector& lambda) {
  if (lambda.size() == 0) return;
  const double cutoff = static_cast<double>(lambda.size()) * std::numeric_limits<double>::epsilon() *
                        lambda.cwiseAbs().maxCoeff();
  for (Index i = 0; i < lambda.size(); ++i) {
    if (lambda(i) <= cutoff) lambda(i) = 0.0;
  }
}

}  // namespace

GaussianSummary mean_and_covariance(const EmbeddingSet& x) {
  if (x.n() < 2) {
    throw ValidationError(fmt::format("mean_and_covariance needs at least 2 rows, got {}", x.n()));
  }
  const Vector mean = x.data().colwise().mean().transpose();
  const Matrix centered = x.data().rowwise() - mean.transpose();
  Matrix cov = (centered.transpose() * centered) / static_cast<double>(x.n() - 1);
  Matrix sym = (cov + cov.transpose()) * 0.5;
  return GaussianSummary(mean, std::move(sym), x.n(), x.backbone_id());
}

SymmetricEigen symmetric_eigen(const Matrix& s) {
  check_symmetric(s, "symmetric_eigen");
  Matrix work = s;
  Vector ascending = run_dsyevd(work, true);
  SymmetricEigen out;
  out.eigenvalues = ascending.reverse();
  out.eigenvectors = work.rowwise().reverse();
  return out;
}

Vector symmetric_eigenvalues(const Matrix& s) {
  check_symmetric(s, "symmetric_eigenvalues");
  Matrix work = s;
  return run_dsyevd(work, false).reverse();
}

Matrix psd_sqrt(const Matrix& s) {
  SymmetricEigen eig = symmetric_eigen(s);
  clamp_psd(eig.eigenvalues, "psd_sqrt");
  const Matrix scaled = eig.eigenvectors * eig.eigenvalues.cwiseSqrt().asDiagonal();
  return scaled * eig.eigenvectors.transpose();
}

double trace_sqrt_product(const Matrix& a, const Matrix& b, TraceSqrtOptions options) {
  check_symmetric(a, "trace_sqrt_product(first)");
  check_symmetric(b, "trace_sqrt_product(second)");
  if (a.rows() != b.rows()) {
    throw ValidationError(fmt::format("trace_sqrt_product: dimension mismatch {} vs {}", a.rows(), b.rows()));
  }
  const Index d = a.rows();
  Matrix a_reg = a;
  Matrix b_reg = b;
  if (options.epsilon != 0.0) {
    a_reg.diagonal().array() += options.epsilon;
    b_reg.diagonal().array() += options.epsilon;
  }

  SymmetricEigen eig_a = symmetric_eigen(a_reg);
  clamp_psd(eig_a.eigenvalues, "trace_sqrt_product(first)");
  zero_below_rank_cutoff(eig_a.eigenvalues);
  Vector lambda_b = symmetric_eigenvalues(b_reg);
  clamp_psd(lambda_b, "trace_sqrt_product(second)");

  // A^{1/2} B A^{1/2} = V D (V^T B V) D V^T with D = diag(sqrt(lambda_a)); the
  // similarity by V leaves the spectrum unchanged, and columns with a clamped
  // zero eigenvalue contribute zero rows/columns, so only the positive block
  // is decomposed.
  Index rank = 0;
  while (rank < d && eig_a.eigenvalues(rank) > 0.0) ++rank;
  if (rank == 0) return 0.0;

  const auto basis = eig_a.eigenvectors.leftCols(rank);
  const Vector root = eig_a.eigenvalues.head(rank).cwiseSqrt();
  Matrix inner = basis.transpose() * (b_reg * basis);
  inner = root.asDiagonal() * inner * root.asDiagonal();
  inner = (inner + inner.transpose()).eval() * 0.5;

  Vector mu = symmetric_eigenvalues(inner);
  clamp_psd(mu, "trace_sqrt_product(inner product)");
  zero_below_rank_cutoff(mu);
  std::vector<double> roots(static_cast<std::size_t>(mu.size()));
  for (Index i = 0; i < mu.size(); ++i) roots[static_cast<std::size_t>(i)] = std::sqrt(mu(i));
  return order_invariant_sum(roots);
}

double order_invariant_sum(std::span<const double> values) {
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  // Neumaier compensated summation over the sorted sequence.
  double sum = 0.0;
  double carry = 0.0;
  for (double v : sorted) {
    const double t = sum + v;
    if (std::abs(sum) >= std::abs(v)) {
      carry += (sum - t) + v;
    } else {
      carry += (v - t) + sum;
    }
    sum = t;
  }
  // + 0.0 folds a signed zero so equal inputs give bitwise-equal outputs.
  return (sum + carry) + 0.0;
}

}  // namespace geneval
