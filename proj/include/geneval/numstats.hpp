// Copyright 2026 The geneval Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "geneval/types.hpp"

#include <span>

namespace geneval {

struct SymmetricEigen {
  Vector eigenvalues;  // descending
  Matrix eigenvectors;  // orthonormal columns, column i pairs with eigenvalues(i)
};

/// Row mean and unbiased (N-1) covariance, exactly symmetrized. Throws
/// ValidationError for fewer than two rows.
GaussianSummary mean_and_covariance(const EmbeddingSet& x);

/// Largest tolerated asymmetry |S - S^T| (absolute, scaled by max(1, max|S|)).
inline constexpr double kEigenSymmetryTolerance = 1e-8;

/// Full eigendecomposition of a symmetric matrix. Only the upper triangle is
/// read once symmetry is checked. Throws ValidationError for non-square or
/// non-symmetric input and NumericalError if the solver fails to converge.
SymmetricEigen symmetric_eigen(const Matrix& s);

/// Eigenvalues only, descending. Same preconditions as symmetric_eigen.
Vector symmetric_eigenvalues(const Matrix& s);

/// Eigenvalues below -kPsdTolerance * max eigenvalue mean the input is not
/// PSD; values between that bound and zero are treated as round-off and
/// clamped.
inline constexpr double kPsdTolerance = 1e-5;

struct TraceSqrtOptions {
  /// Added to the diagonal of both inputs before anything else.
  double epsilon = 0.0;
};

/// Tr((A B)^{1/2}) for symmetric PSD A, B, evaluated as
/// Tr((A^{1/2} B A^{1/2})^{1/2}) with A^{1/2} the clamped PSD square root.
/// Always >= 0. Throws ValidationError on shape mismatch, asymmetry, or an
/// eigenvalue more negative than the PSD tolerance ("input not PSD").
double trace_sqrt_product(const Matrix& a, const Matrix& b, TraceSqrtOptions options = {});

/// PSD square root V diag(sqrt(max(lambda, 0))) V^T with the same PSD check.
Matrix psd_sqrt(const Matrix& s);

/// Sum that does not depend on the order of `values` (sorted, then
/// compensated). The span is copied.
double order_invariant_sum(std::span<const double> values);

}  // namespace geneval
