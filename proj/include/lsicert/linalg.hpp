#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <string>
#include <vector>

namespace lsicert {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using IndexList = std::vector<Index>;

namespace linalg {

inline constexpr double kEigenClamp = 1e-14;

Matrix symmetrized(const Matrix& m);

double min_eigenvalue(const Matrix& symmetric);
double max_eigenvalue(const Matrix& symmetric);

/// Largest singular value (spectral norm).
double spectral_norm(const Matrix& m);

/// Principal square root of a symmetric PSD matrix. Eigenvalues below
/// kEigenClamp are clamped to zero before the root is taken.
Matrix psd_sqrt(const Matrix& symmetric);

/// exp(-t * symmetric) via eigendecomposition.
Matrix exp_neg(const Matrix& symmetric, double t);

Matrix select(const Matrix& m, const IndexList& rows, const IndexList& cols);
Vector select(const Vector& v, const IndexList& idx);

/// Throws DimensionError with `what` in the message when sizes differ.
void require_same_dim(Index a, Index b, const std::string& what);

}  // namespace linalg
}  // namespace lsicert
