#include "lsicert/linalg.hpp"

#include "lsicert/errors.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>

namespace lsicert::linalg {

Matrix symmetrized(const Matrix& m) { return 0.5 * (m + m.transpose()); }

double min_eigenvalue(const Matrix& symmetric) {
  if (symmetric.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetric, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

double max_eigenvalue(const Matrix& symmetric) {
  if (symmetric.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetric, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(es.eigenvalues().size() - 1);
}

double spectral_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  if (m.rows() <= 16 && m.cols() <= 16) {
    Eigen::JacobiSVD<Matrix> svd(m);
    return svd.singularValues()(0);
  }
  Eigen::BDCSVD<Matrix> svd(m);
  return svd.singularValues()(0);
}

Matrix psd_sqrt(const Matrix& symmetric) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetric);
  Vector roots = es.eigenvalues().unaryExpr([](double v) { return v < kEigenClamp ? 0.0 : std::sqrt(v); });
  return es.eigenvectors() * roots.asDiagonal() * es.eigenvectors().transpose();
}

Matrix exp_neg(const Matrix& symmetric, double t) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetric);
  Vector decay = (-t * es.eigenvalues().array()).exp().matrix();
  return es.eigenvectors() * decay.asDiagonal() * es.eigenvectors().transpose();
}

Matrix select(const Matrix& m, const IndexList& rows, const IndexList& cols) { return m(rows, cols); }

Vector select(const Vector& v, const IndexList& idx) { return v(idx); }

void require_same_dim(Index a, Index b, const std::string& what) {
  if (a != b) {
    throw DimensionError(what + ": dimension mismatch (" + std::to_string(a) + " vs " + std::to_string(b) + ")");
  }
}

}  // namespace lsicert::linalg
