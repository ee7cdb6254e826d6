#pragma once

#include "lsicert/linalg.hpp"
#include "lsicert/partition.hpp"

#include <Eigen/Cholesky>

#include <span>

namespace lsicert {

class GibbsModel;

/// Multivariate normal law with a cached precision matrix and Cholesky factor.
class GaussianDist {
 public:
  /// Throws ValidationError unless cov is symmetric positive definite and its
  /// computed inverse reproduces the identity within 1e-8 (max norm).
  GaussianDist(Vector mean, Matrix cov);

  static GaussianDist from_precision(Vector mean, const Matrix& precision);

  /// The stationary law q of a Gaussian model. Throws ValidationError for
  /// models with a quartic term.
  static GaussianDist stationary(const GibbsModel& model);

  Index dim() const { return mean_.size(); }
  const Vector& mean() const { return mean_; }
  const Matrix& cov() const { return cov_; }
  const Matrix& precision() const { return precision_; }
  const Eigen::LLT<Matrix>& cov_cholesky() const { return chol_; }
  double log_det_cov() const { return log_det_cov_; }

  double log_density(const Vector& x) const;

  GaussianDist shifted(const Vector& delta) const;

 private:
  Vector mean_;
  Matrix cov_;
  Matrix precision_;
  Eigen::LLT<Matrix> chol_;
  double log_det_cov_ = 0.0;
};

/// Law of the block-k coordinates given the remaining coordinates equal xbar
/// (xbar is ordered like part.complement(k)).
GaussianDist conditional(const GaussianDist& g, const BlockPartition& part, std::size_t k, const Vector& xbar);

GaussianDist marginal(const GaussianDist& g, const IndexList& indices);

/// Relative entropy D(p || q) in nats.
double kl(const GaussianDist& p, const GaussianDist& q);

/// Relative Fisher information E_p |grad log(p/q)|^2.
double fisher(const GaussianDist& p, const GaussianDist& q);

/// Quadratic Wasserstein distance (Bures formula).
double w2(const GaussianDist& p, const GaussianDist& q);

/// W2 for the block-weighted cost sum_k rho_k |z^(k) - u^(k)|^2.
double weighted_w2(const GaussianDist& p, const GaussianDist& q, const BlockPartition& part,
                   std::span<const double> rho);

/// E over Ybar ~ p's complement marginal of D(p^(k)(.|Ybar) || q^(k)(.|Ybar)).
double avg_conditional_kl(const GaussianDist& p, const GaussianDist& q, const BlockPartition& part,
                          std::size_t k);

}  // namespace lsicert
