#include "lsicert/gaussian.hpp"

#include "lsicert/errors.hpp"
#include "lsicert/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace lsicert {

namespace {

constexpr double kInverseTol = 1e-8;
constexpr double kCovSymmetryTol = 1e-10;

double log_det_spd(const Matrix& m) {
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() != Eigen::Success) throw ValidationError("matrix is not positive definite");
  return 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
}

Matrix spd_inverse(const Matrix& m) {
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() != Eigen::Success) throw ValidationError("matrix is not positive definite");
  return llt.solve(Matrix::Identity(m.rows(), m.cols()));
}

}  // namespace

GaussianDist::GaussianDist(Vector mean, Matrix cov) : mean_(std::move(mean)), cov_(std::move(cov)) {
  const Index n = mean_.size();
  if (n == 0) throw ValidationError("gaussian: dimension must be positive");
  if (cov_.rows() != n || cov_.cols() != n) throw DimensionError("gaussian: covariance shape does not match mean");
  if (!mean_.allFinite() || !cov_.allFinite()) throw ValidationError("gaussian: non-finite parameters");
  const double scale = std::max(1.0, cov_.cwiseAbs().maxCoeff());
  if ((cov_ - cov_.transpose()).cwiseAbs().maxCoeff() > kCovSymmetryTol * scale) {
    throw ValidationError("gaussian: covariance is not symmetric");
  }
  cov_ = linalg::symmetrized(cov_);
  chol_.compute(cov_);
  if (chol_.info() != Eigen::Success) throw ValidationError("gaussian: covariance is not positive definite");
  precision_ = linalg::symmetrized(chol_.solve(Matrix::Identity(n, n)));
  const double defect = (precision_ * cov_ - Matrix::Identity(n, n)).cwiseAbs().maxCoeff();
  if (defect > kInverseTol) {
    throw ValidationError("gaussian: covariance too ill-conditioned (inverse defect " + std::to_string(defect) + ")");
  }
  log_det_cov_ = 2.0 * chol_.matrixL().toDenseMatrix().diagonal().array().log().sum();
}

GaussianDist GaussianDist::from_precision(Vector mean, const Matrix& precision) {
  return GaussianDist(std::move(mean), linalg::symmetrized(spd_inverse(precision)));
}

GaussianDist GaussianDist::stationary(const GibbsModel& model) {
  if (!model.is_gaussian()) throw ValidationError("stationary law is Gaussian only when the quartic term vanishes");
  return from_precision(model.mean(), model.precision());
}

double GaussianDist::log_density(const Vector& x) const {
  linalg::require_same_dim(x.size(), dim(), "log_density");
  const Vector z = chol_.matrixL().solve(x - mean_);
  return -0.5 * (static_cast<double>(dim()) * std::log(2.0 * std::numbers::pi) + log_det_cov_ + z.squaredNorm());
}

GaussianDist GaussianDist::shifted(const Vector& delta) const {
  linalg::require_same_dim(delta.size(), dim(), "shifted");
  return GaussianDist(mean_ + delta, cov_);
}

GaussianDist conditional(const GaussianDist& g, const BlockPartition& part, std::size_t k, const Vector& xbar) {
  linalg::require_same_dim(g.dim(), part.dim(), "conditional");
  const auto& b = part.block(k);
  const auto& c = part.complement(k);
  linalg::require_same_dim(xbar.size(), static_cast<Index>(c.size()), "conditional: xbar");
  if (c.empty()) return g;
  const Matrix p_bb = linalg::select(g.precision(), b, b);
  const Matrix p_bc = linalg::select(g.precision(), b, c);
  Eigen::LLT<Matrix> llt(p_bb);
  Vector mean = linalg::select(g.mean(), b) - llt.solve(p_bc * (xbar - linalg::select(g.mean(), c)));
  return GaussianDist(std::move(mean), linalg::symmetrized(llt.solve(Matrix::Identity(p_bb.rows(), p_bb.cols()))));
}

GaussianDist marginal(const GaussianDist& g, const IndexList& indices) {
  for (Index i : indices) {
    if (i < 0 || i >= g.dim()) throw DimensionError("marginal: index " + std::to_string(i) + " out of range");
  }
  return GaussianDist(linalg::select(g.mean(), indices), linalg::select(g.cov(), indices, indices));
}

double kl(const GaussianDist& p, const GaussianDist& q) {
  linalg::require_same_dim(p.dim(), q.dim(), "kl");
  const Vector dm = q.mean() - p.mean();
  const double trace = (q.precision().cwiseProduct(p.cov())).sum();
  const double value = 0.5 * (trace - static_cast<double>(p.dim()) + dm.dot(q.precision() * dm) + q.log_det_cov() -
                              p.log_det_cov());
  return std::max(0.0, value);
}

double fisher(const GaussianDist& p, const GaussianDist& q) {
  linalg::require_same_dim(p.dim(), q.dim(), "fisher");
  // grad log(p/q)(x) = (Pq - Pp)(x - mp) + Pq (mp - mq)
  const Matrix m = q.precision() - p.precision();
  const Vector shift = q.precision() * (p.mean() - q.mean());
  return std::max(0.0, (m * p.cov() * m).trace() + shift.squaredNorm());
}

double w2(const GaussianDist& p, const GaussianDist& q) {
  linalg::require_same_dim(p.dim(), q.dim(), "w2");
  const Matrix root_q = linalg::psd_sqrt(q.cov());
  const Matrix cross = linalg::psd_sqrt(linalg::symmetrized(root_q * p.cov() * root_q));
  const double sq = (p.mean() - q.mean()).squaredNorm() + p.cov().trace() + q.cov().trace() - 2.0 * cross.trace();
  return std::sqrt(std::max(0.0, sq));
}

double weighted_w2(const GaussianDist& p, const GaussianDist& q, const BlockPartition& part,
                   std::span<const double> rho) {
  linalg::require_same_dim(p.dim(), q.dim(), "weighted_w2");
  linalg::require_same_dim(p.dim(), part.dim(), "weighted_w2: partition");
  linalg::require_same_dim(static_cast<Index>(rho.size()), static_cast<Index>(part.block_count()),
                           "weighted_w2: weights");
  Vector scale(p.dim());
  for (Index i = 0; i < p.dim(); ++i) {
    const double r = rho[part.block_of(i)];
    if (!(r > 0.0)) throw std::invalid_argument("weighted_w2: weights must be positive");
    scale(i) = std::sqrt(r);
  }
  const auto s = scale.asDiagonal();
  const GaussianDist ps(s * p.mean(), s * p.cov() * s);
  const GaussianDist qs(s * q.mean(), s * q.cov() * s);
  return w2(ps, qs);
}

double avg_conditional_kl(const GaussianDist& p, const GaussianDist& q, const BlockPartition& part,
                          std::size_t k) {
  linalg::require_same_dim(p.dim(), q.dim(), "avg_conditional_kl");
  linalg::require_same_dim(p.dim(), part.dim(), "avg_conditional_kl: partition");
  const auto& b = part.block(k);
  const auto& c = part.complement(k);
  if (c.empty()) return kl(p, q);

  const Matrix pp_bb = linalg::select(p.precision(), b, b);
  const Matrix pq_bb = linalg::select(q.precision(), b, b);
  Eigen::LLT<Matrix> llt_p(pp_bb);
  Eigen::LLT<Matrix> llt_q(pq_bb);
  const Index nb = static_cast<Index>(b.size());
  const Matrix cond_cov_p = llt_p.solve(Matrix::Identity(nb, nb));

  // Conditional means are affine: mean(y) = m_b + L (y - m_c).
  const Matrix gain_p = -llt_p.solve(linalg::select(p.precision(), b, c));
  const Matrix gain_q = -llt_q.solve(linalg::select(q.precision(), b, c));
  const Vector offset = linalg::select(p.mean(), b) - linalg::select(q.mean(), b) -
                        gain_q * (linalg::select(p.mean(), c) - linalg::select(q.mean(), c));
  const Matrix gain_diff = gain_p - gain_q;
  const Matrix cov_c = linalg::select(p.cov(), c, c);

  const double mean_term = offset.dot(pq_bb * offset) + (gain_diff.transpose() * pq_bb * gain_diff * cov_c).trace();
  const double trace_term = (pq_bb.cwiseProduct(cond_cov_p)).sum();
  const double log_det_term = log_det_spd(pp_bb) - log_det_spd(pq_bb);
  return std::max(0.0, 0.5 * (trace_term - static_cast<double>(nb) + log_det_term + mean_term));
}

}  // namespace lsicert
