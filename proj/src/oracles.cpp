#include "lsicert/oracles.hpp"

#include "lsicert/errors.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace lsicert {

namespace {

/// Visits every node of the tensor trapezoid grid with its weight.
template <typename Visit>
void for_each_node(std::span<const Interval> box, std::size_t pts, Visit visit) {
  const std::size_t dim = box.size();
  if (dim == 0 || dim > kMaxQuadratureDim) {
    throw std::invalid_argument("quadrature: dimension must be in [1, 3]");
  }
  if (pts < 2) throw std::invalid_argument("quadrature: need at least two points per dimension");
  std::vector<double> step(dim);
  for (std::size_t d = 0; d < dim; ++d) {
    if (!(box[d].hi > box[d].lo)) throw std::invalid_argument("quadrature: empty interval");
    step[d] = (box[d].hi - box[d].lo) / static_cast<double>(pts - 1);
  }
  std::vector<std::size_t> idx(dim, 0);
  std::vector<double> x(dim);
  while (true) {
    double weight = 1.0;
    for (std::size_t d = 0; d < dim; ++d) {
      x[d] = box[d].lo + static_cast<double>(idx[d]) * step[d];
      weight *= (idx[d] == 0 || idx[d] == pts - 1) ? 0.5 * step[d] : step[d];
    }
    visit(std::span<double>(x), weight);
    std::size_t d = 0;
    while (d < dim && ++idx[d] == pts) idx[d++] = 0;
    if (d == dim) break;
  }
}

void check_mass(double mass_p, double mass_q) {
  if (std::abs(mass_p - 1.0) > kMaxMassDefect || std::abs(mass_q - 1.0) > kMaxMassDefect) {
    throw std::invalid_argument("quadrature: mass defect above " + std::to_string(kMaxMassDefect) +
                                " (p: " + std::to_string(mass_p) + ", q: " + std::to_string(mass_q) +
                                "); enlarge the box");
  }
}

}  // namespace

QuadratureResult quad_kl(const Density& p, const Density& q, std::span<const Interval> box, std::size_t pts_per_dim) {
  double value = 0.0, mass_p = 0.0, mass_q = 0.0;
  for_each_node(box, pts_per_dim, [&](std::span<double> x, double w) {
    const double pv = p(x);
    const double qv = q(x);
    mass_p += w * pv;
    mass_q += w * qv;
    if (pv > 0.0) value += w * pv * (std::log(pv) - std::log(qv));
  });
  check_mass(mass_p, mass_q);
  return QuadratureResult{value, std::abs(mass_p - 1.0)};
}

QuadratureResult quad_fisher(const Density& p, const Density& q, std::span<const Interval> box,
                             std::size_t pts_per_dim) {
  double value = 0.0, mass_p = 0.0, mass_q = 0.0;
  const std::size_t dim = box.size();
  std::vector<double> h(dim);
  for (std::size_t d = 0; d < dim; ++d) h[d] = (box[d].hi - box[d].lo) / static_cast<double>(pts_per_dim);
  std::vector<double> shifted(dim);
  auto log_ratio = [&](std::span<const double> y) { return std::log(p(y)) - std::log(q(y)); };

  for_each_node(box, pts_per_dim, [&](std::span<double> x, double w) {
    const double pv = p(x);
    mass_p += w * pv;
    mass_q += w * q(x);
    if (!(pv > 0.0)) return;
    double grad_sq = 0.0;
    for (std::size_t d = 0; d < dim; ++d) {
      std::copy(x.begin(), x.end(), shifted.begin());
      shifted[d] = x[d] + h[d];
      const double up = log_ratio(shifted);
      shifted[d] = x[d] - h[d];
      const double down = log_ratio(shifted);
      const double g = (up - down) / (2.0 * h[d]);
      if (!std::isfinite(g)) return;  // density underflow at the far tails
      grad_sq += g * g;
    }
    value += w * pv * grad_sq;
  });
  check_mass(mass_p, mass_q);
  return QuadratureResult{value, std::abs(mass_p - 1.0)};
}

double w2_empirical_1d(std::span<const double> samples_p, std::span<const double> samples_q) {
  if (samples_p.size() != samples_q.size()) throw DimensionError("w2_empirical_1d: sample counts differ");
  if (samples_p.empty()) throw std::invalid_argument("w2_empirical_1d: empty samples");
  if (!std::is_sorted(samples_p.begin(), samples_p.end()) || !std::is_sorted(samples_q.begin(), samples_q.end())) {
    throw std::invalid_argument("w2_empirical_1d: samples must be sorted");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < samples_p.size(); ++i) {
    const double d = samples_p[i] - samples_q[i];
    sum += d * d;
  }
  return std::sqrt(sum / static_cast<double>(samples_p.size()));
}

Prop4Check prop4_check(const GibbsModel& model, const CriteriaReport& report, const Vector& z, const Vector& u) {
  if (!model.is_gaussian()) throw std::invalid_argument("prop4_check: Gaussian model required");
  if (!report.rho_marton || !(report.norm_A0 < 1.0)) throw CertificateError("prop4_check: no certificate");
  linalg::require_same_dim(z.size(), model.dim(), "prop4_check: z");
  linalg::require_same_dim(u.size(), model.dim(), "prop4_check: u");

  const auto& part = model.partition();
  const GaussianDist q = GaussianDist::stationary(model);
  Prop4Check check;
  double weighted_sq = 0.0;
  for (std::size_t k = 0; k < part.block_count(); ++k) {
    const auto& rest = part.complement(k);
    const GaussianDist at_z = conditional(q, part, k, linalg::select(z, rest));
    const GaussianDist at_u = conditional(q, part, k, linalg::select(u, rest));
    // Both conditionals share the covariance (K_kk)^{-1}.
    const Vector shift = at_z.mean() - at_u.mean();
    const double rho = report.rho_k[k];
    check.lhs_w2_sum += rho * shift.squaredNorm();
    check.mid_kl_sum += shift.dot(at_u.precision() * shift);  // 2 * D
    weighted_sq += rho * (linalg::select(z, part.block(k)) - linalg::select(u, part.block(k))).squaredNorm();
  }
  check.rhs = report.norm_A0 * report.norm_A0 * weighted_sq;
  check.holds_first = check.lhs_w2_sum <= check.mid_kl_sum + kInequalitySlack;
  check.holds_second = check.mid_kl_sum <= check.rhs + kInequalitySlack;
  return check;
}

TransportCheck transport_check(const GaussianDist& p, const GibbsModel& model, const CriteriaReport& report) {
  if (!report.rho_marton) throw CertificateError("transport_check: no certificate");
  const GaussianDist q = GaussianDist::stationary(model);
  TransportCheck check;
  const double w = w2(p, q);
  check.w2sq = w * w;
  check.bound = 2.0 / *report.rho_marton * kl(p, q);
  check.holds = check.w2sq <= check.bound + kInequalitySlack;
  return check;
}

}  // namespace lsicert
