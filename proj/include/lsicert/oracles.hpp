#pragma once

#include "lsicert/criteria.hpp"
#include "lsicert/gaussian.hpp"
#include "lsicert/model.hpp"

#include <functional>
#include <span>
#include <vector>

namespace lsicert {

using Density = std::function<double(std::span<const double>)>;

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

struct QuadratureResult {
  double value = 0.0;
  /// |integral of p over the box - 1|
  double mass_defect = 0.0;
};

inline constexpr double kMaxMassDefect = 1e-4;
inline constexpr std::size_t kMaxQuadratureDim = 3;

/// Tensor-grid trapezoidal estimate of the integral of p log(p/q).
/// Throws std::invalid_argument when the box has more than three dimensions
/// or either density loses more than kMaxMassDefect of its mass.
QuadratureResult quad_kl(const Density& p, const Density& q, std::span<const Interval> box, std::size_t pts_per_dim);

/// Same grid for the integral of |grad log(p/q)|^2 p, with central
/// differences of step box_width / pts_per_dim in each coordinate.
QuadratureResult quad_fisher(const Density& p, const Density& q, std::span<const Interval> box,
                             std::size_t pts_per_dim);

/// Quantile-coupling W2 between two equally sized sorted samples.
double w2_empirical_1d(std::span<const double> samples_p, std::span<const double> samples_q);

struct Prop4Check {
  double lhs_w2_sum = 0.0;
  double mid_kl_sum = 0.0;
  double rhs = 0.0;
  bool holds_first = false;
  bool holds_second = false;
};

/// sum_k rho_k W^2(Q^(k)(.|zbar), Q^(k)(.|ubar)) <= 2 sum_k D(...) <= (1-delta)^2 sum_k rho_k |z^(k)-u^(k)|^2
Prop4Check prop4_check(const GibbsModel& model, const CriteriaReport& report, const Vector& z, const Vector& u);

struct TransportCheck {
  double w2sq = 0.0;
  double bound = 0.0;
  bool holds = false;
};

/// W^2(p, q) <= (2 / rho_marton) D(p || q)
TransportCheck transport_check(const GaussianDist& p, const GibbsModel& model, const CriteriaReport& report);

}  // namespace lsicert
