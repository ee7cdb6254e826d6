#pragma once

#include "lsicert/gaussian.hpp"
#include "lsicert/model.hpp"

#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

namespace lsicert {

/// Law at time t of the Fokker-Planck flow dp/dt = Lap p + div(p grad V)
/// started at a Gaussian p0, for a Gaussian model:
///   mean_t = m + e^{-Kt}(mean_0 - m)
///   cov_t  = e^{-Kt}(cov_0 - K^{-1})e^{-Kt} + K^{-1}
GaussianDist gaussian_fp_evolve(const GaussianDist& p0, const GibbsModel& model, double t);

std::vector<double> uniform_grid(double t0, double t1, double step);

struct EntropyTrace {
  std::vector<double> times;
  std::vector<double> kl_values;
  std::vector<double> fisher_values;
  /// e^{-2 rho t} D_0; empty when no certificate was attached.
  std::vector<double> lsi_bound;
};

/// Checkpoint dump with header t,kl,fisher,bound.
void write_trace_csv(std::ostream& out, const EntropyTrace& trace);

inline constexpr double kCoarseGridSpacing = 0.1;

struct DissipationResult {
  EntropyTrace trace;
  /// max over interior nodes of |centered difference of D + I|
  double max_residual = 0.0;
  /// 1e-5 (1 + max I)
  double residual_tolerance = 0.0;
  /// trapezoidal integral of I over the grid vs D(t_0) - D(t_end)
  double fisher_integral = 0.0;
  double kl_drop = 0.0;
  bool coarse_grid = false;
};

DissipationResult dissipation_check(const GaussianDist& p0, const GibbsModel& model, std::span<const double> grid,
                                    std::optional<double> rho = std::nullopt);

/// D(p_t||q) <= e^{-2 rho t} D(p_0||q) (1 + 1e-9) at every grid node.
bool exp_decay_check(const GaussianDist& p0, const GibbsModel& model, double rho, std::span<const double> grid);

struct LangevinOptions {
  double dt = 1e-3;
  int steps = 1000;
  std::size_t particles = 100'000;
  std::uint64_t seed = 42;
  /// Moment checkpoints every this many steps (and always at the end).
  int checkpoint_every = 100;
};

struct MomentCheckpoint {
  double t = 0.0;
  Vector mean;
  Matrix cov;
  /// Closed-form reference (Gaussian models only).
  std::optional<Vector> reference_mean;
  std::optional<Matrix> reference_cov;
  /// 5 (MC standard error + Euler-Maruyama bias) per entry.
  Vector mean_band;
  Matrix cov_band;
  bool within_band = true;
};

struct LangevinResult {
  /// N x n, one particle per column.
  Matrix particles;
  std::vector<MomentCheckpoint> checkpoints;
};

/// Upper bound on the Hessian spectrum used for the step-size rule
/// dt <= 0.1 / bound. For quartic models the bound covers the box
/// mean_0 +/- 6 sd of p0.
double hessian_spectral_bound(const GibbsModel& model, const GaussianDist& p0);

/// Euler-Maruyama for dX = -grad V dt + sqrt(2) dW. Throws StepSizeError when
/// dt > 0.1 / hessian_spectral_bound, std::invalid_argument when fewer than
/// 1000 particles are requested.
LangevinResult langevin_particles(const GibbsModel& model, const GaussianDist& p0, const LangevinOptions& options);

}  // namespace lsicert
