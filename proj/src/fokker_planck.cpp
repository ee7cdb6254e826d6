#include "lsicert/fokker_planck.hpp"

#include "lsicert/errors.hpp"
#include "lsicert/random.hpp"
#include "parallel.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <string>

namespace lsicert {

namespace {

constexpr std::size_t kParticlesPerChunk = 1024;
constexpr double kDecaySlack = 1e-9;
constexpr double kBandMultiplier = 5.0;

void require_gaussian(const GibbsModel& model, const char* what) {
  if (!model.is_gaussian()) {
    throw std::invalid_argument(std::string(what) + ": closed-form evolution needs a Gaussian model");
  }
}

/// Closed-form Gaussian flow with the eigendecomposition of K computed once.
class GaussianFlow {
 public:
  explicit GaussianFlow(const GibbsModel& model)
      : eig_(model.precision()), mean_(model.mean()), q_(GaussianDist::stationary(model)) {}

  const GaussianDist& stationary() const { return q_; }

  GaussianDist at(const GaussianDist& p0, double t) const {
    if (t == 0.0) return p0;
    const Vector decay = (-t * eig_.eigenvalues().array()).exp().matrix();
    const Matrix e = eig_.eigenvectors() * decay.asDiagonal() * eig_.eigenvectors().transpose();
    Vector mean = mean_ + e * (p0.mean() - mean_);
    Matrix cov = e * (p0.cov() - q_.cov()) * e + q_.cov();
    return GaussianDist(std::move(mean), linalg::symmetrized(cov));
  }

 private:
  Eigen::SelfAdjointEigenSolver<Matrix> eig_;
  Vector mean_;
  GaussianDist q_;
};

}  // namespace

GaussianDist gaussian_fp_evolve(const GaussianDist& p0, const GibbsModel& model, double t) {
  require_gaussian(model, "gaussian_fp_evolve");
  linalg::require_same_dim(p0.dim(), model.dim(), "gaussian_fp_evolve");
  if (!(t >= 0.0)) throw std::invalid_argument("gaussian_fp_evolve: t must be >= 0");
  return GaussianFlow(model).at(p0, t);
}

std::vector<double> uniform_grid(double t0, double t1, double step) {
  if (!(step > 0.0) || !(t1 >= t0)) throw std::invalid_argument("uniform_grid: need step > 0 and t1 >= t0");
  const auto intervals = static_cast<std::size_t>(std::llround((t1 - t0) / step));
  std::vector<double> grid(intervals + 1);
  for (std::size_t i = 0; i <= intervals; ++i) grid[i] = t0 + static_cast<double>(i) * step;
  if (intervals > 0) grid.back() = t1;
  return grid;
}

void write_trace_csv(std::ostream& out, const EntropyTrace& trace) {
  out << "t,kl,fisher,bound\n";
  char buf[128];
  for (std::size_t i = 0; i < trace.times.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,", trace.times[i], trace.kl_values[i], trace.fisher_values[i]);
    out << buf;
    if (i < trace.lsi_bound.size()) {
      std::snprintf(buf, sizeof buf, "%.17g", trace.lsi_bound[i]);
      out << buf;
    }
    out << '\n';
  }
}

DissipationResult dissipation_check(const GaussianDist& p0, const GibbsModel& model, std::span<const double> grid,
                                    std::optional<double> rho) {
  require_gaussian(model, "dissipation_check");
  linalg::require_same_dim(p0.dim(), model.dim(), "dissipation_check");
  if (grid.empty()) throw std::invalid_argument("dissipation_check: empty grid");
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (!(grid[i] > grid[i - 1])) throw std::invalid_argument("dissipation_check: grid must be increasing");
  }

  const GaussianFlow flow(model);
  DissipationResult result;
  auto& trace = result.trace;
  for (double t : grid) {
    const GaussianDist pt = flow.at(p0, t);
    trace.times.push_back(t);
    trace.kl_values.push_back(kl(pt, flow.stationary()));
    trace.fisher_values.push_back(fisher(pt, flow.stationary()));
  }
  if (rho) {
    for (double t : grid) trace.lsi_bound.push_back(std::exp(-2.0 * *rho * (t - grid.front())) * trace.kl_values[0]);
  }

  double max_fisher = 0.0;
  for (double v : trace.fisher_values) max_fisher = std::max(max_fisher, v);
  result.residual_tolerance = 1e-5 * (1.0 + max_fisher);
  for (std::size_t i = 1; i + 1 < grid.size(); ++i) {
    const double slope = (trace.kl_values[i + 1] - trace.kl_values[i - 1]) / (grid[i + 1] - grid[i - 1]);
    result.max_residual = std::max(result.max_residual, std::abs(slope + trace.fisher_values[i]));
  }
  for (std::size_t i = 1; i < grid.size(); ++i) {
    const double h = grid[i] - grid[i - 1];
    result.fisher_integral += 0.5 * h * (trace.fisher_values[i] + trace.fisher_values[i - 1]);
    result.coarse_grid = result.coarse_grid || h > kCoarseGridSpacing;
  }
  result.kl_drop = trace.kl_values.front() - trace.kl_values.back();
  return result;
}

bool exp_decay_check(const GaussianDist& p0, const GibbsModel& model, double rho, std::span<const double> grid) {
  require_gaussian(model, "exp_decay_check");
  const GaussianFlow flow(model);
  const double d0 = kl(p0, flow.stationary());
  for (double t : grid) {
    const double dt = kl(flow.at(p0, t), flow.stationary());
    // The absolute term only absorbs roundoff when d0 is zero.
    if (dt > std::exp(-2.0 * rho * t) * d0 * (1.0 + kDecaySlack) + 1e-14) return false;
  }
  return true;
}

double hessian_spectral_bound(const GibbsModel& model, const GaussianDist& p0) {
  double bound = linalg::max_eigenvalue(model.precision());
  if (!model.is_gaussian()) {
    double extra = 0.0;
    for (Index i = 0; i < model.dim(); ++i) {
      const double r = std::abs(p0.mean()(i)) + 6.0 * std::sqrt(p0.cov()(i, i));
      extra = std::max(extra, 12.0 * model.quartic()(i) * r * r);
    }
    bound += extra;
  }
  return bound;
}

LangevinResult langevin_particles(const GibbsModel& model, const GaussianDist& p0, const LangevinOptions& options) {
  linalg::require_same_dim(p0.dim(), model.dim(), "langevin_particles");
  if (options.particles < 1000) throw std::invalid_argument("langevin_particles: at least 1000 particles required");
  if (options.steps < 1 || options.checkpoint_every < 1) {
    throw std::invalid_argument("langevin_particles: steps and checkpoint_every must be positive");
  }
  const double bound = hessian_spectral_bound(model, p0);
  if (!(options.dt > 0.0) || options.dt > 0.1 / bound) {
    throw StepSizeError("langevin_particles: dt = " + std::to_string(options.dt) + " exceeds 0.1 / " +
                        std::to_string(bound));
  }

  std::vector<int> checkpoint_steps{0};
  for (int s = options.checkpoint_every; s < options.steps; s += options.checkpoint_every) checkpoint_steps.push_back(s);
  checkpoint_steps.push_back(options.steps);
  const std::size_t ncp = checkpoint_steps.size();

  const Index n = model.dim();
  const std::size_t total = options.particles;
  const std::size_t chunks = (total + kParticlesPerChunk - 1) / kParticlesPerChunk;
  std::vector<std::vector<Vector>> chunk_sum(chunks, std::vector<Vector>(ncp, Vector::Zero(n)));
  std::vector<std::vector<Matrix>> chunk_outer(chunks, std::vector<Matrix>(ncp, Matrix::Zero(n, n)));

  LangevinResult result;
  result.particles.resize(n, static_cast<Index>(total));
  const SeedTree root = SeedTree(options.seed).child("langevin");
  const Matrix factor = p0.cov_cholesky().matrixL();
  const Matrix& k = model.precision();
  const Vector& m = model.mean();
  const Vector& lambda = model.quartic();
  const bool quartic = !model.is_gaussian();
  const double noise = std::sqrt(2.0 * options.dt);

  detail::parallel_for_chunks(chunks, [&](std::size_t c) {
    auto rng = root.child(c).engine();
    std::normal_distribution<double> normal;
    const std::size_t begin = c * kParticlesPerChunk;
    const Index count = static_cast<Index>(std::min(total, begin + kParticlesPerChunk) - begin);
    Matrix x(n, count), z(n, count), drift(n, count);
    auto draw = [&] {
      for (Index j = 0; j < count; ++j) {
        for (Index i = 0; i < n; ++i) z(i, j) = normal(rng);
      }
    };
    draw();
    x = (factor * z).colwise() + p0.mean();
    std::size_t next_cp = 0;
    for (int step = 0; step <= options.steps; ++step) {
      if (next_cp < ncp && checkpoint_steps[next_cp] == step) {
        chunk_sum[c][next_cp] = x.rowwise().sum();
        chunk_outer[c][next_cp].noalias() = x * x.transpose();
        ++next_cp;
      }
      if (step == options.steps) break;
      drift.noalias() = k * (x.colwise() - m);
      if (quartic) drift.array() += 4.0 * (x.array().cube().colwise() * lambda.array());
      draw();
      x += -options.dt * drift + noise * z;
    }
    result.particles.middleCols(static_cast<Index>(begin), count) = x;
  });

  std::optional<GaussianFlow> flow;
  if (!quartic) flow.emplace(model);
  const Matrix step_map = Matrix::Identity(n, n) - options.dt * k;
  Vector em_mean = p0.mean();
  Matrix em_cov = p0.cov();
  int em_step = 0;
  const double count = static_cast<double>(total);

  for (std::size_t cp = 0; cp < ncp; ++cp) {
    Vector sum = Vector::Zero(n);
    Matrix outer = Matrix::Zero(n, n);
    for (std::size_t c = 0; c < chunks; ++c) {
      sum += chunk_sum[c][cp];
      outer += chunk_outer[c][cp];
    }
    MomentCheckpoint point;
    point.t = options.dt * checkpoint_steps[cp];
    point.mean = sum / count;
    point.cov = (outer - count * point.mean * point.mean.transpose()) / (count - 1.0);

    std::optional<GaussianDist> exact;
    if (flow) exact = flow->at(p0, point.t);
    const Matrix& ref_cov = exact ? exact->cov() : point.cov;
    Vector mc_mean(n);
    Matrix mc_cov(n, n);
    for (Index i = 0; i < n; ++i) {
      mc_mean(i) = std::sqrt(ref_cov(i, i) / count);
      for (Index j = 0; j < n; ++j) {
        mc_cov(i, j) = std::sqrt((ref_cov(i, i) * ref_cov(j, j) + ref_cov(i, j) * ref_cov(i, j)) / count);
      }
    }
    if (exact) {
      // Exact moments of the Euler-Maruyama chain, to expose its bias.
      for (; em_step < checkpoint_steps[cp]; ++em_step) {
        em_mean = m + step_map * (em_mean - m);
        em_cov = step_map * em_cov * step_map.transpose() + 2.0 * options.dt * Matrix::Identity(n, n);
      }
      point.reference_mean = exact->mean();
      point.reference_cov = exact->cov();
      point.mean_band = kBandMultiplier * (mc_mean + (em_mean - exact->mean()).cwiseAbs());
      point.cov_band = kBandMultiplier * (mc_cov + (em_cov - exact->cov()).cwiseAbs());
      point.within_band = ((point.mean - exact->mean()).cwiseAbs().array() <= point.mean_band.array()).all() &&
                          ((point.cov - exact->cov()).cwiseAbs().array() <= point.cov_band.array()).all();
    } else {
      point.mean_band = kBandMultiplier * mc_mean;
      point.cov_band = kBandMultiplier * mc_cov;
    }
    result.checkpoints.push_back(std::move(point));
  }
  return result;
}

}  // namespace lsicert
