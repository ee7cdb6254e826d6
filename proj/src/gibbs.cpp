#include "lsicert/gibbs.hpp"

#include "lsicert/errors.hpp"
#include "parallel.hpp"
#include "lsicert/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>
#include <string>

namespace lsicert {

namespace {

constexpr double kWeightSumTol = 1e-12;
constexpr std::size_t kSamplesPerChunk = 4096;

void require_gaussian(const GibbsModel& model, const char* what) {
  if (!model.is_gaussian()) {
    throw std::invalid_argument(std::string(what) +
                                ": exact Gibbs updates need a Gaussian model; use langevin_particles for quartic models");
  }
}

/// Block-k conditional of q: X_b | X_c = y  ~  N(mean_b + gain (y - mean_c), cov).
struct BlockKernel {
  IndexList block;
  IndexList rest;
  Vector mean_b;
  Vector mean_c;
  Matrix gain;
  Matrix cov;

  BlockKernel(const GibbsModel& model, std::size_t k)
      : block(model.partition().block(k)), rest(model.partition().complement(k)) {
    const Matrix& prec = model.precision();
    const Matrix p_bb = linalg::select(prec, block, block);
    Eigen::LLT<Matrix> llt(p_bb);
    cov = linalg::symmetrized(llt.solve(Matrix::Identity(p_bb.rows(), p_bb.cols())));
    mean_b = linalg::select(model.mean(), block);
    mean_c = linalg::select(model.mean(), rest);
    if (!rest.empty()) gain = -llt.solve(linalg::select(prec, block, rest));
  }

  GaussianDist apply(const GaussianDist& p) const {
    const Index n = p.dim();
    if (rest.empty()) {
      Vector mean(n);
      mean(block) = mean_b;
      Matrix full(n, n);
      full(block, block) = cov;
      return GaussianDist(std::move(mean), std::move(full));
    }
    const Vector pm_c = linalg::select(p.mean(), rest);
    const Matrix pc_cc = linalg::select(p.cov(), rest, rest);
    Vector mean = p.mean();
    mean(block) = mean_b + gain * (pm_c - mean_c);
    Matrix full = p.cov();
    const Matrix cross = gain * pc_cc;
    full(block, rest) = cross;
    full(rest, block) = cross.transpose();
    full(block, block) = linalg::symmetrized(cross * gain.transpose() + cov);
    return GaussianDist(std::move(mean), std::move(full));
  }
};

/// Cached whitening factors for repeated density evaluation.
struct ComponentCache {
  Vector mean;
  Matrix whiten;  // L^{-1}
  double log_norm;
};

std::vector<ComponentCache> cache_components(const std::vector<double>& weights,
                                             const std::vector<GaussianDist>& comps) {
  std::vector<ComponentCache> cache;
  cache.reserve(comps.size());
  for (std::size_t j = 0; j < comps.size(); ++j) {
    const auto& c = comps[j];
    const Index n = c.dim();
    Matrix whiten = c.cov_cholesky().matrixL().solve(Matrix::Identity(n, n));
    const double log_norm =
        std::log(weights[j]) - 0.5 * (static_cast<double>(n) * std::log(2.0 * std::numbers::pi) + c.log_det_cov());
    cache.push_back(ComponentCache{c.mean(), std::move(whiten), log_norm});
  }
  return cache;
}

double mixture_log_density(const std::vector<ComponentCache>& cache, const Vector& x, Vector& scratch,
                           std::vector<double>& terms) {
  terms.resize(cache.size());
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < cache.size(); ++j) {
    scratch.noalias() = cache[j].whiten * (x - cache[j].mean);
    terms[j] = cache[j].log_norm - 0.5 * scratch.squaredNorm();
    top = std::max(top, terms[j]);
  }
  double sum = 0.0;
  for (double t : terms) sum += std::exp(t - top);
  return top + std::log(sum);
}

bool nearly_equal(const GaussianDist& a, const GaussianDist& b, double tol) {
  const double mean_scale = 1.0 + std::max(a.mean().cwiseAbs().maxCoeff(), b.mean().cwiseAbs().maxCoeff());
  const double cov_scale = 1.0 + std::max(a.cov().cwiseAbs().maxCoeff(), b.cov().cwiseAbs().maxCoeff());
  return (a.mean() - b.mean()).cwiseAbs().maxCoeff() <= tol * mean_scale &&
         (a.cov() - b.cov()).cwiseAbs().maxCoeff() <= tol * cov_scale;
}

}  // namespace

GaussianMixture::GaussianMixture(std::vector<double> weights, std::vector<GaussianDist> components, std::size_t cap)
    : weights_(std::move(weights)), components_(std::move(components)), cap_(cap) {
  if (components_.empty()) throw std::invalid_argument("mixture: at least one component is required");
  if (weights_.size() != components_.size()) throw std::invalid_argument("mixture: weight/component count mismatch");
  if (components_.size() > cap_) {
    throw CapacityError("mixture: " + std::to_string(components_.size()) + " components exceed the cap of " +
                        std::to_string(cap_));
  }
  for (const auto& c : components_) linalg::require_same_dim(c.dim(), components_.front().dim(), "mixture");
  double total = 0.0;
  for (double w : weights_) {
    if (!(w > 0.0)) throw std::invalid_argument("mixture: weights must be positive");
    total += w;
  }
  if (std::abs(total - 1.0) > kWeightSumTol) throw std::invalid_argument("mixture: weights must sum to 1");
}

GaussianMixture::GaussianMixture(GaussianDist single, std::size_t cap)
    : GaussianMixture(std::vector<double>{1.0}, std::vector<GaussianDist>{std::move(single)}, cap) {}

double GaussianMixture::log_density(const Vector& x) const {
  linalg::require_same_dim(x.size(), dim(), "mixture log_density");
  const auto cache = cache_components(weights_, components_);
  Vector scratch(dim());
  std::vector<double> terms;
  return mixture_log_density(cache, x, scratch, terms);
}

GaussianMixture GaussianMixture::compacted(double tol) const {
  std::vector<double> weights;
  std::vector<GaussianDist> comps;
  for (std::size_t j = 0; j < components_.size(); ++j) {
    auto it = std::find_if(comps.begin(), comps.end(),
                           [&](const GaussianDist& c) { return nearly_equal(c, components_[j], tol); });
    if (it == comps.end()) {
      comps.push_back(components_[j]);
      weights.push_back(weights_[j]);
    } else {
      weights[static_cast<std::size_t>(it - comps.begin())] += weights_[j];
    }
  }
  return GaussianMixture(std::move(weights), std::move(comps), cap_);
}

GaussianDist apply_gibbs_block(const GaussianDist& p, const GibbsModel& model, std::size_t k) {
  require_gaussian(model, "apply_gibbs_block");
  linalg::require_same_dim(p.dim(), model.dim(), "apply_gibbs_block");
  return BlockKernel(model, k).apply(p);
}

GaussianMixture apply_gibbs_block(const GaussianMixture& p, const GibbsModel& model, std::size_t k) {
  require_gaussian(model, "apply_gibbs_block");
  linalg::require_same_dim(p.dim(), model.dim(), "apply_gibbs_block");
  const BlockKernel kernel(model, k);
  std::vector<GaussianDist> comps;
  comps.reserve(p.size());
  for (const auto& c : p.components()) comps.push_back(kernel.apply(c));
  return GaussianMixture(p.weights(), std::move(comps), p.cap());
}

GaussianMixture apply_weighted_gibbs(const GaussianMixture& p, const GibbsModel& model, std::span<const double> rho) {
  require_gaussian(model, "apply_weighted_gibbs");
  linalg::require_same_dim(p.dim(), model.dim(), "apply_weighted_gibbs");
  const std::size_t n = model.block_count();
  linalg::require_same_dim(static_cast<Index>(rho.size()), static_cast<Index>(n), "apply_weighted_gibbs: weights");
  for (double r : rho) {
    if (!(r > 0.0)) throw std::invalid_argument("apply_weighted_gibbs: block weights must be positive");
  }
  if (p.size() > p.cap() / n) {
    throw CapacityError("apply_weighted_gibbs: " + std::to_string(p.size() * n) + " components exceed the cap of " +
                        std::to_string(p.cap()) + "; reduce steps or estimate by Monte Carlo");
  }
  const double total = std::accumulate(rho.begin(), rho.end(), 0.0);
  std::vector<BlockKernel> kernels;
  kernels.reserve(n);
  for (std::size_t k = 0; k < n; ++k) kernels.emplace_back(model, k);

  std::vector<double> weights;
  std::vector<GaussianDist> comps;
  weights.reserve(p.size() * n);
  comps.reserve(p.size() * n);
  for (std::size_t j = 0; j < p.size(); ++j) {
    for (std::size_t k = 0; k < n; ++k) {
      weights.push_back(p.weights()[j] * rho[k] / total);
      comps.push_back(kernels[k].apply(p.components()[j]));
    }
  }
  return GaussianMixture(std::move(weights), std::move(comps), p.cap());
}

MonteCarloEstimate kl_mixture_mc(const GaussianMixture& p, const GaussianDist& q, std::size_t nsamples,
                                 std::uint64_t seed) {
  linalg::require_same_dim(p.dim(), q.dim(), "kl_mixture_mc");
  if (nsamples < kMinMonteCarloSamples) {
    throw std::invalid_argument("kl_mixture_mc: at least " + std::to_string(kMinMonteCarloSamples) +
                                " samples are required");
  }
  const auto p_cache = cache_components(p.weights(), p.components());
  const auto q_cache = cache_components({1.0}, {q});
  std::vector<Matrix> factors;
  factors.reserve(p.size());
  for (const auto& c : p.components()) factors.push_back(c.cov_cholesky().matrixL());

  const SeedTree root = SeedTree(seed).child("kl-mixture-mc");
  const std::size_t chunks = (nsamples + kSamplesPerChunk - 1) / kSamplesPerChunk;
  std::vector<double> sums(chunks, 0.0);
  std::vector<double> sq_sums(chunks, 0.0);

  detail::parallel_for_chunks(chunks, [&](std::size_t chunk) {
    auto rng = root.child(chunk).engine();
    std::discrete_distribution<std::size_t> pick(p.weights().begin(), p.weights().end());
    std::normal_distribution<double> normal;
    const Index n = p.dim();
    Vector z(n), x(n), scratch(n);
    std::vector<double> terms;
    const std::size_t begin = chunk * kSamplesPerChunk;
    const std::size_t end = std::min(nsamples, begin + kSamplesPerChunk);
    double s = 0.0, s2 = 0.0;
    for (std::size_t i = begin; i < end; ++i) {
      const std::size_t j = pick(rng);
      for (Index d = 0; d < n; ++d) z(d) = normal(rng);
      x.noalias() = p.components()[j].mean() + factors[j] * z;
      const double v =
          mixture_log_density(p_cache, x, scratch, terms) - mixture_log_density(q_cache, x, scratch, terms);
      s += v;
      s2 += v * v;
    }
    sums[chunk] = s;
    sq_sums[chunk] = s2;
  });

  double s = 0.0, s2 = 0.0;
  for (std::size_t c = 0; c < chunks; ++c) {
    s += sums[c];
    s2 += sq_sums[c];
  }
  const double count = static_cast<double>(nsamples);
  const double mean = s / count;
  const double var = std::max(0.0, (s2 - count * mean * mean) / (count - 1.0));
  return MonteCarloEstimate{mean, std::sqrt(var / count)};
}

InequalityCheck verify_theorem1(const GaussianDist& p, const GibbsModel& model, const CriteriaReport& report) {
  require_gaussian(model, "verify_theorem1");
  if (!report.rho_marton) throw CertificateError("verify_theorem1: report carries no certified rho");
  const GaussianDist q = GaussianDist::stationary(model);
  InequalityCheck check;
  check.lhs = kl(p, q);
  double weighted = 0.0;
  for (std::size_t k = 0; k < model.block_count(); ++k) {
    weighted += report.rho_k[k] * avg_conditional_kl(p, q, model.partition(), k);
  }
  check.rhs = weighted / *report.rho_marton;
  check.holds = check.lhs <= check.rhs + kInequalitySlack;
  return check;
}

IdentityCheck entropy_drop_identity(const GaussianDist& p, const GibbsModel& model, std::size_t k) {
  require_gaussian(model, "entropy_drop_identity");
  const GaussianDist q = GaussianDist::stationary(model);
  IdentityCheck check;
  check.lhs = kl(p, q) - kl(apply_gibbs_block(p, model, k), q);
  check.rhs = avg_conditional_kl(p, q, model.partition(), k);
  check.gap = check.lhs - check.rhs;
  return check;
}

std::vector<ContractionStep> verify_contraction(const GaussianDist& p0, const GibbsModel& model,
                                                const CriteriaReport& report, const ContractionOptions& options) {
  require_gaussian(model, "verify_contraction");
  if (!report.rho_marton) throw CertificateError("verify_contraction: report carries no certified rho");
  const GaussianDist q = GaussianDist::stationary(model);
  const double total = std::accumulate(report.rho_k.begin(), report.rho_k.end(), 0.0);
  const double factor = 1.0 - *report.rho_marton / total;
  const double d0 = kl(p0, q);
  const SeedTree root = SeedTree(options.seed).child("contraction");

  std::vector<ContractionStep> table;
  GaussianMixture law(p0, options.cap);
  for (int m = 0; m <= options.steps; ++m) {
    if (m > 0) {
      law = apply_weighted_gibbs(law, model, report.rho_k);
      if (options.compact) law = law.compacted();
    }
    ContractionStep row;
    row.step = m;
    row.components = law.size();
    row.bound = std::pow(factor, m) * d0;
    if (law.size() == 1) {
      row.exact = true;
      row.kl_estimate = kl(law.components().front(), q);
      row.violated = row.kl_estimate > row.bound + kInequalitySlack * (1.0 + row.bound);
    } else {
      const auto est = kl_mixture_mc(law, q, options.nsamples, root.child(static_cast<std::uint64_t>(m)).seed());
      row.kl_estimate = est.estimate;
      row.std_error = est.std_error;
      row.violated = est.estimate - 3.0 * est.std_error > row.bound;
    }
    table.push_back(row);
  }
  return table;
}

}  // namespace lsicert
