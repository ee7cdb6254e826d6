#pragma once

#include "lsicert/criteria.hpp"
#include "lsicert/gaussian.hpp"
#include "lsicert/model.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace lsicert {

inline constexpr std::size_t kDefaultComponentCap = 100'000;

/// Finite Gaussian mixture; the exact law of a Gibbs sampler started from a
/// Gaussian.
class GaussianMixture {
 public:
  GaussianMixture(std::vector<double> weights, std::vector<GaussianDist> components,
                  std::size_t cap = kDefaultComponentCap);
  explicit GaussianMixture(GaussianDist single, std::size_t cap = kDefaultComponentCap);

  Index dim() const { return components_.front().dim(); }
  std::size_t size() const { return components_.size(); }
  std::size_t cap() const { return cap_; }
  const std::vector<double>& weights() const { return weights_; }
  const std::vector<GaussianDist>& components() const { return components_; }

  double log_density(const Vector& x) const;

  /// Merges components whose means and covariances agree within `tol`
  /// (relative, max norm). The represented law is unchanged.
  GaussianMixture compacted(double tol = 1e-12) const;

 private:
  std::vector<double> weights_;
  std::vector<GaussianDist> components_;
  std::size_t cap_;
};

/// p Gamma_k for a single Gaussian: keep p's law off block k and redraw block
/// k from the model's conditional.
GaussianDist apply_gibbs_block(const GaussianDist& p, const GibbsModel& model, std::size_t k);
GaussianMixture apply_gibbs_block(const GaussianMixture& p, const GibbsModel& model, std::size_t k);

/// p Gamma with Gamma = sum_k (rho_k / R) Gamma_k. Throws CapacityError when
/// the result would exceed p.cap().
GaussianMixture apply_weighted_gibbs(const GaussianMixture& p, const GibbsModel& model, std::span<const double> rho);

struct MonteCarloEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
};

inline constexpr std::size_t kMinMonteCarloSamples = 1000;

/// Monte Carlo estimate of D(p || q) from draws of p; both log densities are
/// exact. Deterministic given the seed.
MonteCarloEstimate kl_mixture_mc(const GaussianMixture& p, const GaussianDist& q, std::size_t nsamples,
                                 std::uint64_t seed);

struct InequalityCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds = false;
};


/// D(p||q) <= (1/rho) sum_k rho_k E D(p^(k)(.|Ybar) || Q^(k)(.|Ybar)).
InequalityCheck verify_theorem1(const GaussianDist& p, const GibbsModel& model, const CriteriaReport& report);

struct IdentityCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  double gap = 0.0;
};

/// D(p||q) - D(p Gamma_k||q) against the averaged block-k conditional entropy.
IdentityCheck entropy_drop_identity(const GaussianDist& p, const GibbsModel& model, std::size_t k);

struct ContractionOptions {
  int steps = 8;
  std::size_t nsamples = 200'000;
  std::uint64_t seed = 42;
  std::size_t cap = kDefaultComponentCap;
  /// Merge coinciding mixture components between steps.
  bool compact = true;
};

struct ContractionStep {
  int step = 0;
  std::size_t components = 0;
  double kl_estimate = 0.0;
  double std_error = 0.0;
  double bound = 0.0;
  bool exact = false;
  /// estimate - 3 SE > bound
  bool violated = false;
};

/// Tracks the law of the weighted Gibbs sampler exactly and compares the KL
/// to the bound (1 - rho/R)^m D(p0||q) at every step.
std::vector<ContractionStep> verify_contraction(const GaussianDist& p0, const GibbsModel& model,
                                                const CriteriaReport& report, const ContractionOptions& options);

}  // namespace lsicert
