// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
// failure. Every campaign uses a fixed seed.

#include "lsicert/criteria.hpp"
#include "lsicert/fokker_planck.hpp"
#include "lsicert/gaussian.hpp"
#include "lsicert/gibbs.hpp"
#include "lsicert/model.hpp"
#include "lsicert/oracles.hpp"
#include "support/generators.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

using namespace lsicert;
using namespace lsicert::testing;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

std::string format(const char* fmt, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, fmt, args...);
  return buf;
}

const Matrix kModel2dPrecision{{1.0, -0.5}, {-0.5, 1.0}};

GibbsModel model_2d() { return GibbsModel(BlockPartition::singletons(2), kModel2dPrecision, Vector::Zero(2)); }

Density density_of(const GaussianDist& g) {
  return [g](std::span<const double> x) {
    const Vector v = Eigen::Map<const Vector>(x.data(), static_cast<Index>(x.size()));
    return std::exp(g.log_density(v));
  };
}

std::vector<Interval> box_for(const GaussianDist& p, const GaussianDist& q) {
  std::vector<Interval> box;
  for (Index d = 0; d < p.dim(); ++d) {
    const double sd = std::sqrt(std::max(p.cov()(d, d), q.cov()(d, d)));
    const double c = 0.5 * (p.mean()(d) + q.mean()(d));
    const double half = 12.0 * sd + std::abs(p.mean()(d) - q.mean()(d));
    box.push_back({c - half, c + half});
  }
  return box;
}

Outcome toeplitz_example() {
  const auto b = toeplitz_spectrum_report(512, 3.0, {{1, 1.0}, {2, -1.0}});
  const auto abs_b = toeplitz_spectrum_report(512, 3.0, {{1, 1.0}, {2, 1.0}});
  Outcome o;
  o.pass = std::abs(b.max_symbol - 2.25) <= 1e-6 && std::abs(abs_b.max_symbol - 4.0) <= 1e-6 &&
           std::abs(b.lambda_max_Bm - 2.25) <= 0.02;
  o.detail = format(
      "max_symbol(B)=%.9f max_symbol(abs B)=%.9f lambda_max(B_512)=%.6f; sup|symbol(B)|=%.9f svd_norm(B_512)=%.6f "
      "(the spectral norm of B is 4, 9/4 is its largest eigenvalue)",
      b.max_symbol, abs_b.max_symbol, b.lambda_max_Bm, b.sup_abs_symbol, b.svd_norm_Bm);
  return o;
}

Outcome gaussian_tightness() {
  Outcome o;
  double worst = 0.0;
  auto check = [&](const GibbsModel& model) {
    const auto report = evaluate_criteria(model);
    if (!report.rho_marton) {
      o.pass = false;
      return;
    }
    const double gap = std::abs(*report.rho_marton - linalg::min_eigenvalue(model.precision()));
    worst = std::max(worst, gap);
    o.pass = o.pass && gap <= 1e-8;
  };
  check(model_2d());
  Rng rng(1001);
  for (int i = 0; i < 100; ++i) check(random_attractive_chain(rng));
  o.detail = format("model_2d + 100 attractive chains, max |rho_marton - lambda_min(K)| = %.3e", worst);
  return o;
}

Outcome criterion_dominance() {
  Outcome o;
  Rng rng(1003);
  int with_or = 0;
  double worst = -1e300;
  for (int i = 0; i < 500; ++i) {
    const auto [model, report] = random_certified_model(rng);
    if (!report.rho_or) continue;
    ++with_or;
    worst = std::max(worst, *report.rho_or - *report.rho_marton);
    o.pass = o.pass && *report.rho_or <= *report.rho_marton + 1e-8;
  }
  o.detail = format("500 certified models (%d with an OR certificate), max rho_or - rho_marton = %.3e", with_or, worst);
  return o;
}

Outcome soundness() {
  Outcome o;
  Rng rng(1005);
  int certified = 0;
  double worst = -1e300;
  for (int i = 0; i < 1000; ++i) {
    const auto model = random_gaussian_model(rng);
    const auto report = evaluate_criteria(model);
    if (!report.rho_marton) continue;
    ++certified;
    const double excess = *report.rho_marton - linalg::min_eigenvalue(model.precision());
    worst = std::max(worst, excess);
    o.pass = o.pass && excess <= 1e-8;
  }
  o.detail = format("1000 random models (%d certified), max rho_marton - lambda_min(K) = %.3e", certified, worst);
  return o;
}

Outcome theorem1() {
  Outcome o;
  Rng rng(1007);
  int violations = 0;
  double min_slack = 1e300;
  for (int i = 0; i < 200; ++i) {
    const auto [model, report] = random_certified_model(rng);
    const auto check = verify_theorem1(random_gaussian(model.mean(), rng), model, report);
    if (!check.holds) ++violations;
    min_slack = std::min(min_slack, check.rhs - check.lhs);
  }
  o.pass = violations == 0;
  o.detail = format("200 pairs, %d violations, min rhs - lhs = %.3e", violations, min_slack);
  return o;
}

Outcome entropy_drop() {
  Outcome o;
  Rng rng(1009);
  double worst = 0.0;
  for (int i = 0; i < 200; ++i) {
    const auto model = random_gaussian_model(rng);
    const auto p = random_gaussian(model.mean(), rng);
    const auto k = static_cast<std::size_t>(uniform_int(rng, 0, static_cast<Index>(model.block_count()) - 1));
    const auto check = entropy_drop_identity(p, model, k);
    const double rel = std::abs(check.gap) / (1.0 + std::abs(check.lhs));
    worst = std::max(worst, rel);
    o.pass = o.pass && rel <= 1e-9;
  }
  o.detail = format("200 triples, max |lhs - rhs| / (1 + lhs) = %.3e", worst);
  return o;
}

Outcome gibbs_contraction() {
  const auto model = model_2d();
  const auto report = evaluate_criteria(model);
  Outcome o;
  if (!report.rho_marton) return {false, "model_2d has no certificate"};
  const double total = report.rho_k[0] + report.rho_k[1];
  const double factor = 1.0 - *report.rho_marton / total;
  const auto p0 = GaussianDist::from_precision(Vector{{2.0, 0.0}}, model.precision());
  ContractionOptions opts;
  opts.steps = 8;
  opts.nsamples = 200'000;
  opts.seed = 42;
  const auto table = verify_contraction(p0, model, report, opts);
  o.pass = std::abs(factor - 0.75) <= 1e-9 && table.size() == 9;
  std::string steps;
  for (const auto& row : table) {
    o.pass = o.pass && row.kl_estimate - 3.0 * row.std_error <= row.bound;
    steps += format(" m=%d:%.4f<=%.4f", row.step, row.kl_estimate, row.bound);
  }
  o.detail = format("rho=%.10f R=%.1f factor=%.10f;", *report.rho_marton, total, factor) + steps;
  return o;
}

Outcome dissipation() {
  Outcome o;
  Rng rng(1011);
  const auto grid = uniform_grid(0.0, 5.0, 1e-3);
  double worst_residual = 0.0, worst_integral = 0.0;
  for (int i = 0; i < 20; ++i) {
    const Index n = uniform_int(rng, 1, 5);
    BlockPartition part = random_partition(n, rng);
    GibbsModel model(std::move(part), random_spd(n, rng, 0.3, 1.5), random_vector(n, rng, 1.0));
    // Covariance of p0 is q's covariance distorted by a factor in [0.5, 2]
    // along random axes. Far from that range the O(h^2) truncation of the
    // centred difference alone exceeds the tolerance.
    const Matrix half = linalg::psd_sqrt(GaussianDist::stationary(model).cov());
    const GaussianDist p0(model.mean() + random_vector(n, rng, 1.0),
                          linalg::symmetrized(half * random_spd(n, rng, 0.5, 2.0) * half));
    const auto r = dissipation_check(p0, model, grid);
    worst_residual = std::max(worst_residual, r.max_residual / r.residual_tolerance);
    const double rel = std::abs(r.fisher_integral - r.kl_drop) / r.kl_drop;
    worst_integral = std::max(worst_integral, rel);
    o.pass = o.pass && !r.coarse_grid && r.max_residual <= r.residual_tolerance && rel <= 1e-4;
  }
  o.detail = format("20 instances, max residual / tolerance = %.3f, max integral identity error = %.3e (relative)",
                    worst_residual, worst_integral);
  return o;
}

Outcome transport() {
  Outcome o;
  Rng rng(1013);
  int violations = 0;
  for (int i = 0; i < 500; ++i) {
    const auto [model, report] = random_certified_model(rng);
    if (!transport_check(random_gaussian(model.mean(), rng), model, report).holds) ++violations;
  }
  // Bottom-eigenvector shifts on models whose certificate is tight.
  double min_ratio = 1e300;
  auto tight_case = [&](const GibbsModel& model) {
    const auto report = evaluate_criteria(model);
    Eigen::SelfAdjointEigenSolver<Matrix> es(model.precision());
    const Vector shift = 1.5 * es.eigenvectors().col(0);
    const auto check = transport_check(GaussianDist::stationary(model).shifted(shift), model, report);
    if (!check.holds) ++violations;
    min_ratio = std::min(min_ratio, check.w2sq / check.bound);
  };
  tight_case(model_2d());
  for (int i = 0; i < 20; ++i) tight_case(random_attractive_chain(rng));
  o.pass = violations == 0 && min_ratio >= 0.99;
  o.detail = format("500 pairs + 21 eigenvector shifts, %d violations, min W^2/bound on shifts = %.10f", violations,
                    min_ratio);
  return o;
}

Outcome proposition4() {
  Outcome o;
  Rng rng(1017);
  int violations = 0;
  for (int i = 0; i < 500; ++i) {
    const auto [model, report] = random_certified_model(rng);
    const Vector z = model.mean() + random_vector(model.dim(), rng, 2.0);
    const Vector u = model.mean() + random_vector(model.dim(), rng, 2.0);
    const auto check = prop4_check(model, report, z, u);
    if (!check.holds_first || !check.holds_second) ++violations;
  }
  o.pass = violations == 0;
  o.detail = format("500 triples, %d violations", violations);
  return o;
}

Outcome oracle_agreement() {
  Outcome o;
  std::vector<std::pair<GaussianDist, GaussianDist>> set;
  auto n1 = [](double mean, double var) { return GaussianDist(Vector::Constant(1, mean), Matrix::Constant(1, 1, var)); };
  set.emplace_back(n1(1.0, 1.0), n1(0.0, 1.0));
  set.emplace_back(n1(0.0, 2.0), n1(0.0, 1.0));
  set.emplace_back(n1(-0.5, 0.3), n1(1.0, 2.5));
  const auto q2 = GaussianDist::from_precision(Vector::Zero(2), kModel2dPrecision);
  set.emplace_back(q2.shifted(Vector{{2.0, 0.0}}), q2);
  set.emplace_back(GaussianDist(Vector{{1.0, 0.5}}, Matrix{{1.0, 0.3}, {0.3, 0.8}}), q2);
  set.emplace_back(GaussianDist(Vector{{-1.0, 1.0}}, Matrix{{0.6, -0.2}, {-0.2, 1.5}}),
                   GaussianDist(Vector{{0.0, 0.5}}, Matrix{{2.0, 0.5}, {0.5, 1.0}}));

  double worst_kl = 0.0, worst_fisher = 0.0;
  for (const auto& [p, q] : set) {
    const auto box = box_for(p, q);
    const std::size_t pts = p.dim() == 1 ? 8000 : 800;
    worst_kl = std::max(worst_kl, std::abs(quad_kl(density_of(p), density_of(q), box, pts).value - kl(p, q)));
    worst_fisher =
        std::max(worst_fisher, std::abs(quad_fisher(density_of(p), density_of(q), box, pts).value - fisher(p, q)));
  }

  Rng rng(1019);
  double worst_w2 = 0.0;
  const std::vector<std::pair<GaussianDist, GaussianDist>> w2_set{{n1(0.0, 1.0), n1(0.0, 4.0)},
                                                                   {n1(1.0, 0.5), n1(-1.0, 2.0)}};
  for (const auto& [p, q] : w2_set) {
    std::normal_distribution<double> dp(p.mean()(0), std::sqrt(p.cov()(0, 0)));
    std::normal_distribution<double> dq(q.mean()(0), std::sqrt(q.cov()(0, 0)));
    std::vector<double> xs(100'000), ys(100'000);
    for (auto& v : xs) v = dp(rng);
    for (auto& v : ys) v = dq(rng);
    std::sort(xs.begin(), xs.end());
    std::sort(ys.begin(), ys.end());
    worst_w2 = std::max(worst_w2, std::abs(w2_empirical_1d(xs, ys) - w2(p, q)));
  }
  o.pass = worst_kl <= 1e-5 && worst_fisher <= 1e-5 && worst_w2 <= 0.02;
  o.detail = format("%zu pairs, max |KL err| = %.3e, max |Fisher err| = %.3e; W2 quantile vs Bures max err = %.4f",
                    set.size(), worst_kl, worst_fisher, worst_w2);
  return o;
}

struct Criterion {
  const char* name;
  std::function<Outcome()> run;
  std::optional<double> time_limit;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {"toeplitz example", toeplitz_example, 5.0},
      {"gaussian tightness", gaussian_tightness, 10.0},
      {"criterion dominance", criterion_dominance, 30.0},
      {"soundness", soundness, std::nullopt},
      {"theorem 1", theorem1, std::nullopt},
      {"entropy-drop identity", entropy_drop, std::nullopt},
      {"gibbs contraction", gibbs_contraction, 60.0},
      {"entropy dissipation", dissipation, std::nullopt},
      {"transport inequality", transport, std::nullopt},
      {"proposition 4", proposition4, std::nullopt},
      {"oracle agreement", oracle_agreement, std::nullopt},
  };

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto& c = criteria[i];
    const auto start = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = c.run();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::string timing = format("%.2fs", secs);
    if (c.time_limit) {
      timing += format(" (limit %.0fs)", *c.time_limit);
      if (secs > *c.time_limit) outcome.pass = false;
    }
    if (!outcome.pass) ++failures;
    std::printf("%s %2zu %-22s %s [%s]\n", outcome.pass ? "PASS" : "FAIL", i + 1, c.name, outcome.detail.c_str(),
                timing.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
