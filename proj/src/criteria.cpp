#include "lsicert/criteria.hpp"

#include "lsicert/errors.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace lsicert {

std::vector<double> block_lsi_constants(const GibbsModel& model) {
  const auto& part = model.partition();
  std::vector<double> rho(part.block_count());
  for (std::size_t k = 0; k < part.block_count(); ++k) {
    rho[k] = linalg::min_eigenvalue(linalg::select(model.precision(), part.block(k), part.block(k)));
  }
  return rho;
}

Matrix build_A_rho(const GibbsModel& model, std::span<const double> rho_k, double rho, const Probe* probe) {
  const auto& part = model.partition();
  linalg::require_same_dim(static_cast<Index>(rho_k.size()), static_cast<Index>(part.block_count()),
                           "build_A_rho: rho_k");
  const double rho_min = *std::min_element(rho_k.begin(), rho_k.end());
  if (!(rho >= 0.0) || !(rho < rho_min)) {
    throw std::invalid_argument("build_A_rho: rho must lie in [0, min rho_k) = [0, " + std::to_string(rho_min) + ")");
  }
  if (!model.is_gaussian() && probe == nullptr) {
    throw std::invalid_argument("build_A_rho: a probe (x, xi) is required for non-Gaussian models");
  }
  if (probe != nullptr) {
    linalg::require_same_dim(probe->x.size(), model.dim(), "build_A_rho: probe x");
    linalg::require_same_dim(probe->xi.size(), model.dim(), "build_A_rho: probe xi");
  }

  const Index n = model.dim();
  Vector scale(n);
  for (Index i = 0; i < n; ++i) scale(i) = 1.0 / std::sqrt(rho_k[part.block_of(i)] - rho);

  Matrix a = Matrix::Zero(n, n);
  for (std::size_t l = 0; l < part.block_count(); ++l) {
    // Column block l reads the Hessian at (xbar^(l), xi^(l)).
    Matrix h;
    if (model.is_gaussian()) {
      h = model.precision();
    } else {
      Vector y = probe->x;
      for (Index j : part.block(l)) y(j) = probe->xi(j);
      h = hessian(model, y);
    }
    for (Index j : part.block(l)) {
      for (Index i = 0; i < n; ++i) {
        if (part.block_of(i) != l) a(i, j) = h(i, j) * scale(i) * scale(j);
      }
    }
  }
  return a;
}

Matrix build_A_rho(const GibbsModel& model, double rho, const Probe* probe) {
  const auto rho_k = block_lsi_constants(model);
  return build_A_rho(model, rho_k, rho, probe);
}

double op_norm(const Matrix& m) { return linalg::spectral_norm(m); }

double sup_norm_A(const GibbsModel& model, std::span<const double> rho_k, double rho, std::span<const Probe> probes) {
  if (model.is_gaussian()) return op_norm(build_A_rho(model, rho_k, rho));
  std::vector<Probe> fallback;
  if (probes.empty()) {
    fallback = default_probes(model);
    probes = fallback;
  }
  double sup = 0.0;
  for (const auto& probe : probes) sup = std::max(sup, op_norm(build_A_rho(model, rho_k, rho, &probe)));
  return sup;
}

namespace {

struct BisectionOutcome {
  double rho = 0.0;
  bool hit_infeasible = false;
  int iterations = 0;
};

/// Largest feasible point of a monotone predicate on [0, hi), assuming
/// feasible(0). The returned point is always feasible.
template <typename Feasible>
BisectionOutcome bisect(double hi, const CriteriaOptions& options, Feasible feasible) {
  BisectionOutcome out;
  double lo = 0.0;
  while (hi - lo > options.tol && out.iterations < options.max_iterations) {
    const double mid = 0.5 * (lo + hi);
    if (feasible(mid)) {
      lo = mid;
    } else {
      hi = mid;
      out.hit_infeasible = true;
    }
    ++out.iterations;
  }
  out.rho = lo;
  return out;
}

std::span<const Probe> probes_for(const GibbsModel& model, const CriteriaOptions& options,
                                  std::vector<Probe>& storage) {
  if (model.is_gaussian() || !options.probes.empty()) return options.probes;
  storage = default_probes(model);
  return storage;
}

Matrix kappa_matrix(const GibbsModel& model, std::span<const Probe> probes) {
  const auto& part = model.partition();
  const std::size_t n = part.block_count();
  Matrix kappa = Matrix::Zero(static_cast<Index>(n), static_cast<Index>(n));
  auto accumulate = [&](const Matrix& h) {
    for (std::size_t k = 0; k < n; ++k) {
      for (std::size_t l = 0; l < n; ++l) {
        if (k == l) continue;
        const double v = linalg::spectral_norm(linalg::select(h, part.block(k), part.block(l)));
        kappa(static_cast<Index>(k), static_cast<Index>(l)) =
            std::max(kappa(static_cast<Index>(k), static_cast<Index>(l)), v);
      }
    }
  };
  if (model.is_gaussian()) {
    accumulate(model.precision());
  } else {
    for (const auto& probe : probes) {
      accumulate(hessian(model, probe.x));
      accumulate(hessian(model, probe.xi));
    }
  }
  return kappa;
}

}  // namespace

MartonSolution solve_rho_marton(const GibbsModel& model, const CriteriaOptions& options) {
  const auto rho_k = block_lsi_constants(model);
  const double rho_min = *std::min_element(rho_k.begin(), rho_k.end());
  if (!(rho_min > 0.0)) throw CertificateError("no certificate: some block constant rho_k is not positive");

  std::vector<Probe> storage;
  const auto probes = probes_for(model, options, storage);
  const double norm0 = sup_norm_A(model, rho_k, 0.0, probes);
  if (!(norm0 < 1.0)) {
    throw CertificateError("no certificate: sup ||A|| = " + std::to_string(norm0) + " >= 1");
  }
  if (norm0 == 0.0) return MartonSolution{rho_min, true, 0};

  const auto out = bisect(rho_min, options, [&](double rho) { return sup_norm_A(model, rho_k, rho, probes) <= 1.0; });
  if (!out.hit_infeasible) return MartonSolution{rho_min, true, out.iterations};
  return MartonSolution{out.rho, false, out.iterations};
}

Matrix perron_matrix(const Matrix& kappa, std::span<const double> rho_k, double rho) {
  Vector scale(kappa.rows());
  for (Index k = 0; k < kappa.rows(); ++k) scale(k) = 1.0 / std::sqrt(rho_k[static_cast<std::size_t>(k)] - rho);
  return scale.asDiagonal() * kappa * scale.asDiagonal();
}

OttoReznikoffResult otto_reznikoff(const GibbsModel& model, const CriteriaOptions& options) {
  const auto rho_k = block_lsi_constants(model);
  const double rho_min = *std::min_element(rho_k.begin(), rho_k.end());
  std::vector<Probe> storage;
  OttoReznikoffResult result;
  result.kappa = kappa_matrix(model, probes_for(model, options, storage));
  if (!(rho_min > 0.0)) return result;

  const Index n = result.kappa.rows();
  auto psd_feasible = [&](double rho) {
    Vector gaps(n);
    for (Index k = 0; k < n; ++k) gaps(k) = rho_k[static_cast<std::size_t>(k)] - rho;
    return linalg::min_eigenvalue(Matrix(gaps.asDiagonal()) - result.kappa) >= 0.0;
  };
  auto perron_feasible = [&](double rho) {
    return linalg::max_eigenvalue(perron_matrix(result.kappa, rho_k, rho)) <= 1.0;
  };

  if (psd_feasible(0.0)) {
    if (psd_feasible(rho_min)) {
      result.rho = rho_min;
    } else {
      result.rho = bisect(rho_min, options, psd_feasible).rho;
    }
  }
  if (perron_feasible(0.0)) {
    const auto out = bisect(rho_min, options, perron_feasible);
    result.perron_rho = out.hit_infeasible ? out.rho : rho_min;
  }

  const bool agree = result.rho.has_value() == result.perron_rho.has_value() &&
                     (!result.rho || std::abs(*result.rho - *result.perron_rho) <= 1e-8 * std::max(1.0, *result.rho));
  if (!agree) throw std::logic_error("otto_reznikoff: PSD and Perron forms disagree");
  return result;
}

CriteriaReport evaluate_criteria(const GibbsModel& model, const CriteriaOptions& options) {
  std::vector<Probe> storage;
  CriteriaOptions opts = options;
  opts.probes = probes_for(model, options, storage);

  const auto assumptions = verify_assumptions(model, opts.probes);
  CriteriaReport report;
  report.rho_k = assumptions.rho_k;
  if (assumptions.sampled) report.flags.emplace_back("sampled_bound_not_certified");

  if (!assumptions.assumption1_ok) {
    report.flags.emplace_back("assumption1_failed");
    report.norm_A0 = std::numeric_limits<double>::quiet_NaN();
    report.delta = std::numeric_limits<double>::quiet_NaN();
    return report;
  }
  report.norm_A0 = *assumptions.norm_A0;
  report.delta = 1.0 - report.norm_A0;
  if (model.is_gaussian()) report.lambda_max_A0 = linalg::max_eigenvalue(build_A_rho(model, report.rho_k, 0.0));

  if (assumptions.assumption3_ok) {
    const auto marton = solve_rho_marton(model, opts);
    report.rho_marton = marton.rho;
    if (marton.supremum) report.flags.emplace_back("supremum_not_attained");
  } else {
    report.flags.emplace_back("assumption3_failed");
  }

  const auto orz = otto_reznikoff(model, opts);
  report.rho_or = orz.rho;
  if (!orz.rho) report.flags.emplace_back("no_otto_reznikoff_certificate");

  report.certified = report.rho_marton.has_value() && !assumptions.sampled;
  return report;
}

ToeplitzSpectrum toeplitz_spectrum_report(Index m, double diag, const BandSpec& band) {
  if (m < 4) throw std::invalid_argument("toeplitz_spectrum_report: m must be >= 4");
  ToeplitzSpectrum s;
  s.m = m;
  s.diag = diag;

  BandSpec abs_band;
  for (const auto& [offset, value] : band) abs_band[offset] = std::abs(value);

  auto symbol_extrema = [](const BandSpec& b, double& lo, double& hi, double& sup_abs) {
    lo = std::numeric_limits<double>::infinity();
    hi = -lo;
    for (std::size_t g = 0; g < kSymbolGridPoints; ++g) {
      const double theta = std::numbers::pi * static_cast<double>(g) / static_cast<double>(kSymbolGridPoints - 1);
      double f = 0.0;
      for (const auto& [offset, value] : b) f += 2.0 * value * std::cos(offset * theta);
      lo = std::min(lo, f);
      hi = std::max(hi, f);
    }
    sup_abs = std::max(std::abs(lo), std::abs(hi));
  };
  symbol_extrema(band, s.min_symbol, s.max_symbol, s.sup_abs_symbol);
  symbol_extrema(abs_band, s.abs_min_symbol, s.abs_max_symbol, s.abs_sup_abs_symbol);

  auto section = [m](const BandSpec& b, double& lmin, double& lmax, double& svd) {
    const Matrix t = toeplitz_matrix(m, 0.0, b);
    Eigen::SelfAdjointEigenSolver<Matrix> es(t, Eigen::EigenvaluesOnly);
    lmin = es.eigenvalues()(0);
    lmax = es.eigenvalues()(m - 1);
    svd = linalg::spectral_norm(t);
  };
  section(band, s.lambda_min_Bm, s.lambda_max_Bm, s.svd_norm_Bm);
  section(abs_band, s.abs_lambda_min_Bm, s.abs_lambda_max_Bm, s.abs_svd_norm_Bm);
  s.lambda_min_model = diag + s.lambda_min_Bm;
  return s;
}

}  // namespace lsicert
