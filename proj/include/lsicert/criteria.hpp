#pragma once

#include "lsicert/linalg.hpp"
#include "lsicert/model.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace lsicert {

inline constexpr double kDefaultBisectionTol = 1e-10;
inline constexpr int kMaxBisectionIterations = 64;

/// Absolute slack for the closed-form inequality checks.
inline constexpr double kInequalitySlack = 1e-9;

/// Per-block Bakry-Emery constants rho_k = lambda_min(K restricted to I_k).
/// For quartic models these lower-bound the constant of every conditional
/// because the quartic Hessian contribution is PSD. Entries may be <= 0, in
/// which case Assumption 1 fails by this route.
std::vector<double> block_lsi_constants(const GibbsModel& model);

/// Cross-block Hessian rescaled by 1/sqrt((rho_k - rho)(rho_l - rho)).
/// Entry (i, j), i in I_k, j in I_l, k != l, reads the Hessian at the point
/// that agrees with xi on block l and with x elsewhere. Diagonal blocks are
/// zero. `probe` is required for non-Gaussian models.
Matrix build_A_rho(const GibbsModel& model, std::span<const double> rho_k, double rho, const Probe* probe = nullptr);
Matrix build_A_rho(const GibbsModel& model, double rho, const Probe* probe = nullptr);

/// Largest singular value.
double op_norm(const Matrix& m);

/// sup over probes of ||A^rho(x, xi)|| (exact for Gaussian models).
double sup_norm_A(const GibbsModel& model, std::span<const double> rho_k, double rho, std::span<const Probe> probes);

struct CriteriaOptions {
  double tol = kDefaultBisectionTol;
  int max_iterations = kMaxBisectionIterations;
  /// Used only for non-Gaussian models; defaults to default_probes(model).
  std::span<const Probe> probes;
};

struct MartonSolution {
  double rho = 0.0;
  /// rho equals min_k rho_k, which is a supremum the bisection never attains.
  bool supremum = false;
  int iterations = 0;
};

/// Largest rho in (0, min rho_k) with sup ||A^rho|| <= 1, by bisection.
/// Throws CertificateError when sup ||A|| >= 1 or some rho_k <= 0.
MartonSolution solve_rho_marton(const GibbsModel& model, const CriteriaOptions& options = {});

struct OttoReznikoffResult {
  /// Largest rho with Lambda(rho_k - rho) - kappa PSD; absent when infeasible at 0.
  std::optional<double> rho;
  /// Same bisection run on the Perron form ||K'^rho|| <= 1.
  std::optional<double> perron_rho;
  /// n x n matrix of cross-block norms, zero diagonal.
  Matrix kappa;
};

/// Throws std::logic_error if the PSD and Perron forms disagree.
OttoReznikoffResult otto_reznikoff(const GibbsModel& model, const CriteriaOptions& options = {});

/// The Perron-form matrix K'^rho for a given kappa.
Matrix perron_matrix(const Matrix& kappa, std::span<const double> rho_k, double rho);

struct CriteriaReport {
  std::vector<double> rho_k;
  double delta = 0.0;
  double norm_A0 = 0.0;
  std::optional<double> rho_marton;
  std::optional<double> rho_or;
  /// Largest eigenvalue of A for constant (hence symmetric) A.
  std::optional<double> lambda_max_A0;
  bool certified = false;
  std::vector<std::string> flags;
};

/// Runs the assumption checks, the Marton bisection and the Otto-Reznikoff
/// comparator. Failures are recorded as flags rather than thrown.
CriteriaReport evaluate_criteria(const GibbsModel& model, const CriteriaOptions& options = {});

struct ToeplitzSpectrum {
  Index m = 0;
  double diag = 0.0;
  // Symbol f(theta) = 2 sum_j b_j cos(j theta) on a 10^6-point grid over [0, pi].
  double max_symbol = 0.0;
  double min_symbol = 0.0;
  double sup_abs_symbol = 0.0;
  double lambda_max_Bm = 0.0;
  double lambda_min_Bm = 0.0;
  double svd_norm_Bm = 0.0;
  // Same quantities for abs(B).
  double abs_max_symbol = 0.0;
  double abs_min_symbol = 0.0;
  double abs_sup_abs_symbol = 0.0;
  double abs_lambda_max_Bm = 0.0;
  double abs_lambda_min_Bm = 0.0;
  double abs_svd_norm_Bm = 0.0;
  /// lambda_min(diag * I + B_m); the model is Gaussian-valid only when > 0.
  double lambda_min_model = 0.0;
};

inline constexpr std::size_t kSymbolGridPoints = 1'000'000;

ToeplitzSpectrum toeplitz_spectrum_report(Index m, double diag, const BandSpec& band);

}  // namespace lsicert
