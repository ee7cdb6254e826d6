#pragma once

#include "lsicert/linalg.hpp"
#include "lsicert/partition.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <vector>

namespace lsicert {

/// Block-structured Gibbs measure q = exp(-V) on R^N with potential
///
///   V(x) = 1/2 (x - m)^T K (x - m) + sum_i lambda_i x_i^4.
///
/// K is symmetrized on construction. When every lambda_i is zero the model is
/// Gaussian and K must be positive definite.
class GibbsModel {
 public:
  GibbsModel(BlockPartition partition, Matrix precision, Vector mean, Vector quartic);
  GibbsModel(BlockPartition partition, Matrix precision, Vector mean);

  const BlockPartition& partition() const { return partition_; }
  const Matrix& precision() const { return precision_; }
  const Vector& mean() const { return mean_; }
  const Vector& quartic() const { return quartic_; }
  Index dim() const { return partition_.dim(); }
  std::size_t block_count() const { return partition_.block_count(); }

  bool is_gaussian() const { return gaussian_; }

  double potential(const Vector& x) const;
  Vector gradient(const Vector& x) const;

 private:
  BlockPartition partition_;
  Matrix precision_;
  Vector mean_;
  Vector quartic_;
  bool gaussian_ = true;
};

/// Hessian of V at x: K + diag(12 lambda_i x_i^2).
Matrix hessian(const GibbsModel& model, const Vector& x);

/// Off-diagonal band of a symmetric Toeplitz matrix, offset -> value.
using BandSpec = std::map<int, double>;

/// diag * I + B_m where B_m is the m x m finite section of the symmetric
/// banded Toeplitz matrix with the given band.
Matrix toeplitz_matrix(Index m, double diag, const BandSpec& band);

GibbsModel parse_model(const nlohmann::json& doc);
GibbsModel load_model(const std::filesystem::path& path);
nlohmann::json to_json(const GibbsModel& model);

/// Evaluation points (x, xi) for the x-dependent suprema and infima.
struct Probe {
  Vector x;
  Vector xi;
};

/// Latin-hypercube sample of `count` probes over the box mean +/- half_width
/// in all 2N coordinates of (x, xi).
std::vector<Probe> latin_hypercube_probes(const GibbsModel& model, std::size_t count, std::uint64_t seed,
                                          double half_width = 3.0);

/// Probes used when the caller supplies none for a non-Gaussian model.
std::vector<Probe> default_probes(const GibbsModel& model);

struct AssumptionReport {
  std::vector<double> rho_k;
  std::vector<double> block_hessian_lower_bounds;
  bool assumption1_ok = false;
  bool assumption2_ok = false;
  bool assumption3_ok = false;
  /// 1 - sup ||A(x, xi)||, present only when positive.
  std::optional<double> delta;
  /// sup ||A(x, xi)||; absent when Assumption 1 fails.
  std::optional<double> norm_A0;
  /// True when suprema were taken over probes ("sampled bound, not certified").
  bool sampled = false;
};

AssumptionReport verify_assumptions(const GibbsModel& model, std::span<const Probe> probes = {});

}  // namespace lsicert
