#include "lsicert/model.hpp"

#include "lsicert/criteria.hpp"
#include "lsicert/errors.hpp"
#include "lsicert/random.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>

namespace lsicert {

namespace {

constexpr double kSymmetryTol = 1e-12;

Matrix checked_precision(Matrix k, Index dim) {
  if (k.rows() != dim || k.cols() != dim) {
    throw ValidationError("precision must be " + std::to_string(dim) + "x" + std::to_string(dim));
  }
  if (!k.allFinite()) throw ValidationError("precision has non-finite entries");
  const double scale = std::max(1.0, k.cwiseAbs().maxCoeff());
  const double asym = (k - k.transpose()).cwiseAbs().maxCoeff();
  if (asym > kSymmetryTol * scale) {
    throw ValidationError("precision is not symmetric (max asymmetry " + std::to_string(asym) + ")");
  }
  return linalg::symmetrized(k);
}

}  // namespace

GibbsModel::GibbsModel(BlockPartition partition, Matrix precision, Vector mean, Vector quartic)
    : partition_(std::move(partition)),
      precision_(checked_precision(std::move(precision), partition_.dim())),
      mean_(std::move(mean)),
      quartic_(std::move(quartic)) {
  const Index n = partition_.dim();
  if (mean_.size() != n) throw ValidationError("mean must have length " + std::to_string(n));
  if (!mean_.allFinite()) throw ValidationError("mean has non-finite entries");
  if (quartic_.size() == 0) quartic_ = Vector::Zero(n);
  if (quartic_.size() != n) throw ValidationError("quartic must have length " + std::to_string(n));
  if (!quartic_.allFinite() || (quartic_.array() < 0.0).any()) {
    throw ValidationError("quartic coefficients must be finite and non-negative");
  }
  gaussian_ = (quartic_.array() == 0.0).all();
  if (gaussian_) {
    const double lmin = linalg::min_eigenvalue(precision_);
    if (!(lmin > 0.0)) {
      throw ValidationError("precision is not positive definite (smallest eigenvalue " + std::to_string(lmin) +
                            ") and there is no quartic term");
    }
  }
}

GibbsModel::GibbsModel(BlockPartition partition, Matrix precision, Vector mean)
    : GibbsModel(std::move(partition), std::move(precision), std::move(mean), Vector()) {}

double GibbsModel::potential(const Vector& x) const {
  const Vector d = x - mean_;
  return 0.5 * d.dot(precision_ * d) + (quartic_.array() * x.array().pow(4)).sum();
}

Vector GibbsModel::gradient(const Vector& x) const {
  return precision_ * (x - mean_) + (4.0 * quartic_.array() * x.array().cube()).matrix();
}

Matrix hessian(const GibbsModel& model, const Vector& x) {
  linalg::require_same_dim(x.size(), model.dim(), "hessian");
  Matrix h = model.precision();
  if (!model.is_gaussian()) {
    h.diagonal().array() += 12.0 * model.quartic().array() * x.array().square();
  }
  return h;
}

Matrix toeplitz_matrix(Index m, double diag, const BandSpec& band) {
  Matrix t = Matrix::Identity(m, m) * diag;
  for (const auto& [offset, value] : band) {
    if (offset < 1) throw ValidationError("toeplitz band offsets must be >= 1");
    for (Index i = 0; i + offset < m; ++i) {
      t(i, i + offset) = value;
      t(i + offset, i) = value;
    }
  }
  return t;
}

namespace {

using nlohmann::json;

Vector parse_vector(const json& j, Index n, const char* name) {
  if (!j.is_array() || static_cast<Index>(j.size()) != n) {
    throw ParseError(std::string(name) + " must be an array of length " + std::to_string(n));
  }
  Vector v(n);
  for (Index i = 0; i < n; ++i) {
    if (!j[static_cast<std::size_t>(i)].is_number()) throw ParseError(std::string(name) + " entries must be numbers");
    v(i) = j[static_cast<std::size_t>(i)].get<double>();
  }
  return v;
}

Matrix parse_matrix(const json& j, Index n, const char* name) {
  if (!j.is_array() || static_cast<Index>(j.size()) != n) {
    throw ParseError(std::string(name) + " must have " + std::to_string(n) + " rows");
  }
  Matrix m(n, n);
  for (Index r = 0; r < n; ++r) m.row(r) = parse_vector(j[static_cast<std::size_t>(r)], n, name).transpose();
  return m;
}

BlockPartition parse_partition(const json& j, Index n) {
  if (j.is_string()) {
    if (j.get<std::string>() == "singletons") return BlockPartition::singletons(n);
    throw ParseError("partition string must be \"singletons\"");
  }
  if (!j.is_array()) throw ParseError("partition must be an array of index arrays");
  std::vector<IndexList> blocks;
  for (const auto& b : j) {
    if (!b.is_array()) throw ParseError("partition blocks must be arrays");
    IndexList block;
    for (const auto& i : b) {
      if (!i.is_number_integer()) throw ParseError("partition indices must be integers");
      block.push_back(i.get<Index>());
    }
    blocks.push_back(std::move(block));
  }
  BlockPartition part(std::move(blocks));
  if (part.dim() != n) {
    throw ValidationError("partition covers " + std::to_string(part.dim()) + " coordinates, dim is " +
                          std::to_string(n));
  }
  return part;
}

Matrix parse_toeplitz(const json& j, Index n) {
  if (!j.is_object()) throw ParseError("toeplitz must be an object");
  if (!j.contains("m") || !j["m"].is_number_integer()) throw ParseError("toeplitz.m must be an integer");
  if (!j.contains("diag") || !j["diag"].is_number()) throw ParseError("toeplitz.diag must be a number");
  const auto m = j["m"].get<Index>();
  if (m != n) throw ParseError("toeplitz.m must equal dim");
  BandSpec band;
  if (j.contains("band")) {
    if (!j["band"].is_object()) throw ParseError("toeplitz.band must be an object");
    for (const auto& [key, value] : j["band"].items()) {
      int offset = 0;
      try {
        std::size_t used = 0;
        offset = std::stoi(key, &used);
        if (used != key.size()) throw std::invalid_argument(key);
      } catch (const std::exception&) {
        throw ParseError("toeplitz.band keys must be integers, got \"" + key + "\"");
      }
      if (!value.is_number()) throw ParseError("toeplitz.band values must be numbers");
      if (offset < 1 || offset >= m) throw ValidationError("toeplitz.band offset out of range: " + key);
      band[offset] = value.get<double>();
    }
  }
  return toeplitz_matrix(m, j["diag"].get<double>(), band);
}

}  // namespace

GibbsModel parse_model(const json& doc) {
  if (!doc.is_object()) throw ParseError("model must be a JSON object");
  if (!doc.contains("dim") || !doc["dim"].is_number_integer()) throw ParseError("dim must be an integer");
  const auto n = doc["dim"].get<Index>();
  if (n < 1) throw ParseError("dim must be >= 1");
  if (!doc.contains("partition")) throw ParseError("partition is required");

  const bool has_precision = doc.contains("precision");
  const bool has_toeplitz = doc.contains("toeplitz");
  if (has_precision == has_toeplitz) throw ParseError("exactly one of precision or toeplitz is required");

  Matrix k = has_precision ? parse_matrix(doc["precision"], n, "precision") : parse_toeplitz(doc["toeplitz"], n);
  Vector mean = doc.contains("mean") ? parse_vector(doc["mean"], n, "mean") : Vector::Zero(n);
  Vector quartic = doc.contains("quartic") ? parse_vector(doc["quartic"], n, "quartic") : Vector::Zero(n);
  return GibbsModel(parse_partition(doc["partition"], n), std::move(k), std::move(mean), std::move(quartic));
}

GibbsModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open model file " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  return parse_model(doc);
}

nlohmann::json to_json(const GibbsModel& model) {
  json doc;
  doc["dim"] = model.dim();
  json blocks = json::array();
  for (const auto& b : model.partition().blocks()) blocks.push_back(b);
  doc["partition"] = blocks;
  doc["mean"] = std::vector<double>(model.mean().begin(), model.mean().end());
  json rows = json::array();
  for (Index r = 0; r < model.dim(); ++r) {
    const Vector row = model.precision().row(r).transpose();
    rows.push_back(std::vector<double>(row.begin(), row.end()));
  }
  doc["precision"] = rows;
  doc["quartic"] = std::vector<double>(model.quartic().begin(), model.quartic().end());
  return doc;
}

std::vector<Probe> latin_hypercube_probes(const GibbsModel& model, std::size_t count, std::uint64_t seed,
                                          double half_width) {
  const Index n = model.dim();
  std::vector<Probe> probes(count, Probe{Vector(n), Vector(n)});
  if (count == 0) return probes;
  auto rng = SeedTree(seed).child("latin-hypercube").engine();
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<std::size_t> strata(count);
  for (Index d = 0; d < 2 * n; ++d) {
    std::iota(strata.begin(), strata.end(), std::size_t{0});
    std::shuffle(strata.begin(), strata.end(), rng);
    const Index coord = d % n;
    const double lo = model.mean()(coord) - half_width;
    for (std::size_t s = 0; s < count; ++s) {
      const double v = lo + 2.0 * half_width * (static_cast<double>(strata[s]) + unit(rng)) / static_cast<double>(count);
      (d < n ? probes[s].x : probes[s].xi)(coord) = v;
    }
  }
  return probes;
}

std::vector<Probe> default_probes(const GibbsModel& model) {
  auto probes = latin_hypercube_probes(model, 64, 0);
  // The quartic Hessian term vanishes at the origin; include it so the
  // sampled infimum of the block Hessians is attained.
  probes.push_back(Probe{Vector::Zero(model.dim()), Vector::Zero(model.dim())});
  return probes;
}

AssumptionReport verify_assumptions(const GibbsModel& model, std::span<const Probe> probes) {
  AssumptionReport report;
  std::vector<Probe> fallback;
  if (!model.is_gaussian() && probes.empty()) {
    fallback = default_probes(model);
    probes = fallback;
  }
  report.sampled = !model.is_gaussian();

  report.rho_k = block_lsi_constants(model);
  report.assumption1_ok = std::all_of(report.rho_k.begin(), report.rho_k.end(), [](double r) { return r > 0.0; });

  const auto& part = model.partition();
  report.block_hessian_lower_bounds.assign(part.block_count(), std::numeric_limits<double>::infinity());
  for (std::size_t k = 0; k < part.block_count(); ++k) {
    double& bound = report.block_hessian_lower_bounds[k];
    if (model.is_gaussian()) {
      bound = linalg::min_eigenvalue(linalg::select(model.precision(), part.block(k), part.block(k)));
      continue;
    }
    for (const auto& probe : probes) {
      for (const Vector* pt : {&probe.x, &probe.xi}) {
        const Matrix h = hessian(model, *pt);
        bound = std::min(bound, linalg::min_eigenvalue(linalg::select(h, part.block(k), part.block(k))));
      }
    }
  }
  report.assumption2_ok = std::all_of(report.block_hessian_lower_bounds.begin(),
                                      report.block_hessian_lower_bounds.end(),
                                      [](double b) { return std::isfinite(b); });

  if (report.assumption1_ok) {
    const double norm = sup_norm_A(model, report.rho_k, 0.0, probes);
    report.norm_A0 = norm;
    if (norm < 1.0) report.delta = 1.0 - norm;
  }
  report.assumption3_ok = report.delta.has_value() && *report.delta > 0.0;
  return report;
}

}  // namespace lsicert
