#include "lsicert/cli.hpp"

#include "lsicert/criteria.hpp"
#include "lsicert/errors.hpp"
#include "lsicert/fokker_planck.hpp"
#include "lsicert/gibbs.hpp"
#include "lsicert/model.hpp"
#include "lsicert/oracles.hpp"
#include "lsicert/random.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <random>
#include <sstream>
#include <string>

namespace lsicert::cli {

namespace {

using nlohmann::json;

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json report_json(const GibbsModel& model, const CriteriaReport& r, double tol, std::size_t probes,
                 std::uint64_t seed) {
  json doc;
  doc["model"] = to_json(model);
  doc["rho_k"] = r.rho_k;
  doc["delta"] = std::isfinite(r.delta) ? json(r.delta) : json(nullptr);
  doc["norm_A0"] = std::isfinite(r.norm_A0) ? json(r.norm_A0) : json(nullptr);
  doc["lambda_max_A0"] = optional_number(r.lambda_max_A0);
  doc["rho_marton"] = optional_number(r.rho_marton);
  doc["rho_or"] = optional_number(r.rho_or);
  doc["flags"] = r.flags;
  doc["certified"] = r.certified;
  doc["tol"] = tol;
  doc["probes"] = model.is_gaussian() ? 0 : probes;
  doc["seed"] = seed;
  return doc;
}

/// Writes to --out when given, otherwise to the command's stream.
class Sink {
 public:
  Sink(const std::string& path, std::ostream& fallback) : fallback_(fallback) {
    if (!path.empty()) {
      file_.open(path);
      if (!file_) throw std::runtime_error("cannot open output file " + path);
    }
  }
  std::ostream& stream() { return file_.is_open() ? static_cast<std::ostream&>(file_) : fallback_; }

 private:
  std::ofstream file_;
  std::ostream& fallback_;
};

struct CsvTable {
  std::vector<std::string> rows;
  bool all_pass = true;

  void add(const std::string& check, const std::string& param, double value, double bound, double tolerance,
           bool pass) {
    rows.push_back(check + "," + param + "," + fmt(value) + "," + fmt(bound) + "," + fmt(tolerance) + "," +
                   (pass ? "pass" : "fail"));
    all_pass = all_pass && pass;
  }
  void info(const std::string& check, const std::string& param, const std::string& value) {
    rows.push_back(check + "," + param + "," + value + ",,,info");
  }
  void write(std::ostream& out) const {
    out << "check,param,value,bound,tolerance,verdict\n";
    for (const auto& r : rows) out << r << '\n';
  }
};

GaussianDist random_gaussian(const GibbsModel& model, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  const Index n = model.dim();
  Vector shift(n);
  for (Index i = 0; i < n; ++i) shift(i) = 1.5 * normal(rng);
  Matrix a(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) a(i, j) = normal(rng);
  }
  Matrix cov = a * a.transpose() / static_cast<double>(n) + 0.2 * Matrix::Identity(n, n);
  return GaussianDist(model.mean() + shift, linalg::symmetrized(cov));
}

GaussianDist load_p0(const std::string& path, const GibbsModel& model, double shift) {
  if (path.empty()) {
    Vector delta = Vector::Zero(model.dim());
    delta(0) = shift;
    return GaussianDist::stationary(model).shifted(delta);
  }
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open p0 file " + path);
  json doc;
  try {
    doc = json::parse(in);
    const auto mean = doc.at("mean").get<std::vector<double>>();
    const auto rows = doc.at("cov").get<std::vector<std::vector<double>>>();
    const Index n = model.dim();
    if (static_cast<Index>(mean.size()) != n || static_cast<Index>(rows.size()) != n) {
      throw ParseError("p0 dimensions do not match the model");
    }
    Matrix cov(n, n);
    for (Index i = 0; i < n; ++i) {
      if (static_cast<Index>(rows[static_cast<std::size_t>(i)].size()) != n) throw ParseError("p0 cov must be square");
      for (Index j = 0; j < n; ++j) cov(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    }
    return GaussianDist(Eigen::Map<const Vector>(mean.data(), n), cov);
  } catch (const json::exception& e) {
    throw ParseError(std::string("p0 file: ") + e.what());
  }
}

struct VerifyOptions {
  std::string model_path;
  std::string check;
  std::uint64_t seed = 42;
  std::size_t samples = 200'000;
  int steps = 8;
  std::size_t cases = 200;
  double shift = 2.0;
  std::string p0_path;
  double horizon = 5.0;
  double dt = 1e-3;
  std::string trace_path;
  std::string out;
  double tol = kDefaultBisectionTol;
};

void verify_theorem1_rows(const VerifyOptions& o, const GibbsModel& model, const CriteriaReport& report,
                          const GaussianDist& p0, CsvTable& table) {
  auto check = [&](const GaussianDist& p, const std::string& param) {
    const auto r = verify_theorem1(p, model, report);
    table.add("theorem1", param, r.lhs, r.rhs, kInequalitySlack, r.holds);
  };
  check(p0, "p0");
  auto rng = SeedTree(o.seed).child("theorem1").engine();
  for (std::size_t i = 0; i < o.cases; ++i) check(random_gaussian(model, rng), "case=" + std::to_string(i));
}

void verify_transport_rows(const VerifyOptions& o, const GibbsModel& model, const CriteriaReport& report,
                           const GaussianDist& p0, CsvTable& table) {
  auto check = [&](const GaussianDist& p, const std::string& param) {
    const auto r = transport_check(p, model, report);
    table.add("transport", param, r.w2sq, r.bound, kInequalitySlack, r.holds);
  };
  check(p0, "p0");
  auto rng = SeedTree(o.seed).child("transport").engine();
  for (std::size_t i = 0; i < o.cases; ++i) check(random_gaussian(model, rng), "case=" + std::to_string(i));
}

void verify_prop4_rows(const VerifyOptions& o, const GibbsModel& model, const CriteriaReport& report,
                       CsvTable& table) {
  auto check = [&](const Vector& z, const Vector& u, const std::string& param) {
    const auto r = prop4_check(model, report, z, u);
    table.add("prop4_first", param, r.lhs_w2_sum, r.mid_kl_sum, kInequalitySlack, r.holds_first);
    table.add("prop4_second", param, r.mid_kl_sum, r.rhs, kInequalitySlack, r.holds_second);
  };
  check(model.mean(), model.mean(), "z=u");
  auto rng = SeedTree(o.seed).child("prop4").engine();
  std::normal_distribution<double> normal(0.0, 2.0);
  for (std::size_t i = 0; i < o.cases; ++i) {
    Vector z(model.dim()), u(model.dim());
    for (Index j = 0; j < model.dim(); ++j) z(j) = model.mean()(j) + normal(rng);
    for (Index j = 0; j < model.dim(); ++j) u(j) = model.mean()(j) + normal(rng);
    check(z, u, "case=" + std::to_string(i));
  }
}

void verify_gibbs_rows(const VerifyOptions& o, const GibbsModel& model, const CriteriaReport& report,
                       const GaussianDist& p0, CsvTable& table) {
  ContractionOptions opts;
  opts.steps = o.steps;
  opts.nsamples = o.samples;
  opts.seed = SeedTree(o.seed).child("gibbs").seed();
  const auto steps = verify_contraction(p0, model, report, opts);
  for (const auto& s : steps) {
    table.add("gibbs", "m=" + std::to_string(s.step), s.kl_estimate, s.bound, 3.0 * s.std_error, !s.violated);
  }
}

void verify_dissipation_rows(const VerifyOptions& o, const GibbsModel& model, const CriteriaReport& report,
                             const GaussianDist& p0, CsvTable& table) {
  const auto grid = uniform_grid(0.0, o.horizon, o.dt);
  const auto result = dissipation_check(p0, model, grid, report.rho_marton);
  table.add("dissipation", "max_residual", result.max_residual, result.residual_tolerance, result.residual_tolerance,
            result.max_residual <= result.residual_tolerance && !result.coarse_grid);
  const double rel_tol = 1e-4 * std::max(result.kl_drop, 1e-300);
  table.add("dissipation", "integral_identity", result.fisher_integral, result.kl_drop, rel_tol,
            std::abs(result.fisher_integral - result.kl_drop) <= std::max(rel_tol, 1e-12));
  if (report.rho_marton) {
    const bool decays = exp_decay_check(p0, model, *report.rho_marton, grid);
    const auto& tr = result.trace;
    table.add("exp_decay", "rho=" + fmt(*report.rho_marton), tr.kl_values.back(), tr.lsi_bound.back(), 1e-9, decays);
    bool lsi_holds = true;
    for (std::size_t i = 0; i < tr.times.size(); ++i) {
      lsi_holds = lsi_holds &&
                  tr.fisher_values[i] + kInequalitySlack >= 2.0 * *report.rho_marton * tr.kl_values[i];
    }
    table.add("lsi_pointwise", "rho=" + fmt(*report.rho_marton), tr.fisher_values.front(),
              2.0 * *report.rho_marton * tr.kl_values.front(), kInequalitySlack, lsi_holds);
  }
  if (!o.trace_path.empty()) {
    std::ofstream trace(o.trace_path);
    if (!trace) throw std::runtime_error("cannot open trace file " + o.trace_path);
    write_trace_csv(trace, result.trace);
  }
}

int cmd_criteria(const std::string& model_path, double tol, std::size_t probe_count, std::uint64_t seed,
                 const std::string& out_path, std::ostream& out, std::ostream& err) {
  std::optional<GibbsModel> model;
  try {
    model.emplace(load_model(model_path));
  } catch (const ParseError& e) {
    err << "invalid model: " << e.what() << '\n';
    return kInvalidModel;
  } catch (const ValidationError& e) {
    err << "invalid model: " << e.what() << '\n';
    return kInvalidModel;
  }
  std::vector<Probe> probes;
  if (!model->is_gaussian()) probes = latin_hypercube_probes(*model, probe_count, seed);
  CriteriaOptions opts;
  opts.tol = tol;
  opts.probes = probes;
  const auto report = evaluate_criteria(*model, opts);
  Sink sink(out_path, out);
  sink.stream() << report_json(*model, report, tol, probe_count, seed).dump(2) << '\n';
  return report.rho_marton ? kPass : kNoCertificate;
}

int cmd_verify(const VerifyOptions& o, std::ostream& out, std::ostream& err) {
  std::optional<GibbsModel> model;
  try {
    model.emplace(load_model(o.model_path));
    if (!model->is_gaussian()) throw ValidationError("verification checks need a Gaussian model (quartic = 0)");
  } catch (const ParseError& e) {
    err << "invalid model: " << e.what() << '\n';
    return kInvalidModel;
  } catch (const ValidationError& e) {
    err << "invalid model: " << e.what() << '\n';
    return kInvalidModel;
  }
  CriteriaOptions copts;
  copts.tol = o.tol;
  const auto report = evaluate_criteria(*model, copts);
  if (!report.rho_marton) {
    err << "no certificate: Assumption checks failed (";
    for (const auto& f : report.flags) err << ' ' << f;
    err << " )\n";
    return kNoCertificate;
  }

  std::optional<GaussianDist> p0;
  try {
    p0.emplace(load_p0(o.p0_path, *model, o.shift));
  } catch (const std::exception& e) {
    err << "invalid p0: " << e.what() << '\n';
    return kUsage;
  }

  CsvTable table;
  table.info("meta", "seed", std::to_string(o.seed));
  table.info("meta", "rho_marton", fmt(*report.rho_marton));
  if (o.check == "theorem1") {
    verify_theorem1_rows(o, *model, report, *p0, table);
  } else if (o.check == "gibbs") {
    verify_gibbs_rows(o, *model, report, *p0, table);
  } else if (o.check == "dissipation") {
    verify_dissipation_rows(o, *model, report, *p0, table);
  } else if (o.check == "transport") {
    verify_transport_rows(o, *model, report, *p0, table);
  } else if (o.check == "prop4") {
    verify_prop4_rows(o, *model, report, table);
  }
  Sink sink(o.out, out);
  table.write(sink.stream());
  return table.all_pass ? kPass : kVerificationFailed;
}

BandSpec parse_band(const std::string& text) {
  BandSpec band;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw std::invalid_argument("band entries look like offset:value");
    std::size_t used = 0;
    const int offset = std::stoi(item.substr(0, colon), &used);
    const double value = std::stod(item.substr(colon + 1));
    if (offset < 1) throw std::invalid_argument("band offsets must be >= 1");
    band[offset] = value;
  }
  if (band.empty()) throw std::invalid_argument("band is empty");
  return band;
}

int cmd_toeplitz(Index m, double diag, const std::string& band_text, const std::string& out_path, std::ostream& out,
                 std::ostream& err) {
  BandSpec band;
  try {
    band = parse_band(band_text);
  } catch (const std::exception& e) {
    err << "invalid --band: " << e.what() << '\n';
    return kUsage;
  }
  if (m < 4) {
    err << "--m must be >= 4\n";
    return kUsage;
  }
  for (const auto& [offset, value] : band) {
    if (offset >= m) {
      err << "band offset " << offset << " does not fit in m = " << m << '\n';
      return kUsage;
    }
  }
  const auto s = toeplitz_spectrum_report(m, diag, band);
  json doc;
  json band_json = json::object();
  for (const auto& [offset, value] : band) band_json[std::to_string(offset)] = value;
  doc["m"] = s.m;
  doc["diag"] = s.diag;
  doc["band"] = band_json;
  doc["symbol_grid_points"] = kSymbolGridPoints;
  doc["max_symbol"] = s.max_symbol;
  doc["min_symbol"] = s.min_symbol;
  doc["sup_abs_symbol"] = s.sup_abs_symbol;
  doc["lambda_max_Bm"] = s.lambda_max_Bm;
  doc["lambda_min_Bm"] = s.lambda_min_Bm;
  doc["svd_norm_Bm"] = s.svd_norm_Bm;
  doc["abs"] = {{"max_symbol", s.abs_max_symbol},         {"min_symbol", s.abs_min_symbol},
                {"sup_abs_symbol", s.abs_sup_abs_symbol}, {"lambda_max_Bm", s.abs_lambda_max_Bm},
                {"lambda_min_Bm", s.abs_lambda_min_Bm},   {"svd_norm_Bm", s.abs_svd_norm_Bm}};
  doc["lambda_min_model"] = s.lambda_min_model;
  json notes = json::array();
  if (s.sup_abs_symbol > s.max_symbol + 1e-9) {
    notes.push_back(
        "sup|symbol| exceeds the largest symbol value: the spectral norm of B is governed by the most negative "
        "symbol value, so max_symbol is only the largest eigenvalue, not the norm");
  }
  if (s.lambda_min_model <= 0.0) notes.push_back("diag*I + B_m is not positive definite");
  doc["notes"] = notes;
  Sink sink(out_path, out);
  sink.stream() << doc.dump(2) << '\n';
  return kPass;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Certify log-Sobolev constants of block Gibbs measures and verify entropy inequalities"};
  app.name("lsicert");
  app.require_subcommand(1);

  std::string model_path;
  std::string out_path;
  double tol = kDefaultBisectionTol;
  std::size_t probe_count = 64;
  std::uint64_t probe_seed = 0;
  auto* criteria = app.add_subcommand("criteria", "Compute the LSI certificate report for a model file");
  criteria->add_option("model", model_path, "Model JSON file")->required();
  criteria->add_option("--tol", tol, "Bisection tolerance on rho")->check(CLI::PositiveNumber);
  criteria->add_option("--probes", probe_count, "Latin-hypercube probes for quartic models");
  criteria->add_option("--seed", probe_seed, "Seed for the probe set");
  criteria->add_option("--out", out_path, "Write the report here instead of stdout");

  VerifyOptions vo;
  auto* verify = app.add_subcommand("verify", "Run a verification campaign and emit a CSV pass/fail table");
  verify->add_option("model", vo.model_path, "Model JSON file")->required();
  verify->add_option("check", vo.check, "Which check to run")
      ->required()
      ->check(CLI::IsMember({"theorem1", "gibbs", "dissipation", "transport", "prop4"}));
  verify->add_option("--seed", vo.seed, "Root seed");
  verify->add_option("--samples", vo.samples, "Monte Carlo samples per KL estimate (gibbs)")
      ->check(CLI::Range(std::size_t{1000}, std::size_t{100'000'000}));
  verify->add_option("--steps", vo.steps, "Gibbs steps (gibbs)")->check(CLI::NonNegativeNumber);
  verify->add_option("--cases", vo.cases, "Random instances in addition to p0 (theorem1, transport, prop4)");
  verify->add_option("--shift", vo.shift, "p0 = q shifted by this amount along coordinate 0");
  verify->add_option("--p0", vo.p0_path, "JSON file {\"mean\": [...], \"cov\": [[...]]} overriding --shift");
  verify->add_option("--horizon", vo.horizon, "Time horizon (dissipation)")->check(CLI::PositiveNumber);
  verify->add_option("--dt", vo.dt, "Time-grid step (dissipation)")->check(CLI::PositiveNumber);
  verify->add_option("--trace", vo.trace_path, "Write the t,kl,fisher,bound trace here (dissipation)");
  verify->add_option("--tol", vo.tol, "Bisection tolerance on rho")->check(CLI::PositiveNumber);
  verify->add_option("--out", vo.out, "Write the CSV here instead of stdout");

  Index m = 512;
  double diag = 3.0;
  std::string band_text = "1:1,2:-1";
  std::string toeplitz_out;
  auto* toeplitz = app.add_subcommand("toeplitz", "Symbol and finite-section spectra of a banded Toeplitz matrix");
  toeplitz->add_option("--m", m, "Finite-section size");
  toeplitz->add_option("--diag", diag, "Diagonal of the model precision diag*I + B_m");
  toeplitz->add_option("--band", band_text, "Band as offset:value pairs, e.g. 1:1,2:-1");
  toeplitz->add_option("--out", toeplitz_out, "Write the report here instead of stdout");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kPass;
  } catch (const CLI::ParseError& e) {
    err << e.what() << '\n';
    return kUsage;
  }

  try {
    if (*criteria) return cmd_criteria(model_path, tol, probe_count, probe_seed, out_path, out, err);
    if (*verify) return cmd_verify(vo, out, err);
    if (*toeplitz) return cmd_toeplitz(m, diag, band_text, toeplitz_out, out, err);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  }
  return kUsage;
}

}  // namespace lsicert::cli
