#include <doctest.h>

#include "lsicert/errors.hpp"
#include "lsicert/model.hpp"
#include "support/generators.hpp"

#include <cmath>
#include <set>
#include <string>

using namespace lsicert;
using namespace lsicert::testing;

namespace {

std::string data(const char* name) { return std::string(LSICERT_TEST_DATA) + "/" + name; }

// Smallest eigenvalue of [[a, b], [b, c]] by the quadratic formula.
double min_eig_2x2(double a, double b, double c) {
  return 0.5 * (a + c) - std::sqrt(0.25 * (a - c) * (a - c) + b * b);
}

}  // namespace

TEST_CASE("partition accepts a proper partition and caches complements") {
  BlockPartition part({{2, 0}, {1}, {3, 4}});
  CHECK(part.dim() == 5);
  CHECK(part.block_count() == 3);
  CHECK(part.block_size(0) == 2);
  CHECK(part.block_of(0) == 0);
  CHECK(part.block_of(4) == 2);
  CHECK(part.complement(0) == IndexList{1, 3, 4});
  CHECK(part.complement(2) == IndexList{0, 1, 2});
}

TEST_CASE("partition rejects overlaps, gaps and empty blocks") {
  CHECK_THROWS_AS(BlockPartition({{0}, {0, 1}}), ValidationError);
  CHECK_THROWS_AS(BlockPartition({{0}, {2}}), ValidationError);
  CHECK_THROWS_AS(BlockPartition({{0}, {}}), ValidationError);
  CHECK_THROWS_AS(BlockPartition({}), ValidationError);
  CHECK_THROWS_AS(BlockPartition({{-1}, {0}}), ValidationError);
}

TEST_CASE("load_model: model_2d is valid") {
  const auto model = load_model(data("model_2d.json"));
  CHECK(model.dim() == 2);
  CHECK(model.is_gaussian());
  CHECK(model.precision()(0, 1) == -0.5);
  CHECK(min_eig_2x2(1.0, -0.5, 1.0) == doctest::Approx(0.5));
  CHECK(linalg::min_eigenvalue(model.precision()) == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("load_model: validation and parse errors") {
  CHECK_THROWS_AS(load_model(data("overlap.json")), ValidationError);
  CHECK(min_eig_2x2(1.0, 2.0, 1.0) == doctest::Approx(-1.0));
  CHECK_THROWS_AS(load_model(data("indefinite.json")), ValidationError);
  CHECK_THROWS_AS(load_model(data("malformed.json")), ParseError);
  CHECK_THROWS_AS(load_model(data("does_not_exist.json")), ParseError);

  auto doc = nlohmann::json::parse(R"({"dim": 2, "partition": [[0], [1]], "precision": [[1, 0], [0, 1]]})");
  doc["quartic"] = nlohmann::json::parse("[0.1, -0.2]");
  CHECK_THROWS_AS(parse_model(doc), ValidationError);
  doc.erase("quartic");
  doc["precision"] = nlohmann::json::parse("[[1, 0]]");
  CHECK_THROWS_AS(parse_model(doc), ParseError);
  doc["precision"] = nlohmann::json::parse("[[1, 0.1], [0, 1]]");
  CHECK_THROWS_AS(parse_model(doc), ValidationError);
  doc["partition"] = nlohmann::json::parse("[[0]]");
  doc["precision"] = nlohmann::json::parse("[[1, 0], [0, 1]]");
  CHECK_THROWS_AS(parse_model(doc), ValidationError);
}

TEST_CASE("load_model: tiny asymmetry is symmetrized silently") {
  auto doc = nlohmann::json::parse(R"({"dim": 2, "partition": [[0], [1]], "precision": [[1, 0.2], [0.2, 1]]})");
  doc["precision"][0][1] = 0.2 + 1e-14;
  const auto model = parse_model(doc);
  CHECK(model.precision()(0, 1) == model.precision()(1, 0));
  CHECK(model.mean().isZero());  // mean defaults to zero
}

TEST_CASE("load_model: toeplitz shorthand") {
  const auto model = load_model(data("toeplitz_d3_m4.json"));
  const Matrix expected{{3, 1, -1, 0}, {1, 3, 1, -1}, {-1, 1, 3, 1}, {0, -1, 1, 3}};
  CHECK(model.precision() == expected);
  CHECK(model.block_count() == 4);
  // 3 I + B_64 has smallest eigenvalue about -0.989: not a valid Gaussian model.
  CHECK_THROWS_AS(load_model(data("toeplitz_d3_m64.json")), ValidationError);
}

TEST_CASE("to_json and parse_model round-trip") {
  Rng rng(7);
  for (int i = 0; i < 10; ++i) {
    const auto model = random_gaussian_model(rng);
    const auto back = parse_model(to_json(model));
    CHECK(back.precision() == model.precision());
    CHECK(back.mean() == model.mean());
    CHECK(back.partition().blocks() == model.partition().blocks());
  }
}

TEST_CASE("hessian") {
  const auto model2d = load_model(data("model_2d.json"));
  CHECK(hessian(model2d, Vector::Constant(2, 3.7)) == model2d.precision());

  const GibbsModel quartic(BlockPartition::singletons(1), Matrix::Ones(1, 1), Vector::Zero(1), Vector::Ones(1));
  CHECK(hessian(quartic, Vector::Constant(1, 2.0))(0, 0) == doctest::Approx(49.0));
  CHECK(hessian(quartic, Vector::Zero(1))(0, 0) == 1.0);
  CHECK_THROWS_AS(hessian(quartic, Vector::Zero(2)), DimensionError);
}

TEST_CASE("gradient matches finite differences of the potential") {
  const GibbsModel model(BlockPartition({{0, 1}, {2}}), Matrix{{2, 0.3, 0}, {0.3, 1, -0.2}, {0, -0.2, 1.5}},
                         Vector{{0.5, -1, 0}}, Vector{{0.1, 0, 0.3}});
  const Vector x{{0.4, -0.7, 1.1}};
  const Vector g = model.gradient(x);
  for (Index i = 0; i < 3; ++i) {
    Vector up = x, down = x;
    up(i) += 1e-5;
    down(i) -= 1e-5;
    CHECK(g(i) == doctest::Approx((model.potential(up) - model.potential(down)) / 2e-5).epsilon(1e-7));
  }
}

TEST_CASE("hessian is constant in x for Gaussian models") {
  Rng rng(11);
  for (int i = 0; i < 20; ++i) {
    const auto model = random_gaussian_model(rng);
    const Matrix h0 = hessian(model, random_vector(model.dim(), rng, 3.0));
    CHECK(hessian(model, random_vector(model.dim(), rng, 3.0)) == h0);
  }
}

TEST_CASE("latin hypercube probes are stratified in every coordinate") {
  const auto model = load_model(data("model_2d.json"));
  const std::size_t count = 16;
  const auto probes = latin_hypercube_probes(model, count, 3, 2.0);
  REQUIRE(probes.size() == count);
  for (Index d = 0; d < 2; ++d) {
    std::set<int> strata_x, strata_xi;
    for (const auto& p : probes) {
      strata_x.insert(static_cast<int>(std::floor((p.x(d) + 2.0) / 4.0 * count)));
      strata_xi.insert(static_cast<int>(std::floor((p.xi(d) + 2.0) / 4.0 * count)));
    }
    CHECK(strata_x.size() == count);
    CHECK(strata_xi.size() == count);
  }
  const auto again = latin_hypercube_probes(model, count, 3, 2.0);
  CHECK(again.front().x == probes.front().x);
}

TEST_CASE("verify_assumptions: worked examples") {
  SUBCASE("model_2d") {
    const auto r = verify_assumptions(load_model(data("model_2d.json")));
    CHECK(r.rho_k == std::vector<double>{1.0, 1.0});
    REQUIRE(r.delta);
    CHECK(*r.delta == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(r.assumption1_ok);
    CHECK(r.assumption2_ok);
    CHECK(r.assumption3_ok);
    CHECK_FALSE(r.sampled);
  }
  SUBCASE("product model") {
    const auto r = verify_assumptions(load_model(data("product_2d.json")));
    REQUIRE(r.delta);
    CHECK(*r.delta == 1.0);
    CHECK(r.assumption3_ok);
  }
  SUBCASE("nearly singular coupling") {
    const auto r = verify_assumptions(load_model(data("marginal_2d.json")));
    REQUIRE(r.delta);
    CHECK(*r.delta == doctest::Approx(0.001).epsilon(1e-9));
    CHECK(r.assumption3_ok);
  }
  SUBCASE("repulsive triangle fails Assumption 3") {
    const GibbsModel model(BlockPartition::singletons(3), Matrix{{1, 0.6, 0.6}, {0.6, 1, 0.6}, {0.6, 0.6, 1}},
                           Vector::Zero(3));
    const auto r = verify_assumptions(model);
    CHECK(r.assumption1_ok);
    CHECK_FALSE(r.assumption3_ok);
    CHECK_FALSE(r.delta);
    CHECK(*r.norm_A0 == doctest::Approx(1.2));
  }
  SUBCASE("quartic model reports sampled bounds") {
    const auto r = verify_assumptions(load_model(data("quartic_1d.json")));
    CHECK(r.sampled);
    CHECK(r.block_hessian_lower_bounds[0] == doctest::Approx(1.0));
    CHECK(r.assumption3_ok);
  }
}

TEST_CASE("verify_assumptions: no cross-block coupling gives delta = 1") {
  Rng rng(5);
  for (int i = 0; i < 25; ++i) {
    const Index n = uniform_int(rng, 2, 6);
    BlockPartition part = random_partition(n, rng);
    Matrix k = random_spd(n, rng, 0.5, 2.0);
    for (Index a = 0; a < n; ++a) {
      for (Index b = 0; b < n; ++b) {
        if (part.block_of(a) != part.block_of(b)) k(a, b) = 0.0;
      }
    }
    const auto r = verify_assumptions(GibbsModel(std::move(part), k, Vector::Zero(n)));
    REQUIRE(r.delta);
    CHECK(*r.delta == 1.0);
  }
}

TEST_CASE("verify_assumptions: damping cross-block entries never decreases delta") {
  Rng rng(9);
  for (int i = 0; i < 40; ++i) {
    const auto model = random_gaussian_model(rng);
    const double s = uniform(rng, 0.05, 1.0);
    Matrix k = model.precision();
    for (Index a = 0; a < k.rows(); ++a) {
      for (Index b = 0; b < k.cols(); ++b) {
        if (model.partition().block_of(a) != model.partition().block_of(b)) k(a, b) *= s;
      }
    }
    const auto before = verify_assumptions(model);
    const auto after = verify_assumptions(GibbsModel(model.partition(), k, model.mean()));
    CHECK(*after.norm_A0 <= *before.norm_A0 + 1e-12);
    if (before.assumption3_ok) CHECK(after.assumption3_ok);
  }
}
