#include <doctest.h>

#include <cmath>
#include <numbers>

#include "nodal/ensemble.hpp"
#include "nodal/error.hpp"
#include "nodal/moments.hpp"

using namespace nodal;

namespace {

constexpr double kPi = std::numbers::pi;

// Independent polar/adaptive quadrature of (1/2pi) int dz / sqrt(1 - u^2), d = 2.
struct Oracle {
  std::int64_t energy;
  double I;
};
constexpr Oracle kOracle[] = {{5, 0.17858183361214708},
                              {25, 0.16851393033915868},
                              {65, 0.16544559778585877},
                              {325, 0.1629198656285325},
                              {1105, 0.16186311131473954}};

}  // namespace

TEST_CASE("exact moments of u") {
  CHECK(u_second_moment(enumerate_frequencies(2, 1)) == Rational(1, 4));
  CHECK(u_second_moment(enumerate_frequencies(2, 325)) == Rational(1, 24));
  CHECK(u_fourth_moment(enumerate_frequencies(2, 1)) == Rational(9, 64));
  for (std::int64_t e : {5, 25, 65, 325, 1105}) {
    const auto fs = enumerate_frequencies(2, e);
    const std::int64_t n = static_cast<std::int64_t>(fs.multiplicity());
    CHECK(u_fourth_moment(fs) == Rational(3 * (n - 1), n * n * n));
    CHECK(u_fourth_moment(fs) <= u_second_moment(fs));
  }
  CHECK_THROWS_AS((void)u_second_moment(enumerate_frequencies(2, 3)), EmptyEnsembleError);
}

TEST_CASE("grid moments are exact on fine enough grids") {
  const auto fs = enumerate_frequencies(2, 325);
  CHECK(grid_power_moment(fs, 2, 64) == doctest::Approx(1.0 / 24).epsilon(1e-14));
  CHECK(std::abs(grid_power_moment(fs, 2, 64) - 1.0 / 24) <= 1e-14);
  CHECK(grid_power_moment(fs, 4, 128) == doctest::Approx(u_fourth_moment(fs).convert_to<double>()).epsilon(1e-12));
  CHECK(grid_power_moment(enumerate_frequencies(3, 2), 4, 16) == doctest::Approx(u_fourth_moment(enumerate_frequencies(3, 2)).convert_to<double>()).epsilon(1e-12));
}

TEST_CASE("second-moment quadrature against the oracle") {
  for (const auto& o : kOracle) {
    CAPTURE(o.energy);
    const auto q = second_moment_quadrature(enumerate_frequencies(2, o.energy));
    CHECK(std::abs(q.value - o.I) <= 1e-7);
    CHECK(q.value >= 1.0 / (2 * kPi));
    CHECK(q.refinement_error <= 1e-5);
  }
}

TEST_CASE("quadrature is stable under refinement and symmetry folding") {
  const auto fs = enumerate_frequencies(2, 5);
  QuadratureOptions a, b;
  a.grid = 512;
  a.rho = 0.02;
  b.grid = 1024;
  b.rho = 0.02;
  CHECK(std::abs(second_moment_quadrature(fs, a).value - second_moment_quadrature(fs, b).value) <= 1e-6);
  QuadratureOptions s;
  s.use_symmetry = true;
  const auto fs2 = enumerate_frequencies(2, 65);
  CHECK(second_moment_quadrature(fs2, s).value == doctest::Approx(second_moment_quadrature(fs2).value).epsilon(1e-13));

  // d = 3: grid refinement and folding agree.
  const auto f3 = enumerate_frequencies(3, 5);
  QuadratureOptions c3;
  c3.grid = 96;
  c3.use_symmetry = true;
  QuadratureOptions f3o = c3;
  f3o.grid = 128;
  const auto qa = second_moment_quadrature(f3, c3);
  const auto qb = second_moment_quadrature(f3, f3o);
  CHECK(std::abs(qa.value - qb.value) <= 1e-5);
  QuadratureOptions full = c3;
  full.use_symmetry = false;
  CHECK(second_moment_quadrature(f3, full).value == doctest::Approx(qa.value).epsilon(1e-12));
  CHECK(qb.value >= 1.0 / (2 * kPi));
}

TEST_CASE("quadrature preconditions") {
  CHECK_THROWS_WITH_AS((void)second_moment_quadrature(enumerate_frequencies(2, 1)), "degenerate frequency set",
                       PreconditionError);
  CHECK_THROWS_AS((void)second_moment_quadrature(enumerate_frequencies(2, 3)), EmptyEnsembleError);
  QuadratureOptions big;
  big.rho = 0.4;
  CHECK_THROWS_AS((void)second_moment_quadrature(enumerate_frequencies(2, 5), big), GeometryError);
  QuadratureOptions coarse;
  coarse.grid = 8;
  CHECK_THROWS_AS((void)second_moment_quadrature(enumerate_frequencies(2, 325), coarse), ResolutionError);
  CHECK_THROWS_AS((void)second_moment_quadrature(enumerate_frequencies(4, 6)), DomainError);
  CHECK(default_excision_radius(enumerate_frequencies(2, 5)) == doctest::Approx(0.05));
}

TEST_CASE("local model near B") {
  const auto fs = std::make_shared<const FrequencySet>(enumerate_frequencies(2, 325));
  const CovarianceKernel k(fs);
  for (double angle : {0.0, 0.7, 2.1}) {
    const double h = 1e-3;
    const double z[2] = {h * std::cos(angle), h * std::sin(angle)};
    const double ratio = k.one_minus_u_squared(z) / (4 * kPi * kPi * 325.0 / 2.0 * h * h);
    CHECK(ratio >= 0.99);
    CHECK(ratio <= 1.01);
  }
  const auto q = second_moment_quadrature(*fs);
  CHECK(q.local_model_error <= 0.05 * q.local_model_mass);
}

TEST_CASE("variance decomposition") {
  const auto r5 = variance_decomposition(enumerate_frequencies(2, 5));
  CHECK(r5.residual > 0.0);
  CHECK(r5.residual_within_bound);
  const auto r325 = variance_decomposition(enumerate_frequencies(2, 325));
  CHECK(r325.var_times_4piN >= 1.0);
  CHECK(r325.var_times_4piN <= 1.4);
  CHECK(r325.u4 / r325.u2 == Rational(3 * 23, 24 * 24));
  const auto j = to_json(r325);
  CHECK(j["u4"] == "23/4608");
  CHECK(csv_header_moments().rfind("dim,energy,N", 0) == 0);
}

TEST_CASE("fourth-moment bound") {
  const auto c = fourth_moment_bound_check(enumerate_frequencies(2, 325));
  CHECK(c.u4_times_N2 == Rational(69, 24));
  CHECK(c.asserted);
  CHECK(c.holds);
  for (std::int64_t e = 1; e <= 400; ++e) {
    const auto fs = enumerate_frequencies(2, e);
    if (!fs.empty()) CHECK(fourth_moment_bound_check(fs).u4_times_N2 < Rational(3));
  }
  const auto c3 = fourth_moment_bound_check(enumerate_frequencies(3, 2));
  CHECK_FALSE(c3.asserted);
  CHECK(std::isfinite(c3.ratio));
}

TEST_CASE("asymptotic table") {
  const auto rows = asymptotic_table({3, 25, 65}, 2);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].multiplicity == 0);
  CHECK_FALSE(rows[0].report.has_value());
  CHECK(rows[1].multiplicity == 12);
  CHECK(rows[2].multiplicity == 16);
  REQUIRE(rows[1].report.has_value());
  REQUIRE(rows[2].report.has_value());
  CHECK(rows[1].report->var_times_4piN > rows[2].report->var_times_4piN);
  CHECK(to_json(rows).size() == 3);
}
