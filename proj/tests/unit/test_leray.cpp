#include <doctest.h>

#include <cmath>
#include <numbers>

#include "nodal/ensemble.hpp"
#include "nodal/error.hpp"
#include "nodal/leray_measure.hpp"

using namespace nodal;

namespace {

constexpr double kPi = std::numbers::pi;

std::shared_ptr<const FrequencySet> sphere(int d, std::int64_t e) {
  return std::make_shared<const FrequencySet>(enumerate_frequencies(d, e));
}

double arcsin_band(double eps) { return std::asin(eps) / (kPi * eps); }

}  // namespace

TEST_CASE("epsilon estimator on sin 2 pi x") {
  const auto s = TrigField::axis_sine(2);
  const auto e = leray_epsilon(s, 0.01, 64);
  CHECK(e.value == doctest::Approx(arcsin_band(0.01)).epsilon(1e-10));
  CHECK(e.method == LerayMethod::epsilon_level);
  const auto s3 = TrigField::axis_sine(3, 2, 2);
  CHECK(leray_epsilon(s3, 0.1, 32).value == doctest::Approx(arcsin_band(0.1)).epsilon(1e-10));
  CHECK(leray_epsilon(TrigField::constant(2, 1.0), 0.5, 32).value == 0.0);
}

TEST_CASE("surface estimator on explicit fields") {
  const auto s = TrigField::axis_sine(2);
  const auto e = leray_surface_2d(s, 512);
  CHECK(std::abs(e.value - 1.0 / kPi) <= 1e-4);
  CHECK(e.method == LerayMethod::surface_integral);
  // Rotated and scaled copies.
  const auto t = TrigField::axis_sine(2, 1, 3, 2.0);
  CHECK(leray_surface_2d(t, 256).value == doctest::Approx(0.5 / kPi).epsilon(1e-6));
  CHECK(leray_surface_2d(TrigField::constant(2, 1.0), 64).value == 0.0);
}

TEST_CASE("homogeneity") {
  const auto f = sample(sphere(2, 25), 3, 1).field();
  const double a = leray_surface_2d(f, 256).value;
  CHECK(leray_surface_2d(f.scaled(-2.5), 256).value == doctest::Approx(a / 2.5).epsilon(1e-10));
  CHECK(leray_epsilon(f.scaled(4.0), 4e-3, 128).value == doctest::Approx(leray_epsilon(f, 1e-3, 128).value / 4.0).epsilon(1e-10));
}

TEST_CASE("cross-estimator consistency on random samples") {
  const auto fs = sphere(2, 25);
  int agree = 0;
  for (int t = 0; t < 10; ++t) {
    const auto f = sample(fs, 1234, t);
    const double a = leray_epsilon(f, 1e-3, 128).value;
    const double b = leray_surface_2d(f, 256).value;
    if (std::abs(a - b) <= 1e-3) ++agree;
  }
  CHECK(agree >= 9);
  const auto f = sample(sphere(2, 325), 99, 0);
  const double v = leray_surface_2d(f, 512).value;
  CHECK(v >= 0.2);
  CHECK(v <= 0.7);
}

TEST_CASE("resolution and domain errors") {
  const auto f = sample(sphere(2, 325), 1, 0);
  CHECK_THROWS_AS((void)leray_epsilon(f, 1e-3, 16), ResolutionError);
  CHECK_THROWS_AS((void)leray_epsilon(f, -1.0, 512), DomainError);
  CHECK_THROWS_AS((void)leray_surface_2d(sample(sphere(3, 2), 1, 0), 64), DomainError);
  CHECK(default_leray_grid(325) == 16 * 19);
  CHECK(default_leray_grid(5) == 128);
  CHECK(parse_leray_method("surface") == LerayMethod::surface_integral);
  CHECK(parse_leray_method("epsilon_level") == LerayMethod::epsilon_level);
}

TEST_CASE("band intervals of a one-variable polynomial") {
  const auto g = TrigPoly1D::sine(1);
  CHECK(band_measure(g, 0.5) == doctest::Approx(2.0 / 6.0).epsilon(1e-12));
  const auto iv = band_intervals(g, 0.5, 8);
  double total = 0;
  for (auto [a, b] : iv) total += b - a;
  CHECK(total == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("Kac bound") {
  const double beta = kPi * std::sqrt(3.0);
  const auto r = kac_bound(TrigPoly1D::sine(1), 0.5, beta);
  CHECK(r.bound == doctest::Approx(2.0 / (kPi * std::sqrt(3.0))));
  CHECK(r.empirical_sup <= r.bound);
  CHECK(r.empirical_sup >= 1.0 / kPi - 1e-9);
  const auto c = kac_bound(TrigPoly1D::cosine(1), 0.5, beta);
  CHECK(c.empirical_sup == doctest::Approx(r.empirical_sup).epsilon(1e-9));
  const auto r2 = kac_bound(TrigPoly1D::sine(2), 0.5, 2 * beta);
  CHECK(r2.bound == doctest::Approx(r.bound));
  CHECK(r2.empirical_sup <= r2.bound);
  CHECK_THROWS_AS((void)kac_bound(TrigPoly1D::sine(1), 0.5, 10.0), HypothesisError);
}

TEST_CASE("ensemble bound") {
  const auto s = TrigField::axis_sine(2);
  const auto r = ensemble_bound(s, 0.5, kPi * std::sqrt(3.0));
  CHECK(r.bound == doctest::Approx(std::pow(2.0, 1.5) * 2.0 / (kPi * std::sqrt(3.0))));
  CHECK(r.all_below);
  CHECK_THROWS_AS((void)ensemble_bound(s, 0.5, 100.0), HypothesisError);

  const auto f = sample(sphere(2, 25), 21, 0).field();
  const auto [alpha, beta] = fit_regularity(f, 0.1);
  const auto rf = ensemble_bound(f, alpha, beta, {1e-2, 1e-3, 1e-4});
  CHECK(rf.values.size() == 3);
  CHECK(rf.all_below);
  for (auto [eps, v] : rf.values) CHECK(v <= rf.bound);
}

TEST_CASE("epsilon convergence") {
  const auto s = TrigField::axis_sine(2);
  const auto r = epsilon_convergence(s, {1e-1, 1e-2, 1e-3}, 64);
  REQUIRE(r.values.size() == 3);
  CHECK(r.values[0].second > r.values[1].second);
  CHECK(r.values[1].second > r.values[2].second);
  CHECK(r.values[2].second > 1.0 / kPi);
  const auto c = epsilon_convergence(TrigField::constant(2, 2.0), {1e-1, 1e-2}, 32);
  for (auto [e, v] : c.values) CHECK(v == 0.0);
  const auto f = sample(sphere(2, 25), 17, 2).field();
  const auto rf = epsilon_convergence(f, {1e-2, 1e-3, 1e-4}, 128);
  REQUIRE(rf.last_difference);
  CHECK(*rf.last_difference <= 1e-3);
  CHECK_THROWS_AS((void)epsilon_convergence(s, {1e-3, 1e-2}, 64), DomainError);
}

TEST_CASE("serialisation") {
  const auto e = leray_surface_2d(TrigField::axis_sine(2), 64);
  const auto j = to_json(e);
  CHECK(j["method"] == "surface_integral");
  CHECK(csv_header_leray() == "method,epsilon,grid,value,error_hint");
  CHECK(to_csv_row(e).rfind("surface_integral,", 0) == 0);
}
