// Acceptance suite. One line per criterion:
//   [PASS] Cn <title> | <details>
// Pass criterion numbers as arguments to run a subset. Exit status is 0 only
// when every selected criterion passes.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "nodal/ensemble.hpp"
#include "nodal/error.hpp"
#include "nodal/harness.hpp"
#include "nodal/lattice.hpp"
#include "nodal/leray_measure.hpp"
#include "nodal/moments.hpp"
#include "nodal/rng.hpp"
#include "nodal/singular.hpp"

using namespace nodal;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr std::uint64_t kSeed = 1;

struct Outcome {
  bool pass = true;
  std::ostringstream details;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      details << "FAILED: " << what << "; ";
    }
  }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::shared_ptr<const FrequencySet> sphere(int d, std::int64_t e) {
  return std::make_shared<const FrequencySet>(enumerate_frequencies(d, e));
}

// The E = 325 run is shared by criteria 3 and 4.
const ExperimentReport& expectation_run_325() {
  static const ExperimentReport report = [] {
    ExperimentConfig c;
    c.dim = 2;
    c.energy = 325;
    c.samples = 20000;
    c.seed = kSeed;
    c.grid = 512;
    c.method = LerayMethod::surface_integral;
    c.threads = 0;
    c.keep_trials = false;
    return run_variance_experiment(c);
  }();
  return report;
}

// ---------------------------------------------------------------------------

void multiplicity_formula(Outcome& out) {
  const auto t0 = std::chrono::steady_clock::now();
  std::int64_t mismatches = 0;
  std::int64_t nonzero = 0;
  for (std::int64_t e = 1; e <= 10000; ++e) {
    std::int64_t count = 0;
    for (std::int64_t a = -100; a <= 100; ++a) {
      const std::int64_t rest = e - a * a;
      if (rest < 0) continue;
      const auto b = static_cast<std::int64_t>(std::llround(std::sqrt(static_cast<double>(rest))));
      if (b * b == rest) count += b == 0 ? 1 : 2;
    }
    if (count != multiplicity_formula_2d(e)) ++mismatches;
    if (count > 0) ++nonzero;
  }
  const double elapsed = seconds_since(t0);
  out.require(mismatches == 0, std::to_string(mismatches) + " energies disagree");
  out.require(elapsed < 10.0, "runtime over 10 s");
  out.details << "E <= 10000, " << nonzero << " represented energies, " << mismatches
              << " mismatches, " << elapsed << " s";
}

void four_tuples(Outcome& out) {
  const auto t0 = std::chrono::steady_clock::now();
  int energies = 0;
  int loop_mismatch = 0;
  int diagonal_mismatch = 0;
  for (std::int64_t e = 1; e <= 200; ++e) {
    if (multiplicity_formula_2d(e) == 0) continue;
    const auto fs = enumerate_frequencies(2, e);
    const auto& v = fs.vectors;
    const std::set<IntVector> members(v.begin(), v.end());
    std::int64_t loop = 0;
    IntVector l4(2);
    for (const auto& a : v)
      for (const auto& b : v)
        for (const auto& c : v) {
          l4[0] = a[0] + b[0] - c[0];
          l4[1] = a[1] + b[1] - c[1];
          loop += members.count(l4);
        }
    const BigInt count = four_tuple_count(fs);
    const auto n = static_cast<std::int64_t>(v.size());
    if (count != loop) ++loop_mismatch;
    if (count != 3 * n * n - 3 * n) ++diagonal_mismatch;
    ++energies;
  }
  const Rational u4 = u_fourth_moment(enumerate_frequencies(2, 1));
  const double elapsed = seconds_since(t0);
  out.require(loop_mismatch == 0, "cubic loop disagrees");
  out.require(diagonal_mismatch == 0, "count differs from 3N^2 - 3N");
  out.require(u4 == Rational(9, 64), "u4(E = 1) = " + to_string(u4));
  out.require(elapsed < 30.0, "runtime over 30 s");
  out.details << energies << " energies <= 200, u4(E=1) = " << to_string(u4) << ", " << elapsed << " s";
}

void expectation(Outcome& out) {
  const auto& r = expectation_run_325();
  const double target = 1.0 / std::sqrt(2.0 * kPi);
  const double se = r.standard_error.value_or(std::numeric_limits<double>::infinity());
  const double gap = std::abs(r.mean - target);
  out.require(r.completed == 20000, "incomplete run");
  out.require(gap <= 3.0 * se, "mean outside 3 SE");
  out.require(se >= 3e-4 && se <= 5e-4, "SE not about 4e-4");
  out.details << "mean " << r.mean << " vs " << target << ", |diff| " << gap << ", SE " << se
              << ", |diff|/SE " << gap / se << ", retried " << r.retried << ", "
              << r.timings.trials_seconds << " s";
}

void second_moment(Outcome& out) {
  auto check = [&](const ExperimentReport& r) {
    const double gap = std::abs(r.mean_square - *r.quadrature_I);
    const bool ok = gap <= 3.0 * *r.combined_se;
    out.require(ok, "E = " + std::to_string(r.config.energy));
    out.details << "E=" << r.config.energy << ": MC " << r.mean_square << " I " << *r.quadrature_I
                << " |diff|/cse " << gap / *r.combined_se << "; ";
  };
  for (std::int64_t e : {5, 25, 65}) {
    ExperimentConfig c;
    c.dim = 2;
    c.energy = e;
    c.samples = 20000;
    c.seed = kSeed;
    c.method = LerayMethod::surface_integral;
    c.keep_trials = false;
    check(run_variance_experiment(c));
  }
  check(expectation_run_325());
}

void variance_decomposition_bound(Outcome& out) {
  for (std::int64_t e : {5, 25, 65, 325}) {
    const auto r = variance_decomposition(enumerate_frequencies(2, e));
    const double u4 = r.u4.convert_to<double>();
    out.require(std::abs(r.residual) <= 20.0 * u4, "residual bound at E = " + std::to_string(e));
    out.require(r.second_moment >= 1.0 / (2.0 * kPi), "I < 1/2pi at E = " + std::to_string(e));
    out.details << "E=" << e << ": residual " << r.residual << " (" << std::abs(r.residual) / u4
                << " u4); ";
  }
}

void asymptotic_trend(Outcome& out) {
  const auto rows = asymptotic_table({25, 65, 325, 1105}, 2);
  double previous = std::numeric_limits<double>::infinity();
  for (const auto& row : rows) {
    out.require(row.report.has_value(), "missing row E = " + std::to_string(row.energy));
    if (!row.report) continue;
    const double v = row.report->var_times_4piN;
    out.require(v < previous, "not decreasing at N = " + std::to_string(row.multiplicity));
    out.require(v >= 1.0 && v <= 1.5, "outside [1, 1.5] at N = " + std::to_string(row.multiplicity));
    if (row.multiplicity == 32) out.require(v <= 1.25, "above 1.25 at N = 32");
    previous = v;
    out.details << "N=" << row.multiplicity << ": " << v << "; ";
  }
}

void estimator_consistency(Outcome& out) {
  for (std::int64_t e : {25, 325}) {
    const auto fs = sphere(2, e);
    const int grid = 512;
    double worst = 0.0;
    int above = 0;
    for (int t = 0; t < 100; ++t) {
      const auto f = sample(fs, kSeed, static_cast<std::uint64_t>(t));
      const double a = leray_epsilon(f, 1e-3, grid).value;
      const double b = leray_surface_2d(f, grid).value;
      worst = std::max(worst, std::abs(a - b));
      if (std::abs(a - b) > 2e-3) ++above;
    }
    out.require(above == 0, std::to_string(above) + " samples over 2e-3 at E = " + std::to_string(e));
    out.details << "E=" << e << ": max |eps - surface| " << worst << "; ";
  }
  const auto s = TrigField::axis_sine(2);
  const double se = leray_epsilon(s, 1e-3, 512).value;
  const double ss = leray_surface_2d(s, 512).value;
  out.require(std::abs(se - 1.0 / kPi) <= 1e-4, "sine epsilon estimate");
  out.require(std::abs(ss - 1.0 / kPi) <= 1e-4, "sine surface estimate");
  out.details << "sine: eps " << se << ", surface " << ss;
}

// (alpha, beta) with the Kac hypothesis verified on a grid finer than kac_bound's.
std::pair<double, double> fit_kac(const TrigPoly1D& g) {
  const int n = 1 << 16;
  double top = 0.0;
  for (int i = 0; i < n; ++i) top = std::max(top, std::abs(g.value(static_cast<double>(i) / n)));
  const double alpha = 0.2 * top;
  double min_slope = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) {
    double v, d1, d2;
    g.jet(static_cast<double>(i) / n, v, d1, d2);
    if (std::abs(v) < alpha) min_slope = std::min(min_slope, std::abs(d1));
  }
  return {alpha, 0.5 * min_slope};
}

void bounds_suite(Outcome& out) {
  // Kac: explicit sines and restrictions of random eigenfunctions.
  int kac_cases = 0;
  double kac_worst = 0.0;
  for (int m = 1; m <= 4; ++m) {
    const auto r = kac_bound(TrigPoly1D::sine(m), 0.5, m * kPi * std::sqrt(3.0));
    out.require(r.empirical_sup <= r.bound, "Kac bound for sin(2 pi " + std::to_string(m) + " t)");
    kac_worst = std::max(kac_worst, r.empirical_sup / r.bound);
    ++kac_cases;
  }
  const auto fs25 = sphere(2, 25);
  Rng rng(kSeed, 1);
  for (int t = 0; t < 20; ++t) {
    const double base[2] = {rng.uniform(), rng.uniform()};
    const auto g = sample(fs25, kSeed, 1000 + t).field().restrict_to_line(t % 2, base);
    const auto [alpha, beta] = fit_kac(g);
    if (!(beta > 0.0)) continue;
    const auto r = kac_bound(g, alpha, beta);
    out.require(r.empirical_sup <= r.bound, "Kac bound for a random restriction");
    kac_worst = std::max(kac_worst, r.empirical_sup / r.bound);
    ++kac_cases;
  }
  out.details << "Kac: " << kac_cases << " cases, max sup/bound " << kac_worst << "; ";

  // Ensemble bound on fields whose regularity class is verified on the grid.
  int ens_cases = 0;
  double ens_worst = 0.0;
  {
    const auto r = ensemble_bound(TrigField::axis_sine(2), 0.5, kPi * std::sqrt(3.0));
    out.require(r.all_below, "ensemble bound for the sine");
    for (auto [eps, v] : r.values) ens_worst = std::max(ens_worst, v / r.bound);
    ++ens_cases;
  }
  for (int t = 0; t < 10; ++t) {
    const auto f = sample(fs25, kSeed, 2000 + t).field();
    const auto [alpha, beta] = fit_regularity(f, 0.1);
    if (!(beta > 0.0)) continue;
    const auto r = ensemble_bound(f, alpha, beta, {1e-2, 1e-3, 1e-4});
    out.require(r.all_below, "ensemble bound for a random field");
    for (auto [eps, v] : r.values) ens_worst = std::max(ens_worst, v / r.bound);
    ++ens_cases;
  }
  out.details << "ensemble: " << ens_cases << " fields, max L/bound " << ens_worst << "; ";

  // u bounds and measB at E = 325.
  const auto f325 = enumerate_frequencies(2, 325);
  const auto dec = classify_cubes(f325);
  const auto ub = u_bounds_check(f325, dec, 100000, kSeed, true);
  out.require(ub.holds(), "u bounds violated");
  out.details << "u bounds: " << ub.samples << " points, max|u| regular " << ub.max_abs_u_regular
              << " (< " << ub.regular_threshold << "), min|u| certified " << ub.min_abs_u_certified
              << " (> " << ub.singular_threshold << "); ";
  const double u4 = u_fourth_moment(f325).convert_to<double>();
  out.require(dec.measB() <= 65536.0 * u4, "measB above 16^4 u4");
  out.details << "measB " << dec.measB() << " <= " << 65536.0 * u4 << "; ";

  // Hessian at the origin: -4 pi^2 E / d on the diagonal.
  for (auto [d, e] : {std::pair{2, 325}, std::pair{3, 6}}) {
    const auto fs = enumerate_frequencies(d, e);
    const std::vector<double> origin(d, 0.0);
    const auto h = hessian_definiteness(fs, origin, 1);
    const double expected = -4.0 * kPi * kPi * e / d;
    bool exact = h.holds;
    for (int k = 0; k < d; ++k) exact = exact && std::abs(h.eigenvalues[k] - expected) <= 1e-9 * std::abs(expected);
    out.require(exact, "origin Hessian, d = " + std::to_string(d));
  }

  // Hessian at 100 certified points drawn inside singular cubes.
  Rng pick(kSeed, 2);
  int certified = 0;
  int attempts = 0;
  int hessian_failures = 0;
  while (certified < 100 && attempts < 100000) {
    ++attempts;
    const auto& cube = dec.singular[static_cast<std::size_t>(pick.uniform() * dec.singular.size())];
    std::vector<double> x(2);
    for (int k = 0; k < 2; ++k) x[k] = (cube.coords[k] + pick.uniform()) / dec.M;
    const int sign = static_cast<int>(cube.cls);
    if (!certificate_holds(f325, x, sign)) continue;
    ++certified;
    if (!hessian_definiteness(f325, x, sign).holds) ++hessian_failures;
  }
  out.require(certified == 100, "only " + std::to_string(certified) + " certified points found");
  out.require(hessian_failures == 0, std::to_string(hessian_failures) + " Hessian failures");
  out.details << "Hessian: origin exact, " << certified << " certified points, " << hessian_failures
              << " failures";
}

void rank_checks(Outcome& out) {
  for (auto [d, e] : {std::pair{2, 5}, std::pair{2, 325}, std::pair{3, 2}}) {
    const auto fs = enumerate_frequencies(d, e);
    Rng rng(kSeed, 10 + e);
    int bad = 0;
    std::vector<double> x(d);
    for (int i = 0; i < 200; ++i) {
      for (auto& xi : x) xi = rng.uniform();
      if (jacobian_rank(fs, x) != d + 1) ++bad;
    }
    out.require(bad == 0, std::to_string(bad) + " rank deficient points for (" + std::to_string(d) +
                              ", " + std::to_string(e) + ")");
    out.details << "(d=" << d << ", E=" << e << "): " << 200 - bad << "/200; ";
  }
}

void higher_dimension(Outcome& out) {
  int reported = 0;
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (std::int64_t e = 1; e <= 50; ++e) {
    const auto fs = enumerate_frequencies(3, e);
    if (fs.empty()) continue;
    const auto c = fourth_moment_bound_check(fs);
    const Rational inv_n(1, static_cast<long long>(fs.multiplicity()));
    out.require(std::isfinite(c.ratio), "non-finite ratio at E = " + std::to_string(e));
    out.require(!c.asserted, "a constant was asserted at E = " + std::to_string(e));
    out.require(c.u4 <= inv_n, "u4 > 1/N at E = " + std::to_string(e));
    lo = std::min(lo, c.ratio);
    hi = std::max(hi, c.ratio);
    ++reported;
  }
  out.details << reported << " energies, u4 N^2 in [" << lo << ", " << hi << "], u4 <= 1/N throughout";
}

struct Criterion {
  int id;
  const char* title;
  std::function<void(Outcome&)> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria = {
      {1, "multiplicity formula vs brute force", multiplicity_formula},
      {2, "four-tuple count and u4 exactness", four_tuples},
      {3, "expectation 1/sqrt(2 pi) at E = 325", expectation},
      {4, "Monte Carlo second moment vs quadrature", second_moment},
      {5, "variance decomposition residual", variance_decomposition_bound},
      {6, "Var 4 pi N trend", asymptotic_trend},
      {7, "epsilon vs surface estimator", estimator_consistency},
      {8, "bounds suite", bounds_suite},
      {9, "Jacobian rank", rank_checks},
      {10, "three-dimensional fourth moments", higher_dimension},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

  int failures = 0;
  for (const auto& c : criteria) {
    if (!selected.empty() && !selected.count(c.id)) continue;
    Outcome out;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      c.run(out);
    } catch (const std::exception& e) {
      out.require(false, std::string("exception: ") + e.what());
    }
    const double elapsed = seconds_since(t0);
    if (!out.pass) ++failures;
    std::printf("[%s] C%d %s | %s (%.1f s)\n", out.pass ? "PASS" : "FAIL", c.id, c.title,
                out.details.str().c_str(), elapsed);
    std::fflush(stdout);
  }
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
