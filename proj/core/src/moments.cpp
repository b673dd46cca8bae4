#include "nodal/moments.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <sstream>

#include "nodal/ensemble.hpp"
#include "nodal/error.hpp"
#include "nodal/parallel.hpp"
#include "nodal/quadrature.hpp"

namespace nodal {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * kPi;
constexpr double kLocalModelScale = 0.05;  // local model radius, in units of 1 / sqrt(E)

int ceil_sqrt(std::int64_t e) {
  auto r = isqrt(e);
  if (r * r < e) ++r;
  return static_cast<int>(r);
}

void require_nonempty(const FrequencySet& freqs) {
  if (freqs.empty()) throw EmptyEnsembleError("empty frequency set (N = 0)");
}

/// Smooth step: 0 for t <= 0, 1 for t >= 1, C-infinity in between.
double smooth_step(double t) {
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  const double a = std::exp(-1.0 / t);
  const double b = std::exp(-1.0 / (1.0 - t));
  return a / (a + b);
}

/// Cutoff around a point of B: 1 for r <= rho/2, 0 for r >= rho.
double cutoff(double r, double rho) { return 1.0 - smooth_step((r - 0.5 * rho) / (0.5 * rho)); }

double torus_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    double d = a[k] - b[k];
    d -= std::round(d);
    s += d * d;
  }
  return std::sqrt(s);
}

struct Ball {
  std::vector<std::vector<double>> centres;
  double rho = 0.0;

  /// 1 - sum of cutoffs at z.
  [[nodiscard]] double outside_weight(std::span<const double> z) const {
    double w = 1.0;
    for (const auto& c : centres) {
      const double r = torus_distance(z, c);
      if (r < rho) w -= cutoff(r, rho);
    }
    return w;
  }
};

double inverse_root(double one_minus_u2) {
  return one_minus_u2 > 0.0 ? 1.0 / std::sqrt(one_minus_u2) : 0.0;
}

/// Trapezoid sum of F (1 - sum chi) over the full grid, and over the even sub-grid.
std::pair<double, double> grid_part_full(const CovarianceKernel& kernel, const Ball& ball, int n,
                                         int threads) {
  const int d = kernel.frequencies().dim;
  const TrigField& field = kernel.field();
  const UniformTrigTable table(n, field.axis_degree(), 0.0);
  std::size_t lines = 1;
  for (int k = 1; k < d; ++k) lines *= static_cast<std::size_t>(n);
  std::vector<double> fine(lines, 0.0), coarse(lines, 0.0);

  parallel_for(lines, threads, [&](std::size_t line) {
    std::vector<double> base(d, 0.0), z(d), u(n);
    std::size_t rest = line;
    bool even_line = true;
    for (int k = 1; k < d; ++k) {
      const auto idx = static_cast<int>(rest % n);
      rest /= n;
      base[k] = static_cast<double>(idx) / n;
      even_line = even_line && idx % 2 == 0;
    }
    table.evaluate(field.restrict_to_line(0, base), u);
    double s = 0.0, s2 = 0.0;
    z = base;
    for (int i = 0; i < n; ++i) {
      z[0] = static_cast<double>(i) / n;
      const double w = ball.outside_weight(z);
      if (w <= 0.0) continue;
      const double F = inverse_root((1.0 - u[i]) * (1.0 + u[i]));
      s += w * F;
      if (even_line && i % 2 == 0) s2 += w * F;
    }
    fine[line] = s;
    coarse[line] = s2;
  });
  const double cells = std::pow(static_cast<double>(n), d);
  return {pairwise_sum(fine) / cells, pairwise_sum(coarse) * std::pow(2.0, d) / cells};
}

double factorial(int k) {
  double f = 1.0;
  for (int i = 2; i <= k; ++i) f *= i;
  return f;
}

/// Same sums over folded representatives a_1 >= ... >= a_d in [0, n/2] with W_d orbit weights.
std::pair<double, double> grid_part_symmetric(const CovarianceKernel& kernel, const Ball& ball, int n,
                                              int threads) {
  const int d = kernel.frequencies().dim;
  const int half = n / 2;
  std::vector<double> fine(half + 1, 0.0), coarse(half + 1, 0.0);
  parallel_for(static_cast<std::size_t>(half + 1), threads, [&](std::size_t top) {
    FieldEvaluator eval(kernel.field());
    std::vector<int> a(d);
    std::vector<double> z(d);
    double s = 0.0, s2 = 0.0;
    a[0] = static_cast<int>(top);
    // Enumerate a[1..d-1] non-increasing, bounded by a[0].
    std::function<void(int)> rec = [&](int pos) {
      if (pos == d) {
        double orbit = factorial(d);
        int run = 1;
        for (int k = 1; k <= d; ++k) {
          if (k < d && a[k] == a[k - 1]) {
            ++run;
          } else {
            orbit /= factorial(run);
            run = 1;
          }
        }
        bool even = true;
        for (int k = 0; k < d; ++k) {
          if (a[k] != 0 && a[k] != half) orbit *= 2.0;
          z[k] = static_cast<double>(a[k]) / n;
          even = even && a[k] % 2 == 0;
        }
        const double w = ball.outside_weight(z);
        if (w <= 0.0) return;
        const double u = eval.value(z);
        const double F = inverse_root((1.0 - u) * (1.0 + u));
        s += orbit * w * F;
        if (even) s2 += orbit * w * F;
        return;
      }
      for (int v = 0; v <= a[pos - 1]; ++v) {
        a[pos] = v;
        rec(pos + 1);
      }
    };
    rec(1);
    fine[top] = s;
    coarse[top] = s2;
  });
  const double cells = std::pow(static_cast<double>(n), d);
  return {pairwise_sum(fine) / cells, pairwise_sum(coarse) * std::pow(2.0, d) / cells};
}

/// int over |h| < rho of g(r) F(z0 + h) dh in polar coordinates, r^{d-1} F being smooth.
/// `split` integrates [0, rho/2] and [rho/2, rho] separately (for the cutoff).
template <class Radial>
double polar_integral(const CovarianceKernel& kernel, std::span<const double> z0, double rho,
                      int radial_nodes, int angular_nodes, bool split, Radial&& radial) {
  const int d = kernel.frequencies().dim;
  const GaussRule& gr = gauss_legendre(radial_nodes);
  std::vector<std::pair<double, double>> rnodes;  // (r, weight)
  auto add_interval = [&](double a, double b) {
    for (std::size_t i = 0; i < gr.size(); ++i)
      rnodes.emplace_back(0.5 * (a + b) + 0.5 * (b - a) * gr.nodes[i], 0.5 * (b - a) * gr.weights[i]);
  };
  if (split) {
    add_interval(0.0, 0.5 * rho);
    add_interval(0.5 * rho, rho);
  } else {
    add_interval(0.0, rho);
  }

  // Unit directions with weights summing to the sphere area.
  std::vector<std::pair<std::vector<double>, double>> dirs;
  if (d == 2) {
    for (int j = 0; j < angular_nodes; ++j) {
      const double t = kTwoPi * (j + 0.5) / angular_nodes;
      dirs.push_back({{std::cos(t), std::sin(t)}, kTwoPi / angular_nodes});
    }
  } else {
    const GaussRule& gm = gauss_legendre(angular_nodes / 2);
    for (std::size_t i = 0; i < gm.size(); ++i) {
      const double mu = gm.nodes[i];
      const double s = std::sqrt(1.0 - mu * mu);
      for (int j = 0; j < angular_nodes; ++j) {
        const double p = kTwoPi * (j + 0.5) / angular_nodes;
        dirs.push_back({{s * std::cos(p), s * std::sin(p), mu}, gm.weights[i] * kTwoPi / angular_nodes});
      }
    }
  }

  std::vector<double> z(d);
  double total = 0.0;
  for (const auto& [r, wr] : rnodes) {
    const double g = radial(r);
    if (g == 0.0) continue;
    double shell = 0.0;
    for (const auto& [dir, wd] : dirs) {
      for (int k = 0; k < d; ++k) z[k] = z0[k] + r * dir[k];
      const double q = kernel.one_minus_u_squared(z);
      if (!(q > 0.0)) continue;
      shell += wd * std::pow(r, d - 1) / std::sqrt(q);
    }
    total += wr * g * shell;
  }
  return total;
}

}  // namespace

Rational u_second_moment(const FrequencySet& freqs) {
  require_nonempty(freqs);
  return Rational(1, static_cast<long long>(freqs.multiplicity()));
}

Rational u_fourth_moment(const FrequencySet& freqs) {
  require_nonempty(freqs);
  BigInt n = static_cast<long long>(freqs.multiplicity());
  return Rational(four_tuple_count(freqs), n * n * n * n);
}

double grid_power_moment(const FrequencySet& freqs, int p, int grid, int threads) {
  require_nonempty(freqs);
  if (p < 0 || grid < 1) throw DomainError("invalid power or grid");
  const CovarianceKernel kernel(std::make_shared<const FrequencySet>(freqs));
  const int d = freqs.dim;
  const int n = grid;
  const UniformTrigTable table(n, kernel.field().axis_degree(), 0.0);
  std::size_t lines = 1;
  for (int k = 1; k < d; ++k) lines *= static_cast<std::size_t>(n);
  std::vector<double> sums(lines, 0.0);
  parallel_for(lines, resolve_thread_count(threads), [&](std::size_t line) {
    std::vector<double> base(d, 0.0), u(n);
    std::size_t rest = line;
    for (int k = 1; k < d; ++k) {
      base[k] = static_cast<double>(rest % n) / n;
      rest /= n;
    }
    table.evaluate(kernel.field().restrict_to_line(0, base), u);
    double s = 0.0;
    for (double v : u) s += std::pow(v, p);
    sums[line] = s;
  });
  return pairwise_sum(sums) / std::pow(static_cast<double>(n), d);
}

int minimum_quadrature_grid(std::int64_t energy) { return 4 * ceil_sqrt(energy); }

int default_quadrature_grid(std::int64_t energy) {
  int n = std::max(256, 16 * ceil_sqrt(energy));
  return n + (n % 2);
}

namespace {

std::vector<std::vector<double>> half_dual_points(const FrequencySet& freqs) {
  const HalfDualSet hd = half_dual_set(freqs);
  std::vector<std::vector<double>> pts;
  for (std::size_t i = 0; i < hd.size(); ++i) pts.push_back(hd.point(i));
  return pts;
}

double min_distance(const std::vector<std::vector<double>>& pts) {
  // A lone point is at distance 1 from its own translates.
  double best = 1.0;
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j) best = std::min(best, torus_distance(pts[i], pts[j]));
  return best;
}

}  // namespace

double default_excision_radius(const FrequencySet& freqs) {
  require_nonempty(freqs);
  return std::min(0.05, 0.25 * min_distance(half_dual_points(freqs)));
}

QuadratureResult second_moment_quadrature(const FrequencySet& freqs, const QuadratureOptions& options) {
  require_nonempty(freqs);
  const int d = freqs.dim;
  if (d != 2 && d != 3) throw DomainError("second-moment quadrature supports d = 2 and d = 3");
  if (!check_nondegeneracy(freqs)) throw PreconditionError("degenerate frequency set");
  if (!is_symmetric(freqs)) throw DomainError("frequency set is not W_d-symmetric");

  const std::int64_t energy = freqs.energy > 0 ? freqs.energy : freqs.max_energy;
  const auto pts = half_dual_points(freqs);
  const double dmin = min_distance(pts);

  QuadratureResult out;
  out.grid = options.grid > 0 ? options.grid : default_quadrature_grid(energy);
  out.rho = options.rho > 0.0 ? options.rho : std::min(0.05, 0.25 * dmin);
  out.half_dual_points = pts.size();
  out.min_half_dual_distance = dmin;
  out.symmetric = options.use_symmetry;

  if (out.rho >= 0.5 * dmin) {
    std::ostringstream os;
    os << "excision radius " << out.rho << " is not below half the minimal B distance " << dmin;
    throw GeometryError(os.str());
  }
  if (out.grid < minimum_quadrature_grid(energy))
    throw ResolutionError("quadrature grid " + std::to_string(out.grid) + " below 4 ceil(sqrt(E)) = " +
                          std::to_string(minimum_quadrature_grid(energy)));
  if (out.grid % 2 != 0) throw ResolutionError("quadrature grid must be even");
  if (out.grid * out.rho < 4.0)
    throw ResolutionError("excision radius spans fewer than 4 grid cells");

  const int threads = resolve_thread_count(options.threads);
  const CovarianceKernel kernel(std::make_shared<const FrequencySet>(freqs));
  const Ball ball{pts, out.rho};
  const auto [grid_fine, grid_coarse] = options.use_symmetry
                                            ? grid_part_symmetric(kernel, ball, out.grid, threads)
                                            : grid_part_full(kernel, ball, out.grid, threads);

  const double rho = out.rho;
  auto chi = [rho](double r) { return cutoff(r, rho); };
  auto one = [](double) { return 1.0; };
  const int angular = d == 2 ? 128 : 64;
  // The local model is only meaningful on balls of radius small against the
  // wavelength 1 / sqrt(E).
  const double local_radius = std::min(rho, kLocalModelScale / std::sqrt(static_cast<double>(energy)));
  double ball_fine = 0.0, ball_coarse = 0.0, ball_plain = 0.0;
  for (const auto& z0 : pts) {
    ball_fine += polar_integral(kernel, z0, rho, 48, angular, true, chi);
    ball_coarse += polar_integral(kernel, z0, rho, 24, angular / 2, true, chi);
    ball_plain += polar_integral(kernel, z0, local_radius, 48, angular, false, one);
  }

  const double c0 = kTwoPi * std::sqrt(static_cast<double>(energy) / d);
  const double model_per_ball =
      d == 2 ? kTwoPi * local_radius / c0 : kTwoPi * local_radius * local_radius / c0;
  out.grid_part = grid_fine / kTwoPi;
  out.ball_part = ball_fine / kTwoPi;
  out.value = out.grid_part + out.ball_part;
  out.refinement_error = std::abs((grid_fine + ball_fine) - (grid_coarse + ball_coarse)) / kTwoPi;
  out.local_model_mass = static_cast<double>(pts.size()) * model_per_ball / kTwoPi;
  out.local_model_error = std::abs(ball_plain / kTwoPi - out.local_model_mass);
  return out;
}

MomentReport variance_decomposition(const FrequencySet& freqs, const QuadratureOptions& options,
                                    double residual_constant) {
  MomentReport r;
  r.quadrature = second_moment_quadrature(freqs, options);
  r.dim = freqs.dim;
  r.energy = freqs.energy;
  r.multiplicity = freqs.multiplicity();
  r.u2 = u_second_moment(freqs);
  r.u4 = u_fourth_moment(freqs);
  const double N = static_cast<double>(r.multiplicity);
  r.second_moment = r.quadrature.value;
  r.expectation_sq = 1.0 / kTwoPi;
  r.predicted_correction = 1.0 / (4.0 * kPi * N);
  r.variance = r.second_moment - r.expectation_sq;
  r.var_times_4piN = r.variance * 4.0 * kPi * N;
  r.residual = r.variance - r.predicted_correction;
  r.residual_constant = residual_constant;
  r.residual_within_bound = std::abs(r.residual) <= residual_constant * r.u4.convert_to<double>();
  return r;
}

FourthMomentCheck fourth_moment_bound_check(const FrequencySet& freqs) {
  FourthMomentCheck c;
  c.dim = freqs.dim;
  c.energy = freqs.energy;
  c.multiplicity = freqs.multiplicity();
  c.u4 = u_fourth_moment(freqs);
  const BigInt N = static_cast<long long>(c.multiplicity);
  c.u4_times_N2 = c.u4 * Rational(N * N);
  const double e = static_cast<double>(freqs.energy > 0 ? freqs.energy : freqs.max_energy);
  c.ratio = c.u4_times_N2.convert_to<double>() / std::pow(e, 0.5 * (freqs.dim - 3));
  if (freqs.dim == 2) {
    c.asserted = true;
    c.holds = c.u4_times_N2 <= Rational(3);
    if (!c.holds) throw InvariantViolation("u4 N^2 exceeds 3 in d = 2");
  }
  return c;
}

std::vector<AsymptoticRow> asymptotic_table(const std::vector<std::int64_t>& energies, int dim,
                                            const QuadratureOptions& options) {
  std::vector<AsymptoticRow> rows;
  for (auto e : energies) {
    AsymptoticRow row;
    row.energy = e;
    const FrequencySet fs = enumerate_frequencies(dim, e);
    row.multiplicity = fs.multiplicity();
    if (fs.empty()) {
      row.note = "skipped: N = 0";
    } else if (!check_nondegeneracy(fs)) {
      row.note = "skipped: degenerate frequency set";
    } else {
      QuadratureOptions o = options;
      if (o.grid > 0 && o.grid < default_quadrature_grid(e)) o.grid = 0;
      row.report = variance_decomposition(fs, o);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

nlohmann::json to_json(const QuadratureResult& q) {
  return {{"value", q.value},
          {"grid", q.grid},
          {"rho", q.rho},
          {"refinement_error", q.refinement_error},
          {"grid_part", q.grid_part},
          {"ball_part", q.ball_part},
          {"local_model_mass", q.local_model_mass},
          {"local_model_error", q.local_model_error},
          {"half_dual_points", q.half_dual_points},
          {"min_half_dual_distance", q.min_half_dual_distance},
          {"symmetric", q.symmetric}};
}

nlohmann::json to_json(const MomentReport& r) {
  return {{"dim", r.dim},
          {"energy", r.energy},
          {"multiplicity", r.multiplicity},
          {"u2", to_string(r.u2)},
          {"u4", to_string(r.u4)},
          {"u2_value", r.u2.convert_to<double>()},
          {"u4_value", r.u4.convert_to<double>()},
          {"second_moment", r.second_moment},
          {"expectation_sq", r.expectation_sq},
          {"predicted_correction", r.predicted_correction},
          {"variance", r.variance},
          {"var_times_4piN", r.var_times_4piN},
          {"residual", r.residual},
          {"residual_constant", r.residual_constant},
          {"residual_within_bound", r.residual_within_bound},
          {"quadrature", to_json(r.quadrature)}};
}

nlohmann::json to_json(const FourthMomentCheck& c) {
  return {{"dim", c.dim},
          {"energy", c.energy},
          {"multiplicity", c.multiplicity},
          {"u4", to_string(c.u4)},
          {"u4_times_N2", to_string(c.u4_times_N2)},
          {"ratio", c.ratio},
          {"asserted", c.asserted},
          {"holds", c.holds}};
}

nlohmann::json to_json(const std::vector<AsymptoticRow>& rows) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& row : rows) {
    nlohmann::json j = {{"energy", row.energy}, {"multiplicity", row.multiplicity}};
    if (row.report) {
      j["variance"] = row.report->variance;
      j["var_times_4piN"] = row.report->var_times_4piN;
      j["u4"] = to_string(row.report->u4);
      j["residual"] = row.report->residual;
      j["second_moment"] = row.report->second_moment;
    } else {
      j["note"] = row.note;
    }
    out.push_back(std::move(j));
  }
  return out;
}

std::string csv_header_moments() { return "dim,energy,N,u2,u4,I,var,var_times_4piN,residual,grid,rho"; }

std::string to_csv_row(const MomentReport& r) {
  std::ostringstream os;
  os.precision(17);
  os << r.dim << ',' << r.energy << ',' << r.multiplicity << ',' << to_string(r.u2) << ','
     << to_string(r.u4) << ',' << r.second_moment << ',' << r.variance << ',' << r.var_times_4piN << ','
     << r.residual << ',' << r.quadrature.grid << ',' << r.quadrature.rho;
  return os.str();
}

}  // namespace nodal
