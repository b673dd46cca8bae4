#include "nodal/leray_measure.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "nodal/error.hpp"
#include "nodal/quadrature.hpp"

namespace nodal {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr int kPartitionPower = 4;  // w_j proportional to (d_j f)^4
constexpr int kBandNodes = 3;       // Gauss points per band interval
constexpr int kMaxSlabDepth = 4;    // transverse trisections
constexpr double kSlabTolerance = 1e-3;  // per unit transverse volume, in units of L

int ceil_sqrt(std::int64_t e) {
  auto r = isqrt(e);
  if (r * r < e) ++r;
  return static_cast<int>(r);
}

/// Root of g(t) = level in [a, b] given fa = g(a) - level, fb = g(b) - level of
/// opposite signs (or one zero). Newton steps kept inside the bracket, with
/// bisection as fallback.
double solve_bracketed(const TrigPoly1D& g, double level, double a, double b, double fa, double fb,
                       double guess = std::numeric_limits<double>::quiet_NaN()) {
  if (fa == 0.0) return a;
  if (fb == 0.0) return b;
  // Evaluation roundoff: below this |g - level| carries no information.
  double noise = std::abs(level);
  for (std::size_t m = 0; m < g.cos_coeff.size(); ++m) noise += std::abs(g.cos_coeff[m]) + std::abs(g.sin_coeff[m]);
  noise *= 4.0 * std::numeric_limits<double>::epsilon();
  double t = (guess > a && guess < b) ? guess : a + (b - a) * fa / (fa - fb);
  for (int iter = 0; iter < 60; ++iter) {
    if (b - a < 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(a))) break;
    double v = 0.0, d1 = 0.0, d2 = 0.0;
    g.jet(t, v, d1, d2);
    v -= level;
    if (std::abs(v) <= noise) return t;
    if ((v < 0.0) == (fa < 0.0)) {
      a = t;
      fa = v;
    } else {
      b = t;
      fb = v;
    }
    double next = (d1 != 0.0) ? t - v / d1 : 0.5 * (a + b);
    if (!(next > a && next < b)) next = 0.5 * (a + b);
    const double step = std::abs(next - t);
    t = next;
    if (step < 1e-14) break;
  }
  return t;
}

/// sum_m (2 pi m)^2 (|c_m| + |s_m|) >= max |g''|.
double second_derivative_bound(const TrigPoly1D& g) {
  double b = 0.0;
  for (std::size_t m = 0; m < g.cos_coeff.size(); ++m) {
    const double w = kTwoPi * static_cast<double>(m);
    b += w * w * (std::abs(g.cos_coeff[m]) + std::abs(g.sin_coeff[m]));
  }
  return b;
}

/// Visits each maximal piece of {|g| < eps} inside every cell [i/n, (i+1)/n].
/// gv, dv hold g and g' at the cell breakpoints.
template <class Fn>
void for_each_band_piece(const TrigPoly1D& g, const TrigPoly1D& dg, const double* gv,
                         const double* dv, int n, double eps, Fn&& visit) {
  const double h = 1.0 / n;
  const double curvature = second_derivative_bound(g);
  auto piece = [&](double a, double b, double ga, double gb) {
    const double lo = std::min(ga, gb);
    const double hi = std::max(ga, gb);
    if (hi <= -eps || lo >= eps) return;
    double p = a;
    double q = b;
    // The second end point is seeded from the first by a secant step of 2 eps.
    const double slope = (gb - ga) / (b - a);
    if (ga <= gb) {
      if (ga < -eps) p = solve_bracketed(g, -eps, a, b, ga + eps, gb + eps);
      if (gb > eps)
        q = solve_bracketed(g, eps, std::max(a, p), b, ga - eps, gb - eps,
                            ga < -eps ? p + 2.0 * eps / slope : std::numeric_limits<double>::quiet_NaN());
    } else {
      if (ga > eps) p = solve_bracketed(g, eps, a, b, ga - eps, gb - eps);
      if (gb < -eps)
        q = solve_bracketed(g, -eps, std::max(a, p), b, ga + eps, gb + eps,
                            ga > eps ? p - 2.0 * eps / slope : std::numeric_limits<double>::quiet_NaN());
    }
    if (q > p) visit(p, q);
  };

  for (int i = 0; i < n; ++i) {
    const int j = (i + 1 == n) ? 0 : i + 1;
    const double a = i * h;
    const double b = (i + 1) * h;
    const double ga = gv[i];
    const double gb = gv[j];
    const double da = dv[i];
    const double db = dv[j];
    // Far from the band and monotone: nothing to do.
    if ((da < 0.0) == (db < 0.0) && da != 0.0 && db != 0.0) {
      if ((ga >= eps && gb >= eps) || (ga <= -eps && gb <= -eps)) continue;
      piece(a, b, ga, gb);
      continue;
    }
    // One extremum inside the cell; skip it when g cannot reach the band.
    const double reach = std::max(std::abs(da), std::abs(db)) * h + 0.5 * curvature * h * h;
    if (std::min(ga, gb) - reach >= eps || std::max(ga, gb) + reach <= -eps) continue;
    double c;
    if (da == 0.0) c = a;
    else if (db == 0.0) c = b;
    else c = solve_bracketed(dg, 0.0, a, b, da, db);
    const double gc = g.value(c);
    piece(a, c, ga, gc);
    piece(c, b, gc, gb);
  }
}

void require_epsilon(double epsilon) {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw DomainError("epsilon must be positive");
}

double ipow(double x, int p) {
  double r = 1.0;
  for (int i = 0; i < p; ++i) r *= x;
  return r;
}

int effective_degree(const TrigPoly1D& g) {
  int m = g.degree();
  while (m > 0 && g.cos_coeff[m] == 0.0 && g.sin_coeff[m] == 0.0) --m;
  return m;
}

}  // namespace

std::string to_string(LerayMethod m) {
  return m == LerayMethod::epsilon_level ? "epsilon_level" : "surface_integral";
}

LerayMethod parse_leray_method(const std::string& s) {
  if (s == "epsilon_level" || s == "epsilon") return LerayMethod::epsilon_level;
  if (s == "surface_integral" || s == "surface") return LerayMethod::surface_integral;
  throw DomainError("unknown Leray method '" + s + "'");
}

int default_leray_grid(std::int64_t max_energy) {
  return std::max(128, 16 * ceil_sqrt(max_energy));
}

int minimum_epsilon_grid(std::int64_t max_energy) { return std::max(1, 8 * ceil_sqrt(max_energy)); }

std::vector<std::pair<double, double>> band_intervals(const TrigPoly1D& g, double epsilon, int cells) {
  require_epsilon(epsilon);
  const int m = std::max(1, g.degree());
  if (cells <= 0) cells = std::max(256, 16 * m);
  const TrigPoly1D dg = g.derivative();
  std::vector<double> gv(cells), dv(cells);
  for (int i = 0; i < cells; ++i) {
    double v, d1, d2;
    g.jet(static_cast<double>(i) / cells, v, d1, d2);
    gv[i] = v;
    dv[i] = d1;
  }
  std::vector<std::pair<double, double>> out;
  for_each_band_piece(g, dg, gv.data(), dv.data(), cells, epsilon, [&](double p, double q) {
    if (!out.empty() && out.back().second == p) out.back().second = q;
    else out.emplace_back(p, q);
  });
  return out;
}

double band_measure(const TrigPoly1D& g, double epsilon, int cells) {
  double total = 0.0;
  for (const auto& [p, q] : band_intervals(g, epsilon, cells)) total += q - p;
  return total;
}

namespace {

/// Line integrals of w_axis 1{|f| < eps} for one field and epsilon.
class BandSlicer {
 public:
  BandSlicer(const TrigField& f, double epsilon, int n)
      : f_(f), eps_(epsilon), n_(n), table_(n, f.axis_degree(), 0.0), gauss_(gauss_legendre(kBandNodes)),
        gv_(n), dv_(n), partials_(f.dim()) {}

  /// Integral along {base + t e_axis : t in [0, 1)}; base[axis] is ignored.
  double line(int axis, std::span<const double> base) {
    const int d = f_.dim();
    const TrigPoly1D g = f_.restrict_to_line(axis, base);
    const TrigPoly1D dg = g.derivative();
    table_.evaluate(g, gv_);
    table_.evaluate(dg, dv_);
    bool have_partials = false;
    double sum = 0.0;
    for_each_band_piece(g, dg, gv_.data(), dv_.data(), n_, eps_, [&](double p, double q) {
      if (!have_partials) {
        for (int k = 0; k < d; ++k)
          if (k != axis) partials_[k] = f_.restrict_partial_to_line(k, axis, base);
        have_partials = true;
      }
      const double half = 0.5 * (q - p);
      const double mid = 0.5 * (q + p);
      double s = 0.0;
      for (std::size_t r = 0; r < gauss_.size(); ++r) {
        const double t = mid + half * gauss_.nodes[r];
        double v, d1, d2;
        g.jet(t, v, d1, d2);
        double denom = 0.0;
        double own = 0.0;
        for (int k = 0; k < d; ++k) {
          const double gk = (k == axis) ? d1 : partials_[k].value(t);
          const double pk = ipow(gk, kPartitionPower);
          denom += pk;
          if (k == axis) own = pk;
        }
        double w;
        if (denom > 0.0 && std::isfinite(denom)) {
          w = own / denom;
        } else {
          w = 1.0 / d;
          ++degenerate_nodes;
        }
        s += gauss_.weights[r] * w;
      }
      sum += half * s;
    });
    ++lines;
    return sum;
  }

  std::size_t degenerate_nodes = 0;
  std::size_t lines = 0;

 private:
  const TrigField& f_;
  double eps_;
  int n_;
  UniformTrigTable table_;
  const GaussRule& gauss_;
  std::vector<double> gv_, dv_;
  std::vector<TrigPoly1D> partials_;
};

/// Transverse integration over one (d-1)-cube of side `width` whose centre
/// line integral is `centre_value`. The cube is trisected and the 3^(d-1)
/// midpoint sum compared with the single midpoint. For a smooth slice
/// function the difference is width^(d-1) sum_k D_k / 27, D_k being second
/// differences at the cube's spacing; where that prediction fails the band
/// has structure the lines miss (near critical points with small |f|) and
/// the sub-cubes are refined. Accepted cubes use the Richardson value
/// (9 fine - coarse) / 8.
double adaptive_slab(BandSlicer& slicer, int axis, const std::vector<double>& centre, double width,
                     double centre_value, const std::vector<double>& second_diff, int depth,
                     double tolerance, double& error) {
  const int d = static_cast<int>(centre.size());
  const int m = d - 1;
  int children = 1;
  for (int k = 0; k < m; ++k) children *= 3;
  const double child_width = width / 3.0;
  const double child_volume = std::pow(child_width, m);
  const double volume = std::pow(width, m);

  std::vector<double> values(children);
  std::vector<std::vector<double>> centres(children, centre);
  std::vector<int> digits(static_cast<std::size_t>(children) * m);
  for (int c = 0; c < children; ++c) {
    int code = c;
    bool is_centre = true;
    for (int k = 0, slot = 0; k < d; ++k) {
      if (k == axis) continue;
      const int offset = code % 3 - 1;
      code /= 3;
      digits[c * m + slot++] = offset;
      centres[c][k] = centre[k] + offset * child_width;
      is_centre = is_centre && offset == 0;
    }
    values[c] = is_centre ? centre_value : slicer.line(axis, centres[c]);
  }
  double fine = 0.0;
  for (double v : values) fine += v;
  fine *= child_volume;
  const double coarse = centre_value * volume;
  double predicted = 0.0;
  for (double dk : second_diff) predicted += dk;
  predicted *= volume / 27.0;
  const double residual = std::abs((fine - coarse) - predicted);
  if (residual <= tolerance * volume || depth >= kMaxSlabDepth) {
    error += residual;
    return depth >= kMaxSlabDepth ? fine : (9.0 * fine - coarse) / 8.0;
  }

  // Index of the child with the given digits.
  auto child_index = [&](const std::vector<int>& dig) {
    int c = 0;
    for (int slot = m - 1; slot >= 0; --slot) c = 3 * c + (dig[slot] + 1);
    return c;
  };
  double total = 0.0;
  std::vector<int> dig(m);
  std::vector<double> child_diff(m);
  for (int c = 0; c < children; ++c) {
    for (int slot = 0; slot < m; ++slot) dig[slot] = digits[c * m + slot];
    for (int slot = 0; slot < m; ++slot) {
      const int own = dig[slot];
      dig[slot] = -1;
      const double lo = values[child_index(dig)];
      dig[slot] = 0;
      const double mid = values[child_index(dig)];
      dig[slot] = 1;
      const double hi = values[child_index(dig)];
      dig[slot] = own;
      child_diff[slot] = lo - 2.0 * mid + hi;
    }
    total += adaptive_slab(slicer, axis, centres[c], child_width, values[c], child_diff, depth + 1,
                           tolerance, error);
  }
  return total;
}

}  // namespace

LerayEstimate leray_epsilon(const TrigField& f, double epsilon, int grid) {
  require_epsilon(epsilon);
  const int d = f.dim();
  const int minimum = minimum_epsilon_grid(f.max_energy());
  if (grid < minimum)
    throw ResolutionError("grid " + std::to_string(grid) + " below the minimum " +
                          std::to_string(minimum) + " = 8 ceil(sqrt(E_max))");
  const int n = grid;
  const int m = d - 1;
  BandSlicer slicer(f, epsilon, n);
  // In units of L for f of unit L^2 norm, so that (f, eps) -> (c f, c eps) is exact.
  double norm2 = 0.0;
  for (std::size_t j = 0; j < f.terms(); ++j)
    norm2 += 0.5 * (f.cos_coeff()[j] * f.cos_coeff()[j] + f.sin_coeff()[j] * f.sin_coeff()[j]);
  const double tolerance = kSlabTolerance * 2.0 * epsilon / std::max(std::sqrt(norm2), 1e-300);

  std::size_t lines_per_axis = 1;
  for (int k = 0; k < m; ++k) lines_per_axis *= static_cast<std::size_t>(n);
  std::vector<std::size_t> stride(m, 1);
  for (int k = 1; k < m; ++k) stride[k] = stride[k - 1] * n;

  std::vector<double> base_values(lines_per_axis);
  std::vector<double> centre(d);
  std::vector<double> second_diff(m);
  double total = 0.0;
  double error = 0.0;
  auto set_centre = [&](int axis, std::size_t line) {
    for (int k = 0, slot = 0; k < d; ++k) {
      if (k == axis) {
        centre[k] = 0.0;
        continue;
      }
      centre[k] = (static_cast<double>((line / stride[slot]) % n) + 0.5) / n;
      ++slot;
    }
  };
  for (int axis = 0; axis < d; ++axis) {
    for (std::size_t line = 0; line < lines_per_axis; ++line) {
      set_centre(axis, line);
      base_values[line] = slicer.line(axis, centre);
    }
    for (std::size_t line = 0; line < lines_per_axis; ++line) {
      const double v = base_values[line];
      bool active = v != 0.0;
      for (int slot = 0; slot < m; ++slot) {
        const std::size_t i = (line / stride[slot]) % n;
        const std::size_t up = line - i * stride[slot] + ((i + 1) % n) * stride[slot];
        const std::size_t down = line - i * stride[slot] + ((i + n - 1) % n) * stride[slot];
        second_diff[slot] = base_values[up] - 2.0 * v + base_values[down];
        active = active || base_values[up] != 0.0 || base_values[down] != 0.0;
      }
      if (!active) continue;
      set_centre(axis, line);
      total += adaptive_slab(slicer, axis, centre, 1.0 / n, v, second_diff, 0, tolerance, error);
    }
  }

  LerayEstimate est;
  est.method = LerayMethod::epsilon_level;
  est.epsilon = epsilon;
  est.grid = grid;
  est.value = total / (2.0 * epsilon);
  est.error_hint = error / (2.0 * epsilon);
  if (slicer.degenerate_nodes > 0)
    est.warnings.push_back(std::to_string(slicer.degenerate_nodes) +
                           " band nodes with vanishing gradient (equal partition used)");
  return est;
}

LerayEstimate leray_epsilon(const RandomEigenfunction& f, double epsilon, int grid) {
  return leray_epsilon(f.field(), epsilon, grid);
}

namespace {

struct Crossing {
  double t = 0.0;  // position along the edge (x for horizontal, y for vertical edges)
  double gx = 0.0;
  double gy = 0.0;
};

struct Point2 {
  double x, y, gx, gy;
};

constexpr int kMaxRefineDepth = 6;
constexpr double kGradientRefine = 0.5;  // refine if |grad f| < this * cell * H
constexpr double kNormalRefine = 0.9;    // refine if normals at segment ends turn more than ~25 deg

/// Root of f along an axis-parallel edge p(t) = base + t e_axis, t in [a, b].
Point2 solve_edge(FieldEvaluator& eval, double bx, double by, int axis, double a, double b,
                  double fa, double fb, double noise) {
  double x[2] = {bx, by};
  double g[2] = {0.0, 0.0};
  double t = (fa == fb) ? 0.5 * (a + b) : a + (b - a) * fa / (fa - fb);
  t = std::clamp(t, a, b);
  for (int iter = 0; iter < 60; ++iter) {
    x[axis] = t;
    const double v = eval.value_gradient(x, g);
    if (std::abs(v) <= noise) break;
    if ((v < 0.0) == (fa < 0.0)) {
      a = t;
      fa = v;
    } else {
      b = t;
      fb = v;
    }
    double next = (g[axis] != 0.0) ? t - v / g[axis] : 0.5 * (a + b);
    if (!(next >= a && next <= b)) next = 0.5 * (a + b);
    const double step = std::abs(next - t);
    t = next;
    if (step < 1e-14 || b - a < 1e-15) {
      x[axis] = t;
      eval.value_gradient(x, g);
      break;
    }
  }
  x[axis] = t;
  return {x[0], x[1], g[0], g[1]};
}

class SurfaceAccumulator {
 public:
  SurfaceAccumulator(const TrigField& f, double nudge)
      : eval_(f), scale_(f.max_abs_coeff()), nudge_(nudge) {
    for (std::size_t j = 0; j < f.terms(); ++j)
      noise_ += std::abs(f.cos_coeff()[j]) + std::abs(f.sin_coeff()[j]);
    noise_ *= 8.0 * std::numeric_limits<double>::epsilon();
    double h2 = 0.0;
    for (std::size_t j = 0; j < f.terms(); ++j) {
      double l2 = 0.0;
      for (auto c : f.frequencies()[j]) l2 += static_cast<double>(c * c);
      const double amp2 = f.cos_coeff()[j] * f.cos_coeff()[j] + f.sin_coeff()[j] * f.sin_coeff()[j];
      h2 += l2 * l2 * amp2;
    }
    hessian_scale_ = kTwoPi * kTwoPi * std::sqrt(h2);
    for (std::size_t j = 0; j < f.terms(); ++j) {
      const double amp = kTwoPi * kTwoPi * std::hypot(f.cos_coeff()[j], f.sin_coeff()[j]);
      const auto& lambda = f.frequencies()[j];
      curvature_[0] += amp * static_cast<double>(lambda[0] * lambda[0]);
      curvature_[1] += amp * static_cast<double>(lambda[1] * lambda[1]);
    }
  }

  /// Whether a cell whose corners share one sign can still meet the contour.
  /// With H_k bounding |d_k^2 f|, f exceeds its bilinear interpolant minus
  /// H_x x (s - x) / 2 + H_y y (s - y) / 2; the test is that this quadratic
  /// lower bound reaches zero somewhere on the cell.
  [[nodiscard]] bool may_hide_contour(double s, const double v[4]) const {
    const double sign = v[0] > 0.0 ? 1.0 : -1.0;
    const double a = sign * v[0], b = sign * v[1], c = sign * v[2], d = sign * v[3];
    if (std::min({a, b, c, d}) > 0.125 * (curvature_[0] + curvature_[1]) * s * s) return false;
    if (edge_may_vanish(a, b, curvature_[0], s) || edge_may_vanish(d, c, curvature_[0], s) ||
        edge_may_vanish(a, d, curvature_[1], s) || edge_may_vanish(b, c, curvature_[1], s))
      return true;
    // Interior critical point of Q(x, y) = a + c1 x + c2 y + c3 x y - Hx x (s - x)/2 - Hy y (s - y)/2.
    const double kx = curvature_[0], ky = curvature_[1];
    const double c1 = (b - a) / s, c2 = (d - a) / s, c3 = (a - b + c - d) / (s * s);
    const double det = kx * ky - c3 * c3;
    if (det == 0.0) return false;
    const double rx = 0.5 * kx * s - c1, ry = 0.5 * ky * s - c2;
    const double x = (ky * rx - c3 * ry) / det;
    const double y = (kx * ry - c3 * rx) / det;
    if (!(x > 0.0 && x < s && y > 0.0 && y < s)) return false;
    return a + c1 * x + c2 * y + c3 * x * y - 0.5 * kx * x * (s - x) - 0.5 * ky * y * (s - y) <= 0.0;
  }

  /// Whether f can vanish on an edge of length s whose end values a, b > 0,
  /// given |f''| <= k along it: min of a + (b - a) t / s - k t (s - t) / 2.
  static bool edge_may_vanish(double a, double b, double k, double s) {
    if (std::min(a, b) <= 0.0) return true;
    if (k <= 0.0) return false;
    const double t = 0.5 * s - (b - a) / (k * s);
    if (!(t > 0.0 && t < s)) return false;
    return a + (b - a) * t / s - 0.5 * k * t * (s - t) <= 0.0;
  }

  /// Cell [x0, x0 + s] x [y0, y0 + s] with corner values v (counter-clockwise from
  /// (x0, y0)) and the crossings on its edges (bottom, right, top, left).
  void cell(double x0, double y0, double s, const double v[4], const Point2 edge[4],
            const bool crossed[4], int depth) {
    const int count = crossed[0] + crossed[1] + crossed[2] + crossed[3];
    // An uncrossed edge may still be cut twice.
    bool hidden = count == 0 && may_hide_contour(s, v);
    for (int e = 0; e < 4 && !hidden && depth < kMaxRefineDepth; ++e) {
      if (crossed[e]) continue;
      const double sign = v[e] > 0.0 ? 1.0 : -1.0;
      hidden = edge_may_vanish(sign * v[e], sign * v[(e + 1) % 4], curvature_[e % 2], s);
    }
    if (hidden && depth < kMaxRefineDepth) {
      subdivide(x0, y0, s, v, depth);
      return;
    }
    if (count != 2 && count != 4) return;

    int pairs[2][2];
    int segments = 1;
    if (count == 2) {
      int a = -1, b = -1;
      for (int e = 0; e < 4; ++e)
        if (crossed[e]) (a < 0 ? a : b) = e;
      pairs[0][0] = a;
      pairs[0][1] = b;
    } else {
      segments = 2;
      if (depth >= kMaxRefineDepth) {
        ++saddles_;
        const double centre[2] = {x0 + 0.5 * s, y0 + 0.5 * s};
        const bool sc = eval_.value(centre) > 0.0;
        if (sc == (v[0] > 0.0)) {
          pairs[0][0] = 0, pairs[0][1] = 1, pairs[1][0] = 2, pairs[1][1] = 3;
        } else {
          pairs[0][0] = 3, pairs[0][1] = 0, pairs[1][0] = 1, pairs[1][1] = 2;
        }
      }
    }

    bool refine = depth < kMaxRefineDepth && count == 4;
    if (!refine && depth < kMaxRefineDepth) {
      const double threshold = kGradientRefine * s * hessian_scale_;
      for (int k = 0; k < segments && !refine; ++k) {
        const Point2& P = edge[pairs[k][0]];
        const Point2& Q = edge[pairs[k][1]];
        const double gp = std::hypot(P.gx, P.gy);
        const double gq = std::hypot(Q.gx, Q.gy);
        if (std::min(gp, gq) < threshold) refine = true;
        else if ((P.gx * Q.gx + P.gy * Q.gy) < kNormalRefine * gp * gq) refine = true;
      }
    }
    if (refine) {
      subdivide(x0, y0, s, v, depth);
      return;
    }
    for (int k = 0; k < segments; ++k) segment(edge[pairs[k][0]], edge[pairs[k][1]]);
  }

  double refined = 0.0;
  double plain = 0.0;
  std::size_t near_singular = 0;
  std::size_t refined_cells = 0;
  [[nodiscard]] std::size_t saddles() const noexcept { return saddles_; }

 private:
  double value_at(double x, double y) {
    const double p[2] = {x, y};
    double v = eval_.value(p);
    if (std::abs(v) < nudge_) v = nudge_;
    return v;
  }

  void subdivide(double x0, double y0, double s, const double v[4], int depth) {
    ++refined_cells;
    const double h = 0.5 * s;
    // 3 x 3 lattice of values, row-major from (x0, y0).
    double w[3][3];
    w[0][0] = v[0];
    w[0][2] = v[1];
    w[2][2] = v[2];
    w[2][0] = v[3];
    w[0][1] = value_at(x0 + h, y0);
    w[1][0] = value_at(x0, y0 + h);
    w[1][1] = value_at(x0 + h, y0 + h);
    w[1][2] = value_at(x0 + s, y0 + h);
    w[2][1] = value_at(x0 + h, y0 + s);
    for (int r = 0; r < 2; ++r) {
      for (int c = 0; c < 2; ++c) {
        const double cx = x0 + c * h;
        const double cy = y0 + r * h;
        const double cv[4] = {w[r][c], w[r][c + 1], w[r + 1][c + 1], w[r + 1][c]};
        Point2 e[4];
        bool crossed[4];
        auto horizontal = [&](int slot, double y, double va, double vb) {
          crossed[slot] = (va > 0.0) != (vb > 0.0);
          if (crossed[slot]) e[slot] = solve_edge(eval_, cx, y, 0, cx, cx + h, va, vb, noise_);
        };
        auto vertical = [&](int slot, double x, double va, double vb) {
          crossed[slot] = (va > 0.0) != (vb > 0.0);
          if (crossed[slot]) e[slot] = solve_edge(eval_, x, cy, 1, cy, cy + h, va, vb, noise_);
        };
        horizontal(0, cy, cv[0], cv[1]);
        vertical(1, cx + h, cv[1], cv[2]);
        horizontal(2, cy + h, cv[3], cv[2]);
        vertical(3, cx, cv[0], cv[3]);
        cell(cx, cy, h, cv, e, crossed, depth + 1);
      }
    }
  }

  double weight(double gx, double gy) {
    const double g = std::hypot(gx, gy);
    if (g < 1e-8) ++near_singular;
    return 1.0 / std::max(g, std::numeric_limits<double>::min());
  }

  /// Angle from the chord direction c to the contour tangent at a point with gradient g.
  static double tangent_angle(double gx, double gy, double cx, double cy) {
    double tx = gy, ty = -gx;
    if (tx * cx + ty * cy < 0.0) tx = -tx, ty = -ty;
    return std::atan2(cx * ty - cy * tx, cx * tx + cy * ty);
  }

  void segment(const Point2& P, const Point2& Q) {
    const double L1 = std::hypot(Q.x - P.x, Q.y - P.y);
    if (L1 == 0.0) return;
    const double wP = weight(P.gx, P.gy);
    const double wQ = weight(Q.gx, Q.gy);
    plain += 0.5 * L1 * (wP + wQ);

    // Start from the circular-arc sagitta implied by the end tangents, then Newton onto f = 0.
    const double cx = (Q.x - P.x) / L1;
    const double cy = (Q.y - P.y) / L1;
    const double turn = tangent_angle(P.gx, P.gy, cx, cy) - tangent_angle(Q.gx, Q.gy, cx, cy);
    const double offset = 0.125 * L1 * std::clamp(turn, -1.0, 1.0);
    double x[2] = {0.5 * (P.x + Q.x) - cy * offset, 0.5 * (P.y + Q.y) + cx * offset};
    double g[2];
    double v = eval_.value_gradient(x, g);
    for (int iter = 0; iter < 4; ++iter) {
      const double g2 = g[0] * g[0] + g[1] * g[1];
      if (g2 == 0.0) break;
      const double moved = std::abs(v) / std::sqrt(g2);
      x[0] -= v * g[0] / g2;
      x[1] -= v * g[1] / g2;
      v = eval_.value_gradient(x, g);
      if (moved <= 1e-3 * L1) break;
    }
    const double L2 = std::hypot(x[0] - P.x, x[1] - P.y) + std::hypot(Q.x - x[0], Q.y - x[1]);
    const double arc = (4.0 * L2 - L1) / 3.0;
    refined += arc * (wP + 4.0 * weight(g[0], g[1]) + wQ) / 6.0;
  }

  FieldEvaluator eval_;
  double scale_;
  double nudge_;
  double hessian_scale_ = 0.0;
  double curvature_[2] = {0.0, 0.0};
  double noise_ = 0.0;  // roundoff level of f
  std::size_t saddles_ = 0;
};

/// Like solve_bracketed, also returning g'(root).
double solve_line_root(const TrigPoly1D& g, double a, double b, double fa, double fb, double& slope) {
  double t = (fa == fb) ? 0.5 * (a + b) : a + (b - a) * fa / (fa - fb);
  t = std::clamp(t, a, b);
  slope = 0.0;
  for (int iter = 0; iter < 60; ++iter) {
    double v, d1, d2;
    g.jet(t, v, d1, d2);
    slope = d1;
    if (v == 0.0) return t;
    if ((v < 0.0) == (fa < 0.0)) {
      a = t;
      fa = v;
    } else {
      b = t;
      fb = v;
    }
    double next = (d1 != 0.0) ? t - v / d1 : 0.5 * (a + b);
    if (!(next >= a && next <= b)) next = 0.5 * (a + b);
    const double step = std::abs(next - t);
    t = next;
    if (step < 1e-14 || b - a < 1e-15) break;
  }
  return t;
}

}  // namespace

LerayEstimate leray_surface_2d(const TrigField& f, int grid) {
  if (f.dim() != 2) throw DomainError("surface estimator requires d = 2");
  const int n = grid;
  const int degree = f.axis_degree();
  if (n < std::max(8, 4 * degree))
    throw ResolutionError("grid " + std::to_string(grid) + " below 4 points per axis degree");

  const double h = 1.0 / n;
  const UniformTrigTable table(n, degree, 0.0);
  std::vector<TrigPoly1D> rows(n), rows_dy(n), cols(n), cols_dx(n);
  std::vector<double> values(static_cast<std::size_t>(n) * n);
  {
    std::vector<double> line(n);
    for (int k = 0; k < n; ++k) {
      const double base[2] = {0.0, k * h};
      rows[k] = f.restrict_to_line(0, base);
      rows_dy[k] = f.restrict_partial_to_line(1, 0, base);
      table.evaluate(rows[k], line);
      std::copy(line.begin(), line.end(), values.begin() + static_cast<std::ptrdiff_t>(k) * n);
    }
    for (int i = 0; i < n; ++i) {
      const double base[2] = {i * h, 0.0};
      cols[i] = f.restrict_to_line(1, base);
      cols_dx[i] = f.restrict_partial_to_line(0, 1, base);
    }
  }

  const double nudge = 1e-12 * std::max(f.max_abs_coeff(), std::numeric_limits<double>::min());
  std::size_t nudged = 0;
  for (auto& v : values) {
    if (std::abs(v) < nudge) {
      v = nudge;
      ++nudged;
    }
  }
  auto V = [&](int i, int k) { return values[static_cast<std::size_t>(k) * n + i]; };

  // Crossings on horizontal edges (i,k)-(i+1,k) and vertical edges (i,k)-(i,k+1),
  // stored compactly with an index per edge (-1 when the edge is not crossed).
  std::vector<Crossing> crossings;
  crossings.reserve(static_cast<std::size_t>(8) * n * std::max(1, degree));
  std::vector<std::int32_t> hx(values.size(), -1), vy(values.size(), -1);
  for (int k = 0; k < n; ++k) {
    const int kp = (k + 1 == n) ? 0 : k + 1;
    for (int i = 0; i < n; ++i) {
      const int ip = (i + 1 == n) ? 0 : i + 1;
      const double v0 = V(i, k);
      if ((v0 > 0.0) != (V(ip, k) > 0.0)) {
        double slope;
        const double t = solve_line_root(rows[k], i * h, (i + 1) * h, v0, V(ip, k), slope);
        hx[static_cast<std::size_t>(k) * n + i] = static_cast<std::int32_t>(crossings.size());
        crossings.push_back({t, slope, rows_dy[k].value(t)});
      }
      if ((v0 > 0.0) != (V(i, kp) > 0.0)) {
        double slope;
        const double s = solve_line_root(cols[i], k * h, (k + 1) * h, v0, V(i, kp), slope);
        vy[static_cast<std::size_t>(i) * n + k] = static_cast<std::int32_t>(crossings.size());
        crossings.push_back({s, cols_dx[i].value(s), slope});
      }
    }
  }

  SurfaceAccumulator acc(f, nudge);
  for (int k = 0; k < n; ++k) {
    const int kp = (k + 1 == n) ? 0 : k + 1;
    for (int i = 0; i < n; ++i) {
      const int ip = (i + 1 == n) ? 0 : i + 1;
      const double v[4] = {V(i, k), V(ip, k), V(ip, kp), V(i, kp)};
      const bool s0 = v[0] > 0.0;
      if (s0 == (v[1] > 0.0) && s0 == (v[2] > 0.0) && s0 == (v[3] > 0.0) && !acc.may_hide_contour(h, v))
        continue;

      Point2 edge[4];
      bool crossed[4] = {false, false, false, false};
      auto take_h = [&](int slot, int row, double y) {
        const auto e = hx[static_cast<std::size_t>(row) * n + i];
        if (e < 0) return;
        const Crossing& c = crossings[e];
        edge[slot] = {c.t, y, c.gx, c.gy};
        crossed[slot] = true;
      };
      auto take_v = [&](int slot, int col, double x) {
        const auto e = vy[static_cast<std::size_t>(col) * n + k];
        if (e < 0) return;
        const Crossing& c = crossings[e];
        edge[slot] = {x, c.t, c.gx, c.gy};
        crossed[slot] = true;
      };
      take_h(0, k, k * h);         // bottom
      take_v(1, ip, (i + 1) * h);  // right
      take_h(2, kp, (k + 1) * h);  // top
      take_v(3, i, i * h);         // left
      acc.cell(i * h, k * h, h, v, edge, crossed, 0);
    }
  }

  LerayEstimate est;
  est.method = LerayMethod::surface_integral;
  est.epsilon = 0.0;
  est.grid = grid;
  est.value = acc.refined;
  est.error_hint = std::abs(acc.refined - acc.plain);
  if (nudged > 0) est.warnings.push_back(std::to_string(nudged) + " grid vertices nudged off zero");
  if (acc.near_singular > 0)
    est.warnings.push_back("near-singular: |grad f| < 1e-8 at " + std::to_string(acc.near_singular) +
                           " contour points");
  if (acc.saddles() > 0)
    est.warnings.push_back(std::to_string(acc.saddles()) + " saddle cells split by centre sign");
  return est;
}

LerayEstimate leray_surface_2d(const RandomEigenfunction& f, int grid) {
  return leray_surface_2d(f.field(), grid);
}

KacReport kac_bound(const TrigPoly1D& g, double alpha, double beta, int check_grid) {
  if (!(alpha > 0.0) || !(beta > 0.0)) throw DomainError("alpha and beta must be positive");
  const int m = effective_degree(g);
  if (m == 0) throw DomainError("Kac bound needs a polynomial of degree >= 1");
  if (check_grid <= 0) check_grid = std::max(4097, 64 * m + 1);

  const TrigPoly1D dg = g.derivative();
  for (int i = 0; i < check_grid; ++i) {
    const double t = static_cast<double>(i) / check_grid;
    double v, d1, d2;
    g.jet(t, v, d1, d2);
    if (std::abs(v) < alpha && !(std::abs(d1) > beta)) {
      std::ostringstream os;
      os << "hypothesis |g| < " << alpha << " => |g'| > " << beta << " fails at t = " << t;
      throw HypothesisError(os.str());
    }
  }

  KacReport r;
  r.degree = m;
  r.check_grid = check_grid;
  r.bound = 2.0 * m / beta;
  std::vector<double> schedule;
  for (int k = 1; k < 64; ++k) schedule.push_back(alpha * k / 64.0);
  for (int j = 2; j <= 6; ++j) schedule.push_back(alpha * std::pow(10.0, -j));
  schedule.push_back(alpha * (1.0 - 1e-9));
  for (double eps : schedule) {
    const double v = band_measure(g, eps, check_grid) / (2.0 * eps);
    if (v > r.empirical_sup) {
      r.empirical_sup = v;
      r.sup_epsilon = eps;
    }
  }
  return r;
}

namespace {

template <class Fn>
void for_each_vertex(int dim, int n, Fn&& fn) {
  std::vector<int> idx(dim, 0);
  std::vector<double> x(dim, 0.0);
  std::size_t total = 1;
  for (int k = 0; k < dim; ++k) total *= static_cast<std::size_t>(n);
  for (std::size_t p = 0; p < total; ++p) {
    for (int k = 0; k < dim; ++k) x[k] = static_cast<double>(idx[k]) / n;
    fn(std::span<const double>(x));
    for (int k = 0; k < dim; ++k) {
      if (++idx[k] < n) break;
      idx[k] = 0;
    }
  }
}

}  // namespace

EnsembleBoundReport ensemble_bound(const TrigField& f, double alpha, double beta,
                                   std::vector<double> epsilons, int check_grid, int leray_grid) {
  if (!(alpha > 0.0) || !(beta > 0.0)) throw DomainError("alpha and beta must be positive");
  const int d = f.dim();
  if (check_grid <= 0) check_grid = default_leray_grid(f.max_energy());
  if (leray_grid <= 0) leray_grid = default_leray_grid(f.max_energy());

  FieldEvaluator eval(f);
  std::vector<double> grad(d);
  for_each_vertex(d, check_grid, [&](std::span<const double> x) {
    const double v = eval.value_gradient(x, grad);
    if (std::abs(v) > alpha) return;
    double g2 = 0.0;
    for (double gk : grad) g2 += gk * gk;
    if (!(std::sqrt(g2) > beta)) {
      std::ostringstream os;
      os << "f is not in E(" << alpha << ", " << beta << "): |f| = " << std::abs(v)
         << ", |grad f| = " << std::sqrt(g2) << " on the check grid";
      throw HypothesisError(os.str());
    }
  });

  EnsembleBoundReport r;
  r.check_grid = check_grid;
  r.bound = std::pow(static_cast<double>(d), 1.5) * 2.0 *
            std::sqrt(static_cast<double>(f.max_energy())) / beta;
  if (epsilons.empty()) epsilons = {alpha / 2, alpha / 10, 1e-2, 1e-3, 1e-4};
  std::sort(epsilons.begin(), epsilons.end(), std::greater<>());
  epsilons.erase(std::unique(epsilons.begin(), epsilons.end()), epsilons.end());
  for (double eps : epsilons) {
    if (!(eps > 0.0 && eps < alpha)) continue;
    const double v = leray_epsilon(f, eps, leray_grid).value;
    r.values.emplace_back(eps, v);
    r.all_below = r.all_below && v <= r.bound;
  }
  return r;
}

std::pair<double, double> fit_regularity(const TrigField& f, double alpha, int check_grid) {
  if (!(alpha > 0.0)) throw DomainError("alpha must be positive");
  const int d = f.dim();
  if (check_grid <= 0) check_grid = default_leray_grid(f.max_energy());
  FieldEvaluator eval(f);
  std::vector<double> grad(d);
  double min_grad = std::numeric_limits<double>::infinity();
  for_each_vertex(d, check_grid, [&](std::span<const double> x) {
    const double v = eval.value_gradient(x, grad);
    if (std::abs(v) > alpha) return;
    double g2 = 0.0;
    for (double gk : grad) g2 += gk * gk;
    min_grad = std::min(min_grad, std::sqrt(g2));
  });
  if (!std::isfinite(min_grad)) return {alpha, 1.0};
  if (!(min_grad > 0.0)) throw HypothesisError("vanishing gradient inside the alpha band");
  return {alpha, 0.5 * min_grad};
}

ConvergenceReport epsilon_convergence(const TrigField& f, const std::vector<double>& schedule,
                                      int grid) {
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    require_epsilon(schedule[i]);
    if (i > 0 && !(schedule[i] < schedule[i - 1]))
      throw DomainError("epsilon schedule must be strictly decreasing");
  }
  ConvergenceReport r;
  r.grid = grid;
  for (double eps : schedule) r.values.emplace_back(eps, leray_epsilon(f, eps, grid).value);
  const std::size_t n = r.values.size();
  if (n >= 2) r.last_difference = std::abs(r.values[n - 1].second - r.values[n - 2].second);
  if (n >= 3) r.previous_difference = std::abs(r.values[n - 2].second - r.values[n - 3].second);
  return r;
}

nlohmann::json to_json(const LerayEstimate& e) {
  return {{"value", e.value},       {"method", to_string(e.method)}, {"epsilon", e.epsilon},
          {"grid", e.grid},         {"error_hint", e.error_hint},   {"warnings", e.warnings}};
}

std::string csv_header_leray() { return "method,epsilon,grid,value,error_hint"; }

std::string to_csv_row(const LerayEstimate& e) {
  std::ostringstream os;
  os.precision(17);
  os << to_string(e.method) << ',' << e.epsilon << ',' << e.grid << ',' << e.value << ','
     << e.error_hint;
  return os.str();
}

nlohmann::json to_json(const KacReport& r) {
  return {{"bound", r.bound},
          {"empirical_sup", r.empirical_sup},
          {"sup_epsilon", r.sup_epsilon},
          {"degree", r.degree},
          {"check_grid", r.check_grid}};
}

nlohmann::json to_json(const EnsembleBoundReport& r) {
  nlohmann::json values = nlohmann::json::array();
  for (const auto& [eps, v] : r.values) values.push_back({{"epsilon", eps}, {"value", v}});
  return {{"bound", r.bound}, {"values", values}, {"all_below", r.all_below}, {"check_grid", r.check_grid}};
}

nlohmann::json to_json(const ConvergenceReport& r) {
  nlohmann::json values = nlohmann::json::array();
  for (const auto& [eps, v] : r.values) values.push_back({{"epsilon", eps}, {"value", v}});
  nlohmann::json out = {{"grid", r.grid}, {"values", values}};
  out["last_difference"] = r.last_difference ? nlohmann::json(*r.last_difference) : nlohmann::json();
  out["previous_difference"] =
      r.previous_difference ? nlohmann::json(*r.previous_difference) : nlohmann::json();
  return out;
}

}  // namespace nodal
