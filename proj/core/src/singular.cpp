#include "nodal/singular.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "nodal/ensemble.hpp"
#include "nodal/error.hpp"
#include "nodal/moments.hpp"
#include "nodal/parallel.hpp"
#include "nodal/quadrature.hpp"
#include "nodal/rng.hpp"

namespace nodal {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * kPi;

std::int64_t energy_of(const FrequencySet& freqs) {
  return freqs.energy > 0 ? freqs.energy : freqs.max_energy;
}

double cos_phase(const IntVector& lambda, std::span<const double> x) {
  double s = 0.0;
  for (std::size_t k = 0; k < lambda.size(); ++k) s += static_cast<double>(lambda[k]) * x[k];
  s -= std::round(s);
  return std::cos(kTwoPi * s);
}

/// Per-rep failure budget: cls needs fewer than R / (4d) failing reps.
bool within_budget(std::int64_t fails, std::size_t reps, int d) {
  return fails * 4 * d < static_cast<std::int64_t>(reps);
}

PointClass classify_cosines(std::span<const double> cosines, int d, double t) {
  std::int64_t fail_pos = 0, fail_neg = 0;
  for (double c : cosines) {
    if (!(c > t)) ++fail_pos;
    if (!(c < -t)) ++fail_neg;
  }
  if (within_budget(fail_pos, cosines.size(), d)) return PointClass::positive;
  if (within_budget(fail_neg, cosines.size(), d)) return PointClass::negative;
  return PointClass::regular;
}

/// Per-axis tables of e^{2 pi i m t} for the probe coordinates of one axis.
struct AxisTable {
  int degree = 0;
  std::vector<double> re, im;  // [i * (degree + 1) + m]

  AxisTable(std::span<const double> coords, int deg) : degree(deg) {
    re.resize(coords.size() * (deg + 1));
    im.resize(re.size());
    for (std::size_t i = 0; i < coords.size(); ++i)
      for (int m = 0; m <= deg; ++m) {
        double a = m * coords[i];
        a -= std::round(a);
        re[i * (deg + 1) + m] = std::cos(kTwoPi * a);
        im[i * (deg + 1) + m] = std::sin(kTwoPi * a);
      }
  }
};

}  // namespace

std::string to_string(PointClass c) {
  switch (c) {
    case PointClass::positive: return "positive";
    case PointClass::negative: return "negative";
    case PointClass::regular: break;
  }
  return "regular";
}

double cosine_density(const FrequencySet& freqs, std::span<const double> x, double t, int sign) {
  if (freqs.empty()) throw EmptyEnsembleError("empty frequency set (N = 0)");
  std::int64_t hits = 0;
  for (const auto& r : freqs.representatives) {
    const double c = cos_phase(r, x);
    if (sign >= 0 ? c > t : c < -t) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(freqs.representatives.size());
}

PointClass classify_point(const FrequencySet& freqs, std::span<const double> x) {
  if (freqs.empty()) throw EmptyEnsembleError("empty frequency set (N = 0)");
  std::vector<double> c;
  c.reserve(freqs.representatives.size());
  for (const auto& r : freqs.representatives) c.push_back(cos_phase(r, x));
  return classify_cosines(c, freqs.dim, 0.75);
}

bool certificate_holds(const FrequencySet& freqs, std::span<const double> x, int sign) {
  if (freqs.empty()) throw EmptyEnsembleError("empty frequency set (N = 0)");
  std::vector<double> c;
  for (const auto& r : freqs.representatives) c.push_back(cos_phase(r, x));
  const PointClass cls = classify_cosines(c, freqs.dim, 0.5);
  return sign >= 0 ? cls == PointClass::positive : cls == PointClass::negative;
}

int default_cube_count(const FrequencySet& freqs) {
  const double e = static_cast<double>(energy_of(freqs));
  return std::max(1, static_cast<int>(std::floor(16.0 * kPi * std::sqrt(freqs.dim * e))));
}

std::int64_t SingularDecomposition::cube_of(std::span<const double> x) const {
  std::int64_t idx = 0, stride = 1;
  for (int k = 0; k < dim; ++k) {
    const double t = x[k] - std::floor(x[k]);
    const int c = std::min(M - 1, static_cast<int>(t * M));
    idx += c * stride;
    stride *= M;
  }
  return idx;
}

SingularDecomposition classify_cubes(const FrequencySet& freqs, int M, int probes, int threads) {
  if (freqs.empty()) throw EmptyEnsembleError("empty frequency set (N = 0)");
  if (M == 0) M = default_cube_count(freqs);
  if (M < 1) throw DomainError("cube count M must be >= 1");
  if (probes < 1) throw DomainError("probes must be >= 1");
  const int d = freqs.dim;
  double total = 1.0;
  for (int k = 0; k < d; ++k) total *= M;
  if (total > static_cast<double>(1LL << 28)) throw CapacityError("M^d exceeds 2^28 cubes");

  SingularDecomposition out;
  out.dim = d;
  out.M = M;
  out.probes = probes;
  const bool extra_centre = probes % 2 == 0;
  // Probe coordinates along an axis, per cube: probes lattice points then (if even) the centre.
  const int per_axis = probes + (extra_centre ? 1 : 0);
  std::vector<double> coords(static_cast<std::size_t>(M) * per_axis);
  for (int c = 0; c < M; ++c) {
    for (int p = 0; p < probes; ++p) coords[c * per_axis + p] = (c + (p + 0.5) / probes) / M;
    if (extra_centre) coords[c * per_axis + probes] = (c + 0.5) / M;
  }
  std::int64_t ppc = 1;
  for (int k = 0; k < d; ++k) ppc *= probes;
  out.probes_per_cube = ppc + (extra_centre ? 1 : 0);

  int degree = 0;
  for (const auto& r : freqs.representatives)
    for (auto v : r) degree = std::max<int>(degree, static_cast<int>(std::abs(v)));
  const AxisTable table(coords, degree);
  const std::size_t R = freqs.representatives.size();
  std::vector<int> lam(R * d);
  for (std::size_t j = 0; j < R; ++j)
    for (int k = 0; k < d; ++k) lam[j * d + k] = static_cast<int>(freqs.representatives[j][k]);

  const std::int64_t cubes = static_cast<std::int64_t>(total);
  out.classes.assign(static_cast<std::size_t>(cubes), 0);
  std::int64_t lines = cubes / M;
  std::vector<std::vector<SingularCube>> found(static_cast<std::size_t>(lines));

  // Classify the probe with per-axis table rows `rows` (one coordinate index per axis).
  auto classify_probe = [&](const std::vector<int>& rows) {
    std::int64_t fail_pos = 0, fail_neg = 0;
    for (std::size_t j = 0; j < R; ++j) {
      double re = 1.0, im = 0.0;
      for (int k = 0; k < d; ++k) {
        const int m = lam[j * d + k];
        const std::size_t at = static_cast<std::size_t>(rows[k]) * (degree + 1) + std::abs(m);
        const double cr = table.re[at];
        const double ci = m < 0 ? -table.im[at] : table.im[at];
        const double nr = re * cr - im * ci;
        im = re * ci + im * cr;
        re = nr;
      }
      if (!(re > 0.75)) ++fail_pos;
      if (!(re < -0.75)) ++fail_neg;
      if (!within_budget(fail_pos, R, d) && !within_budget(fail_neg, R, d)) return PointClass::regular;
    }
    return within_budget(fail_pos, R, d) ? PointClass::positive : PointClass::negative;
  };

  parallel_for(static_cast<std::size_t>(lines), resolve_thread_count(threads), [&](std::size_t line) {
    std::vector<int> cube(d), rows(d), sub(d);
    std::size_t rest = line;
    for (int k = 1; k < d; ++k) {
      cube[k] = static_cast<int>(rest % M);
      rest /= M;
    }
    for (int c0 = 0; c0 < M; ++c0) {
      cube[0] = c0;
      PointClass cls = PointClass::regular;
      std::vector<double> witness;
      auto visit = [&](PointClass pc) {
        if (pc == PointClass::regular) return;
        if (cls == PointClass::regular) {
          cls = pc;
          witness.resize(d);
          for (int k = 0; k < d; ++k) witness[k] = coords[rows[k]];
        } else if (pc != cls) {
          throw InvariantViolation("cube classified both positive and negative");
        }
      };
      std::fill(sub.begin(), sub.end(), 0);
      for (std::int64_t p = 0; p < ppc; ++p) {
        for (int k = 0; k < d; ++k) rows[k] = cube[k] * per_axis + sub[k];
        visit(classify_probe(rows));
        for (int k = 0; k < d; ++k) {
          if (++sub[k] < probes) break;
          sub[k] = 0;
        }
      }
      if (extra_centre) {
        for (int k = 0; k < d; ++k) rows[k] = cube[k] * per_axis + probes;
        visit(classify_probe(rows));
      }
      const std::int64_t idx = static_cast<std::int64_t>(line) * M + c0;
      out.classes[static_cast<std::size_t>(idx)] = static_cast<std::int8_t>(cls);
      if (cls != PointClass::regular) found[line].push_back({idx, cube, cls, std::move(witness)});
    }
  });

  for (auto& v : found)
    for (auto& c : v) {
      (c.cls == PointClass::positive ? out.positive : out.negative) += 1;
      out.singular.push_back(std::move(c));
    }
  out.regular = cubes - out.positive - out.negative;
  return out;
}

UBoundsReport u_bounds_check(const FrequencySet& freqs, const SingularDecomposition& decomposition,
                             std::int64_t samples, std::uint64_t seed, bool inside_singular) {
  if (freqs.empty()) throw EmptyEnsembleError("empty frequency set (N = 0)");
  if (decomposition.dim != freqs.dim) throw DomainError("decomposition dimension mismatch");
  const int d = freqs.dim;
  const CovarianceKernel kernel(std::make_shared<const FrequencySet>(freqs));
  FieldEvaluator eval(kernel.field());
  Rng rng(seed, 0);

  UBoundsReport r;
  r.samples = samples;
  r.regular_threshold = 1.0 - 1.0 / (16.0 * d);
  r.singular_threshold = 1.0 / 16.0;
  r.min_abs_u_certified = std::numeric_limits<double>::infinity();
  std::vector<double> x(d);
  const int M = decomposition.M;
  for (std::int64_t i = 0; i < samples; ++i) {
    if (inside_singular && i % 2 == 1 && !decomposition.singular.empty()) {
      const auto& c = decomposition.singular[rng() % decomposition.singular.size()];
      for (int k = 0; k < d; ++k) x[k] = (c.coords[k] + rng.uniform()) / M;
    } else {
      for (int k = 0; k < d; ++k) x[k] = rng.uniform();
    }
    const double u = eval.value(x);
    const PointClass cls = decomposition.class_of(decomposition.cube_of(x));
    if (cls == PointClass::regular) {
      ++r.regular_samples;
      r.max_abs_u_regular = std::max(r.max_abs_u_regular, std::abs(u));
      if (!(std::abs(u) < r.regular_threshold)) ++r.regular_violations;
      if (classify_point(freqs, x) != PointClass::regular) ++r.undetected_singular;
    } else {
      ++r.singular_samples;
      if (certificate_holds(freqs, x, static_cast<int>(cls))) {
        ++r.certified_samples;
        r.min_abs_u_certified = std::min(r.min_abs_u_certified, std::abs(u));
        if (!(std::abs(u) > r.singular_threshold)) ++r.singular_violations;
      }
    }
  }
  if (r.certified_samples == 0) r.min_abs_u_certified = 0.0;
  return r;
}

HessianReport hessian_definiteness(const FrequencySet& freqs, std::span<const double> x, int sign) {
  if (freqs.empty()) throw EmptyEnsembleError("empty frequency set (N = 0)");
  const int d = freqs.dim;
  if (sign == 0) {
    if (certificate_holds(freqs, x, 1)) sign = 1;
    else if (certificate_holds(freqs, x, -1)) sign = -1;
  } else if (!certificate_holds(freqs, x, sign)) {
    sign = 0;
  }
  if (sign == 0) throw PreconditionError("no singular-point certificate at x");

  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(d, d);
  for (const auto& r : freqs.representatives) {
    Eigen::VectorXd l(d);
    for (int k = 0; k < d; ++k) l[k] = static_cast<double>(r[k]);
    H -= cos_phase(r, x) * (l * l.transpose());
  }
  H *= 2.0 * 4.0 * kPi * kPi / static_cast<double>(freqs.multiplicity());

  HessianReport rep;
  rep.x.assign(x.begin(), x.end());
  rep.sign = sign;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H, Eigen::EigenvaluesOnly);
  rep.eigenvalues = es.eigenvalues();
  const double bound = kPi * kPi * static_cast<double>(energy_of(freqs)) / (2.0 * d);
  if (sign > 0) {
    rep.extreme = rep.eigenvalues.maxCoeff();
    rep.threshold = -bound;
    rep.holds = rep.extreme <= rep.threshold;
  } else {
    rep.extreme = rep.eigenvalues.minCoeff();
    rep.threshold = bound;
    rep.holds = rep.extreme >= rep.threshold;
  }
  return rep;
}

std::int64_t recheck_cube_certificate(const FrequencySet& freqs, const SingularDecomposition& decomposition,
                                      const SingularCube& cube, int points, std::uint64_t seed) {
  Rng rng(seed, static_cast<std::uint64_t>(cube.index));
  std::vector<double> x(freqs.dim);
  std::int64_t ok = 0;
  for (int i = 0; i < points; ++i) {
    for (int k = 0; k < freqs.dim; ++k) x[k] = (cube.coords[k] + rng.uniform()) / decomposition.M;
    if (certificate_holds(freqs, x, static_cast<int>(cube.cls))) ++ok;
  }
  return ok;
}

CubeContribution singular_cube_contribution(const FrequencySet& freqs, std::span<const int> cube, int M,
                                            int nodes) {
  if (freqs.empty()) throw EmptyEnsembleError("empty frequency set (N = 0)");
  const int d = freqs.dim;
  if (static_cast<int>(cube.size()) != d) throw DomainError("cube index has wrong dimension");
  if (M < 1 || nodes < 1) throw DomainError("M and nodes must be >= 1");
  const double h = 1.0 / M;
  std::vector<double> lo(d);
  for (int k = 0; k < d; ++k) lo[k] = cube[k] * h;

  CubeContribution out;
  out.nodes = nodes;
  const CovarianceKernel kernel(std::make_shared<const FrequencySet>(freqs));

  // Apex: a point of B in the closed cube, if any.
  const HalfDualSet hd = half_dual_set(freqs);
  const double tol = 1e-12;
  for (std::size_t i = 0; i < hd.size() && !out.contains_half_dual; ++i) {
    const auto w = hd.point(i);
    std::vector<double> p(d);
    bool inside = true;
    for (int k = 0; k < d && inside; ++k) {
      double off = w[k] - lo[k];
      off -= std::round(off - 0.5 * h);
      inside = off >= -tol && off <= h + tol;
      p[k] = lo[k] + std::clamp(off, 0.0, h);
    }
    if (inside) {
      out.contains_half_dual = true;
      out.apex = p;
    }
  }
  if (!out.contains_half_dual) {
    // Largest |u| on a 5^d lattice including the corners.
    FieldEvaluator eval(kernel.field());
    std::vector<int> sub(d, 0);
    std::vector<double> x(d);
    double best = -1.0;
    for (;;) {
      for (int k = 0; k < d; ++k) x[k] = lo[k] + h * sub[k] / 4.0;
      const double a = std::abs(eval.value(x));
      if (a > best) {
        best = a;
        out.apex = x;
      }
      int k = 0;
      for (; k < d; ++k) {
        if (++sub[k] <= 4) break;
        sub[k] = 0;
      }
      if (k == d) break;
    }
  }

  const GaussRule& g = gauss_legendre(nodes);
  std::vector<double> t(nodes), w(nodes);
  for (int i = 0; i < nodes; ++i) {
    t[i] = 0.5 * (g.nodes[i] + 1.0);
    w[i] = 0.5 * g.weights[i];
  }
  const auto& p = out.apex;
  std::vector<double> q(d), y(d);
  std::vector<int> sub(d - 1);
  double total = 0.0;
  for (int axis = 0; axis < d; ++axis) {
    for (int side = 0; side < 2; ++side) {
      const double face = lo[axis] + side * h;
      const double height = std::abs(face - p[axis]);
      if (height <= 1e-15 * h) continue;
      double face_sum = 0.0;
      std::fill(sub.begin(), sub.end(), 0);
      for (;;) {
        double wq = 1.0;
        for (int k = 0, s = 0; k < d; ++k) {
          if (k == axis) {
            q[k] = face;
          } else {
            q[k] = lo[k] + h * t[sub[s]];
            wq *= w[sub[s]];
            ++s;
          }
        }
        double line = 0.0;
        for (int i = 0; i < nodes; ++i) {
          for (int k = 0; k < d; ++k) y[k] = p[k] + t[i] * (q[k] - p[k]);
          const double om = kernel.one_minus_u_squared(y);
          if (!(om > 0.0)) continue;
          line += w[i] * std::pow(t[i], d - 1) / std::sqrt(om);
        }
        face_sum += wq * line;
        int s = 0;
        for (; s < d - 1; ++s) {
          if (++sub[s] < nodes) break;
          sub[s] = 0;
        }
        if (s == d - 1) break;
      }
      total += face_sum * height * std::pow(h, d - 1);
    }
  }
  out.value = total;
  out.comparator = 1.0 / (std::pow(static_cast<double>(M), d - 1) * std::sqrt(static_cast<double>(energy_of(freqs))));
  out.ratio = out.value / out.comparator;
  return out;
}

SingularTotal singular_total(const FrequencySet& freqs, const SingularDecomposition& decomposition, int nodes,
                             int threads) {
  SingularTotal t;
  t.cubes = static_cast<std::int64_t>(decomposition.singular.size());
  t.measB = decomposition.measB();
  t.u4 = u_fourth_moment(freqs).convert_to<double>();
  t.measB_bound = 65536.0 * t.u4;
  std::vector<double> values(decomposition.singular.size());
  std::vector<double> ratios(values.size());
  parallel_for(values.size(), resolve_thread_count(threads), [&](std::size_t i) {
    const auto c = singular_cube_contribution(freqs, decomposition.singular[i].coords, decomposition.M, nodes);
    values[i] = c.value;
    ratios[i] = c.ratio;
  });
  t.value = pairwise_sum(values);
  for (double r : ratios) t.max_cube_ratio = std::max(t.max_cube_ratio, r);
  t.comparator = t.measB * decomposition.M / std::sqrt(static_cast<double>(energy_of(freqs)));
  t.ratio = t.comparator > 0.0 ? t.value / t.comparator : 0.0;
  return t;
}

nlohmann::json to_json(const SingularDecomposition& d, std::size_t max_witnesses) {
  nlohmann::json w = nlohmann::json::array();
  for (std::size_t i = 0; i < d.singular.size() && i < max_witnesses; ++i) {
    const auto& c = d.singular[i];
    w.push_back({{"cube", c.coords}, {"class", to_string(c.cls)}, {"witness", c.witness}});
  }
  return {{"dim", d.dim},
          {"M", d.M},
          {"probes", d.probes},
          {"probes_per_cube", d.probes_per_cube},
          {"counts", {{"positive", d.positive}, {"negative", d.negative}, {"regular", d.regular}}},
          {"measB", d.measB()},
          {"detection", "finite probing; regular means no singular probe found"},
          {"witnesses", w},
          {"witnesses_truncated", d.singular.size() > max_witnesses}};
}

nlohmann::json to_json(const UBoundsReport& r) {
  return {{"samples", r.samples},
          {"regular_samples", r.regular_samples},
          {"singular_samples", r.singular_samples},
          {"certified_samples", r.certified_samples},
          {"regular_threshold", r.regular_threshold},
          {"singular_threshold", r.singular_threshold},
          {"max_abs_u_regular", r.max_abs_u_regular},
          {"min_abs_u_certified", r.min_abs_u_certified},
          {"regular_violations", r.regular_violations},
          {"singular_violations", r.singular_violations},
          {"undetected_singular", r.undetected_singular},
          {"holds", r.holds()}};
}

nlohmann::json to_json(const HessianReport& r) {
  return {{"x", r.x},
          {"sign", r.sign},
          {"eigenvalues", std::vector<double>(r.eigenvalues.data(), r.eigenvalues.data() + r.eigenvalues.size())},
          {"extreme", r.extreme},
          {"threshold", r.threshold},
          {"holds", r.holds}};
}

nlohmann::json to_json(const CubeContribution& c) {
  return {{"value", c.value},           {"comparator", c.comparator}, {"ratio", c.ratio},
          {"contains_half_dual", c.contains_half_dual}, {"apex", c.apex}, {"nodes", c.nodes}};
}

nlohmann::json to_json(const SingularTotal& t) {
  return {{"value", t.value},         {"cubes", t.cubes},           {"measB", t.measB},
          {"u4", t.u4},               {"measB_bound", t.measB_bound}, {"comparator", t.comparator},
          {"ratio", t.ratio},         {"max_cube_ratio", t.max_cube_ratio}};
}

}  // namespace nodal
