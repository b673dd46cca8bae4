#include "nodal/trig_field.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numbers>

#include "nodal/error.hpp"

namespace nodal {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

inline std::complex<double> unit(double turns) {
  const double a = kTwoPi * turns;
  return {std::cos(a), std::sin(a)};
}

inline std::complex<double> mul(std::complex<double> a, std::complex<double> b) {
  return {a.real() * b.real() - a.imag() * b.imag(), a.real() * b.imag() + a.imag() * b.real()};
}

/// out[m] = z^m for m = 0..M using four interleaved chains (shorter dependency than z^{m-1} z).
inline void fill_powers(std::complex<double> z, int M, std::complex<double>* out) {
  out[0] = 1.0;
  if (M >= 1) out[1] = z;
  if (M >= 2) out[2] = mul(z, z);
  if (M >= 3) out[3] = mul(out[2], z);
  if (M >= 4) out[4] = mul(out[2], out[2]);
  if (M < 5) return;
  const std::complex<double> z4 = out[4];
  for (int m = 5; m <= M; ++m) out[m] = mul(out[m - 4], z4);
}

// Phase e^{i phi} of a term restricted to a line: phi = 2 pi sum_{k != axis} lambda_k base_k.
std::complex<double> line_phase(const IntVector& lambda, int axis, std::span<const double> base) {
  double phi = 0.0;
  for (std::size_t k = 0; k < lambda.size(); ++k) {
    if (static_cast<int>(k) == axis || lambda[k] == 0) continue;
    // Reduce lambda_k * base_k mod 1 before scaling to keep the phase accurate.
    const double turns = static_cast<double>(lambda[k]) * base[k];
    phi += turns - std::floor(turns);
  }
  return unit(phi);
}

void accumulate_restricted(TrigPoly1D& g, std::int64_t m, double a, double b,
                           std::complex<double> phase) {
  const double ap = a * phase.real() + b * phase.imag();
  const double bp = b * phase.real() - a * phase.imag();
  const auto index = static_cast<std::size_t>(std::llabs(m));
  g.cos_coeff[index] += ap;
  if (m > 0) g.sin_coeff[index] += bp;
  else if (m < 0) g.sin_coeff[index] -= bp;
}

/// Plain complex product; std::complex operator* adds inf/nan recovery we do not need.
}  // namespace

double TrigPoly1D::value(double t) const {
  const std::complex<double> z = unit(t - std::floor(t));
  std::complex<double> power = 1.0;
  double sum = 0.0;
  for (std::size_t m = 0; m < cos_coeff.size(); ++m) {
    sum += cos_coeff[m] * power.real() + sin_coeff[m] * power.imag();
    power = mul(power, z);
  }
  return sum;
}

void TrigPoly1D::jet(double t, double& value, double& d1, double& d2) const {
  const std::complex<double> z = unit(t - std::floor(t));
  std::complex<double> power = 1.0;
  double v0 = 0.0, v1 = 0.0, v2 = 0.0;
  for (std::size_t m = 0; m < cos_coeff.size(); ++m) {
    const double w = static_cast<double>(m);
    const double c = power.real();
    const double s = power.imag();
    const double v = cos_coeff[m] * c + sin_coeff[m] * s;
    v0 += v;
    v1 += w * (sin_coeff[m] * c - cos_coeff[m] * s);
    v2 += w * w * v;
    power = mul(power, z);
  }
  value = v0;
  d1 = kTwoPi * v1;
  d2 = -kTwoPi * kTwoPi * v2;
}

TrigPoly1D TrigPoly1D::derivative() const {
  TrigPoly1D out(degree());
  for (std::size_t m = 0; m < cos_coeff.size(); ++m) {
    const double w = kTwoPi * static_cast<double>(m);
    out.cos_coeff[m] = w * sin_coeff[m];
    out.sin_coeff[m] = -w * cos_coeff[m];
  }
  return out;
}

TrigPoly1D TrigPoly1D::sine(int m, double amplitude) {
  TrigPoly1D g(m);
  g.sin_coeff[m] = amplitude;
  return g;
}

TrigPoly1D TrigPoly1D::cosine(int m, double amplitude) {
  TrigPoly1D g(m);
  g.cos_coeff[m] = amplitude;
  return g;
}

UniformTrigTable::UniformTrigTable(int n, int max_degree, double offset)
    : n_(n), max_degree_(max_degree), offset_(offset) {
  if (n < 1 || max_degree < 0) throw DomainError("invalid trig table size");
  const std::size_t width = static_cast<std::size_t>(max_degree) + 1;
  cos_.resize(static_cast<std::size_t>(n) * width);
  sin_.resize(cos_.size());
  for (int i = 0; i < n; ++i) {
    for (int m = 0; m <= max_degree; ++m) {
      // Reduce m (i + offset) modulo n exactly-ish before taking the angle.
      const double turns = std::fmod(static_cast<double>(m) * (i + offset), static_cast<double>(n)) / n;
      cos_[i * width + m] = std::cos(kTwoPi * turns);
      sin_[i * width + m] = std::sin(kTwoPi * turns);
    }
  }
}

void UniformTrigTable::evaluate(const TrigPoly1D& g, std::span<double> out) const {
  const int degree = g.degree();
  if (degree > max_degree_) throw DomainError("trig polynomial degree exceeds table");
  const std::size_t width = static_cast<std::size_t>(max_degree_) + 1;
  const double* c = g.cos_coeff.data();
  const double* s = g.sin_coeff.data();
  for (int i = 0; i < n_; ++i) {
    const double* ct = &cos_[i * width];
    const double* st = &sin_[i * width];
    double sum = 0.0;
    for (int m = 0; m <= degree; ++m) sum += c[m] * ct[m] + s[m] * st[m];
    out[i] = sum;
  }
}

void UniformTrigTable::evaluate_derivative(const TrigPoly1D& g, std::span<double> out) const {
  evaluate(g.derivative(), out);
}

TrigField::TrigField(int dim, std::vector<IntVector> freqs, std::vector<double> cos_coeff,
                     std::vector<double> sin_coeff)
    : dim_(dim),
      freqs_(std::move(freqs)),
      cos_coeff_(std::move(cos_coeff)),
      sin_coeff_(std::move(sin_coeff)) {
  if (dim_ < 1) throw DomainError("field dimension must be positive");
  if (freqs_.size() != cos_coeff_.size() || freqs_.size() != sin_coeff_.size())
    throw DomainError("field term arrays differ in length");
  for (std::size_t j = 0; j < freqs_.size(); ++j) {
    if (static_cast<int>(freqs_[j].size()) != dim_) throw DomainError("frequency has wrong dimension");
    std::int64_t e = 0;
    for (auto x : freqs_[j]) {
      e += x * x;
      axis_degree_ = std::max<int>(axis_degree_, static_cast<int>(std::llabs(x)));
    }
    max_energy_ = std::max(max_energy_, e);
    max_abs_coeff_ = std::max({max_abs_coeff_, std::abs(cos_coeff_[j]), std::abs(sin_coeff_[j])});
  }
}

double TrigField::value(std::span<const double> x) const {
  FieldEvaluator eval(*this);
  return eval.value(x);
}

Eigen::VectorXd TrigField::gradient(std::span<const double> x) const {
  FieldEvaluator eval(*this);
  Eigen::VectorXd grad(dim_);
  eval.value_gradient(x, std::span<double>(grad.data(), dim_));
  return grad;
}

Eigen::MatrixXd TrigField::hessian(std::span<const double> x) const {
  FieldEvaluator eval(*this);
  std::vector<double> grad(dim_);
  std::vector<double> h(static_cast<std::size_t>(dim_) * dim_);
  eval.value_gradient_hessian(x, grad, h);
  Eigen::MatrixXd out(dim_, dim_);
  for (int i = 0; i < dim_; ++i)
    for (int j = 0; j < dim_; ++j) out(i, j) = h[i * dim_ + j];
  return out;
}

TrigField TrigField::scaled(double c) const {
  auto a = cos_coeff_;
  auto b = sin_coeff_;
  for (auto& v : a) v *= c;
  for (auto& v : b) v *= c;
  return TrigField(dim_, freqs_, std::move(a), std::move(b));
}

TrigField TrigField::translated(std::span<const double> shift) const {
  std::vector<double> a(terms());
  std::vector<double> b(terms());
  for (std::size_t j = 0; j < terms(); ++j) {
    const auto phase = line_phase(freqs_[j], -1, shift);
    a[j] = cos_coeff_[j] * phase.real() + sin_coeff_[j] * phase.imag();
    b[j] = sin_coeff_[j] * phase.real() - cos_coeff_[j] * phase.imag();
  }
  return TrigField(dim_, freqs_, std::move(a), std::move(b));
}

TrigPoly1D TrigField::restrict_to_line(int axis, std::span<const double> base) const {
  TrigPoly1D g(axis_degree_);
  for (std::size_t j = 0; j < terms(); ++j)
    accumulate_restricted(g, freqs_[j][axis], cos_coeff_[j], sin_coeff_[j],
                          line_phase(freqs_[j], axis, base));
  return g;
}

TrigPoly1D TrigField::restrict_partial_to_line(int component, int axis,
                                               std::span<const double> base) const {
  TrigPoly1D g(axis_degree_);
  for (std::size_t j = 0; j < terms(); ++j) {
    const double w = kTwoPi * static_cast<double>(freqs_[j][component]);
    if (w == 0.0) continue;
    accumulate_restricted(g, freqs_[j][axis], w * sin_coeff_[j], -w * cos_coeff_[j],
                          line_phase(freqs_[j], axis, base));
  }
  return g;
}

TrigField TrigField::axis_sine(int dim, int axis, int m, double amplitude) {
  IntVector lambda(dim, 0);
  lambda[axis] = m;
  return TrigField(dim, {lambda}, {0.0}, {amplitude});
}

TrigField TrigField::constant(int dim, double value) {
  return TrigField(dim, {IntVector(dim, 0)}, {value}, {0.0});
}

FieldEvaluator::FieldEvaluator(const TrigField& field)
    : field_(&field),
      dim_(field.dim()),
      degree_(field.axis_degree()),
      powers_(static_cast<std::size_t>(field.dim()) * (2 * field.axis_degree() + 1)),
      phases_(field.terms()),
      offsets_(field.terms() * field.dim()),
      lambda_(field.terms() * field.dim()),
      a_(field.cos_coeff()),
      b_(field.sin_coeff()) {
  const int width = 2 * degree_ + 1;
  for (std::size_t j = 0; j < field.terms(); ++j) {
    for (int k = 0; k < dim_; ++k) {
      const auto l = field.freqs_[j][k];
      offsets_[j * dim_ + k] = static_cast<std::int32_t>(k * width + degree_ + l);
      lambda_[j * dim_ + k] = static_cast<double>(l);
    }
  }
}

void FieldEvaluator::compute_phases(std::span<const double> x) {
  const int width = 2 * degree_ + 1;
  std::complex<double>* powers = powers_.data();
  for (int k = 0; k < dim_; ++k) {
    std::complex<double>* row = powers + static_cast<std::size_t>(k) * width + degree_;
    fill_powers(unit(x[k] - std::floor(x[k])), degree_, row);
    for (int m = 1; m <= degree_; ++m) row[-m] = std::conj(row[m]);
  }
  const std::int32_t* off = offsets_.data();
  const std::size_t terms = phases_.size();
  for (std::size_t j = 0; j < terms; ++j, off += dim_) {
    std::complex<double> phase = powers[off[0]];
    for (int k = 1; k < dim_; ++k) phase = mul(phase, powers[off[k]]);
    phases_[j] = phase;
  }
}

double FieldEvaluator::value(std::span<const double> x) {
  compute_phases(x);
  double sum = 0.0;
  for (std::size_t j = 0; j < phases_.size(); ++j)
    sum += a_[j] * phases_[j].real() + b_[j] * phases_[j].imag();
  return sum;
}

double FieldEvaluator::value_gradient(std::span<const double> x, std::span<double> grad) {
  compute_phases(x);
  const int d = dim_;
  double g[8] = {0, 0, 0, 0, 0, 0, 0, 0};
  std::vector<double> wide;
  double* acc = g;
  if (d > 8) {
    wide.assign(d, 0.0);
    acc = wide.data();
  }
  double sum = 0.0;
  const double* lam = lambda_.data();
  for (std::size_t j = 0; j < phases_.size(); ++j, lam += d) {
    const double c = phases_[j].real();
    const double s = phases_[j].imag();
    sum += a_[j] * c + b_[j] * s;
    const double slope = b_[j] * c - a_[j] * s;
    for (int k = 0; k < d; ++k) acc[k] += slope * lam[k];
  }
  for (int k = 0; k < d; ++k) grad[k] = kTwoPi * acc[k];
  return sum;
}

double FieldEvaluator::value_gradient_hessian(std::span<const double> x, std::span<double> grad,
                                              std::span<double> hessian) {
  compute_phases(x);
  const int d = dim_;
  std::fill(grad.begin(), grad.begin() + d, 0.0);
  std::fill(hessian.begin(), hessian.begin() + d * d, 0.0);
  double sum = 0.0;
  const double* lam = lambda_.data();
  for (std::size_t j = 0; j < phases_.size(); ++j, lam += d) {
    const double c = phases_[j].real();
    const double s = phases_[j].imag();
    const double v = a_[j] * c + b_[j] * s;
    sum += v;
    const double slope = kTwoPi * (b_[j] * c - a_[j] * s);
    const double curvature = -kTwoPi * kTwoPi * v;
    for (int k = 0; k < d; ++k) {
      grad[k] += slope * lam[k];
      for (int l = 0; l < d; ++l) hessian[k * d + l] += curvature * lam[k] * lam[l];
    }
  }
  return sum;
}

}  // namespace nodal
