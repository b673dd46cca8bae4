#pragma once

#include <complex>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "nodal/lattice.hpp"

namespace nodal {

/// One-variable real trigonometric polynomial
///   g(t) = sum_{m=0}^{M} c_m cos(2 pi m t) + s_m sin(2 pi m t).
struct TrigPoly1D {
  std::vector<double> cos_coeff;
  std::vector<double> sin_coeff;

  TrigPoly1D() = default;
  explicit TrigPoly1D(int degree) : cos_coeff(degree + 1, 0.0), sin_coeff(degree + 1, 0.0) {}

  [[nodiscard]] int degree() const noexcept { return static_cast<int>(cos_coeff.size()) - 1; }

  [[nodiscard]] double value(double t) const;
  /// Value and first two derivatives at t.
  void jet(double t, double& value, double& d1, double& d2) const;
  [[nodiscard]] TrigPoly1D derivative() const;

  static TrigPoly1D sine(int m, double amplitude = 1.0);
  static TrigPoly1D cosine(int m, double amplitude = 1.0);
};

/// Values (and optionally derivatives) of a family of trig polynomials of
/// degree <= M on the uniform grid t_i = (i + offset) / n.
class UniformTrigTable {
 public:
  UniformTrigTable(int n, int max_degree, double offset);

  [[nodiscard]] int size() const noexcept { return n_; }
  [[nodiscard]] double node(int i) const noexcept { return (i + offset_) / n_; }

  /// out[i] = g(t_i); requires g.degree() <= max_degree.
  void evaluate(const TrigPoly1D& g, std::span<double> out) const;
  /// out[i] = g'(t_i).
  void evaluate_derivative(const TrigPoly1D& g, std::span<double> out) const;

 private:
  int n_;
  int max_degree_;
  double offset_;
  std::vector<double> cos_;  // [i * (M + 1) + m]
  std::vector<double> sin_;
};

/// A real trigonometric polynomial on T^d,
///   f(x) = sum_j a_j cos(2 pi <lambda_j, x>) + b_j sin(2 pi <lambda_j, x>).
///
/// Random eigenfunctions, the two-point function, and the explicit test
/// functions used to validate estimators all use this representation.
class TrigField {
 public:
  TrigField() = default;
  TrigField(int dim, std::vector<IntVector> freqs, std::vector<double> cos_coeff,
            std::vector<double> sin_coeff);

  [[nodiscard]] int dim() const noexcept { return dim_; }
  [[nodiscard]] std::size_t terms() const noexcept { return cos_coeff_.size(); }
  [[nodiscard]] const std::vector<IntVector>& frequencies() const noexcept { return freqs_; }
  [[nodiscard]] const std::vector<double>& cos_coeff() const noexcept { return cos_coeff_; }
  [[nodiscard]] const std::vector<double>& sin_coeff() const noexcept { return sin_coeff_; }
  /// max_j |lambda_j|^2.
  [[nodiscard]] std::int64_t max_energy() const noexcept { return max_energy_; }
  /// max_j max_k |lambda_jk|, the degree of any axis restriction.
  [[nodiscard]] int axis_degree() const noexcept { return axis_degree_; }
  [[nodiscard]] double max_abs_coeff() const noexcept { return max_abs_coeff_; }

  [[nodiscard]] double value(std::span<const double> x) const;
  [[nodiscard]] Eigen::VectorXd gradient(std::span<const double> x) const;
  [[nodiscard]] Eigen::MatrixXd hessian(std::span<const double> x) const;

  /// c * f.
  [[nodiscard]] TrigField scaled(double c) const;
  /// x -> f(x + shift).
  [[nodiscard]] TrigField translated(std::span<const double> shift) const;

  /// Restriction t -> f(base with coordinate `axis` replaced by t).
  [[nodiscard]] TrigPoly1D restrict_to_line(int axis, std::span<const double> base) const;
  /// Restriction of the partial derivative d f / d x_component along `axis`.
  [[nodiscard]] TrigPoly1D restrict_partial_to_line(int component, int axis,
                                                    std::span<const double> base) const;

  /// sin(2 pi m x_axis), an explicit field used for validation.
  static TrigField axis_sine(int dim, int axis = 0, int m = 1, double amplitude = 1.0);
  static TrigField constant(int dim, double value);

 private:
  friend class FieldEvaluator;

  int dim_ = 0;
  std::vector<IntVector> freqs_;
  std::vector<double> cos_coeff_;
  std::vector<double> sin_coeff_;
  std::int64_t max_energy_ = 0;
  int axis_degree_ = 0;
  double max_abs_coeff_ = 0.0;
};

/// Value, gradient and Hessian of a TrigField at scattered points without
/// per-call allocation. Phases e^{2 pi i <lambda, x>} are built from per-axis
/// powers of e^{2 pi i x_k}. Not thread-safe; use one evaluator per thread.
class FieldEvaluator {
 public:
  explicit FieldEvaluator(const TrigField& field);

  [[nodiscard]] double value(std::span<const double> x);
  /// Value and gradient; grad must have dim() entries.
  double value_gradient(std::span<const double> x, std::span<double> grad);
  /// Value, gradient and row-major Hessian (dim()^2 entries).
  double value_gradient_hessian(std::span<const double> x, std::span<double> grad,
                                std::span<double> hessian);

  [[nodiscard]] const TrigField& field() const noexcept { return *field_; }

 private:
  void compute_phases(std::span<const double> x);

  const TrigField* field_;
  int dim_;
  int degree_;
  std::vector<std::complex<double>> powers_;  // [k * (2M + 1) + (m + M)]
  std::vector<std::complex<double>> phases_;  // per term
  std::vector<std::int32_t> offsets_;         // [j * d + k] index of lambda_jk in powers_
  std::vector<double> lambda_;                // [j * d + k]
  std::vector<double> a_;
  std::vector<double> b_;
};

}  // namespace nodal
