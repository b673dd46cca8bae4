#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "nodal/lattice.hpp"
#include "nodal/rng.hpp"
#include "nodal/trig_field.hpp"

namespace nodal {

/// A sample of the Gaussian eigenfunction ensemble on a frequency set,
///   f(x) = sqrt(2/N) sum_{lambda in Lambda/+-} b_l cos(2 pi <l, x>) - c_l sin(2 pi <l, x>),
/// with one coefficient pair (b, c) per canonical representative.
class RandomEigenfunction {
 public:
  RandomEigenfunction(std::shared_ptr<const FrequencySet> freqs,
                      std::vector<std::pair<double, double>> coeffs, std::uint64_t seed = 0,
                      std::uint64_t stream = 0);

  [[nodiscard]] const FrequencySet& frequencies() const noexcept { return *freqs_; }
  [[nodiscard]] const std::shared_ptr<const FrequencySet>& frequencies_ptr() const noexcept {
    return freqs_;
  }
  [[nodiscard]] const std::vector<std::pair<double, double>>& coeffs() const noexcept {
    return coeffs_;
  }
  [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }
  [[nodiscard]] std::uint64_t stream() const noexcept { return stream_; }
  [[nodiscard]] int dim() const noexcept { return freqs_->dim; }

  /// The same function as a plain trigonometric field.
  [[nodiscard]] const TrigField& field() const noexcept { return field_; }

  [[nodiscard]] double evaluate(std::span<const double> x) const { return field_.value(x); }
  [[nodiscard]] Eigen::VectorXd gradient(std::span<const double> x) const { return field_.gradient(x); }
  [[nodiscard]] Eigen::MatrixXd hessian(std::span<const double> x) const { return field_.hessian(x); }

 private:
  std::shared_ptr<const FrequencySet> freqs_;
  std::vector<std::pair<double, double>> coeffs_;
  std::uint64_t seed_;
  std::uint64_t stream_;
  TrigField field_;
};

/// Draw b_l, c_l ~ N(0, 1) for each representative in order (b before c)
/// from the substream Rng(seed, stream).
RandomEigenfunction sample(std::shared_ptr<const FrequencySet> freqs, std::uint64_t seed,
                           std::uint64_t stream = 0);

/// The two-point function u(z) = (1/N) sum_{lambda} cos(2 pi <lambda, z>) and its derivatives.
class CovarianceKernel {
 public:
  explicit CovarianceKernel(std::shared_ptr<const FrequencySet> freqs);

  [[nodiscard]] const FrequencySet& frequencies() const noexcept { return *freqs_; }
  [[nodiscard]] const TrigField& field() const noexcept { return field_; }

  [[nodiscard]] double value(std::span<const double> z) const { return field_.value(z); }
  [[nodiscard]] Eigen::VectorXd gradient(std::span<const double> z) const { return field_.gradient(z); }
  [[nodiscard]] Eigen::MatrixXd hessian(std::span<const double> z) const { return field_.hessian(z); }

  /// 1 - u(z)^2 computed as (1 - u)(1 + u) with 1 -+ u = (2/N) sum sin^2 / cos^2 of half
  /// phases, accurate next to the points where |u| = 1.
  [[nodiscard]] double one_minus_u_squared(std::span<const double> z) const;

 private:
  std::shared_ptr<const FrequencySet> freqs_;
  TrigField field_;
};

struct Covariance {
  Eigen::Matrix2d sigma;
  double det = 0.0;
};

double two_point(const FrequencySet& freqs, std::span<const double> z);

/// Covariance of (f(x + z), f(x)): [[1, u], [u, 1]] with det = 1 - u^2.
Covariance covariance(const FrequencySet& freqs, std::span<const double> z);

/// sum_{lambda} <lambda, xi>^2. When every entry of xi is an integer the
/// identity sum = (1/d) (sum |lambda|^2) |xi|^2 is checked in exact integer
/// arithmetic and InvariantViolation is thrown if it fails.
double direction_average(const FrequencySet& freqs, std::span<const double> xi);

/// Singular values of the (d + 1) x N matrix whose column pair for each
/// representative lambda is
///   (cos 2pi<l,x>, -sin 2pi<l,x> l) and (-sin 2pi<l,x>, -cos 2pi<l,x> l),
/// i.e. the Jacobian of coefficients -> (f(x), grad f(x) / 2pi).
Eigen::VectorXd jacobian_singular_values(const FrequencySet& freqs, std::span<const double> x);

/// Numerical rank: singular values above 1e-8 times the largest.
int jacobian_rank(const FrequencySet& freqs, std::span<const double> x);

nlohmann::json to_json(const RandomEigenfunction& f);

}  // namespace nodal
