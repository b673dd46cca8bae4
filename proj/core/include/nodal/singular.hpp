#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "nodal/lattice.hpp"

namespace nodal {

enum class PointClass : std::int8_t { regular = 0, positive = 1, negative = -1 };

std::string to_string(PointClass c);

/// Fraction of lambda in Lambda with cos 2 pi <lambda, x> > t (sign +1) or
/// < -t (sign -1).
double cosine_density(const FrequencySet& freqs, std::span<const double> x, double t, int sign);

/// positive iff more than 1 - 1/(4d) of the cosines exceed 3/4, negative iff
/// more than that fraction are below -3/4.
PointClass classify_point(const FrequencySet& freqs, std::span<const double> x);

/// True iff more than 1 - 1/(4d) of the cosines exceed 1/2 (times sign).
bool certificate_holds(const FrequencySet& freqs, std::span<const double> x, int sign);

int default_cube_count(const FrequencySet& freqs);

struct SingularCube {
  std::int64_t index = 0;      ///< linear index, first axis fastest
  std::vector<int> coords;     ///< cube is prod_k [coords_k, coords_k + 1] / M
  PointClass cls = PointClass::regular;
  std::vector<double> witness;  ///< first singular probe found
};

/// Partition of T^d into M^d cubes, each classified by probing.
///
/// Probing is finite, so "regular" means "no singular probe found".
struct SingularDecomposition {
  int dim = 0;
  int M = 0;
  int probes = 0;
  std::int64_t probes_per_cube = 0;
  std::vector<std::int8_t> classes;  ///< PointClass per cube, by linear index
  std::vector<SingularCube> singular;  ///< sorted by index
  std::int64_t positive = 0;
  std::int64_t negative = 0;
  std::int64_t regular = 0;

  [[nodiscard]] std::int64_t cube_count() const noexcept { return positive + negative + regular; }
  [[nodiscard]] double measB() const noexcept {
    return static_cast<double>(positive + negative) / static_cast<double>(cube_count());
  }
  [[nodiscard]] std::int64_t cube_of(std::span<const double> x) const;
  [[nodiscard]] PointClass class_of(std::int64_t index) const {
    return static_cast<PointClass>(classes[static_cast<std::size_t>(index)]);
  }
};

/// Probes each cube at probes^d interior points (cell centres of a
/// sub-lattice) and at its centre. probes must be >= 1; M^d is capped at 2^28.
SingularDecomposition classify_cubes(const FrequencySet& freqs, int M = 0, int probes = 3,
                                     int threads = 0);

struct UBoundsReport {
  std::int64_t samples = 0;
  std::int64_t regular_samples = 0;
  std::int64_t singular_samples = 0;
  std::int64_t certified_samples = 0;
  double regular_threshold = 0.0;   ///< 1 - 1/(16d)
  double singular_threshold = 0.0;  ///< 1/16
  double max_abs_u_regular = 0.0;
  double min_abs_u_certified = 0.0;
  std::int64_t regular_violations = 0;
  std::int64_t singular_violations = 0;
  /// Regular-cube samples that are themselves singular points (missed by probing).
  std::int64_t undetected_singular = 0;

  [[nodiscard]] bool holds() const noexcept { return regular_violations == 0 && singular_violations == 0; }
};

/// Samples uniform points of T^d. With `inside_singular`, half of the samples
/// are drawn inside the detected singular cubes.
UBoundsReport u_bounds_check(const FrequencySet& freqs, const SingularDecomposition& decomposition,
                             std::int64_t samples, std::uint64_t seed = 0, bool inside_singular = false);

struct HessianReport {
  std::vector<double> x;
  int sign = 0;
  Eigen::VectorXd eigenvalues;  ///< ascending
  double extreme = 0.0;         ///< max eigenvalue (sign +1) or min (sign -1)
  double threshold = 0.0;       ///< -pi^2 E / (2d) times sign
  bool holds = false;
};

/// Hessian of u at x. Requires the cosine certificate at x for the given sign
/// (or, with sign 0, for either sign); throws PreconditionError otherwise.
HessianReport hessian_definiteness(const FrequencySet& freqs, std::span<const double> x, int sign = 0);

/// Re-checks the certificate of a singular cube at `points` uniform points of the cube.
std::int64_t recheck_cube_certificate(const FrequencySet& freqs, const SingularDecomposition& decomposition,
                                      const SingularCube& cube, int points, std::uint64_t seed = 0);

struct CubeContribution {
  double value = 0.0;       ///< int over the cube of dz / sqrt(1 - u^2)
  double comparator = 0.0;  ///< 1 / (M^{d-1} sqrt(E))
  double ratio = 0.0;
  bool contains_half_dual = false;
  std::vector<double> apex;
  int nodes = 0;
};

/// Pyramids from an apex (a point of B in the closed cube, or the probe of
/// largest |u|) to the 2d faces, each integrated by tensor Gauss-Legendre
/// with `nodes` points per direction. The apex singularity cancels against
/// the radial Jacobian.
CubeContribution singular_cube_contribution(const FrequencySet& freqs, std::span<const int> cube, int M,
                                            int nodes = 16);

struct SingularTotal {
  double value = 0.0;
  std::int64_t cubes = 0;
  double measB = 0.0;
  double u4 = 0.0;
  double measB_bound = 0.0;  ///< 16^4 u4
  double comparator = 0.0;   ///< measB M / sqrt(E)
  double ratio = 0.0;
  double max_cube_ratio = 0.0;
};

SingularTotal singular_total(const FrequencySet& freqs, const SingularDecomposition& decomposition,
                             int nodes = 16, int threads = 0);

nlohmann::json to_json(const SingularDecomposition& d, std::size_t max_witnesses = 64);
nlohmann::json to_json(const UBoundsReport& r);
nlohmann::json to_json(const HessianReport& r);
nlohmann::json to_json(const CubeContribution& c);
nlohmann::json to_json(const SingularTotal& t);

}  // namespace nodal
