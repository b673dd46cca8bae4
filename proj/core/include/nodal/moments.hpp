#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "nodal/lattice.hpp"

namespace nodal {

/// int_{T^d} u^2 = 1 / N, exactly.
Rational u_second_moment(const FrequencySet& freqs);

/// int_{T^d} u^4 = #{l1 + l2 = l3 + l4} / N^4, exactly.
Rational u_fourth_moment(const FrequencySet& freqs);

/// (1/n^d) sum over the uniform grid of u^p. Equals the exact moment once
/// n > p * max_k |lambda_k|.
double grid_power_moment(const FrequencySet& freqs, int p, int grid, int threads = 0);

struct QuadratureOptions {
  int grid = 0;        ///< points per axis; 0 selects default_quadrature_grid
  double rho = 0.0;    ///< ball radius around each point of B; 0 selects the default
  bool use_symmetry = false;  ///< sum the grid part over a W_d fundamental domain
  int threads = 0;
};

struct QuadratureResult {
  double value = 0.0;              ///< I = (1/2pi) int dz / sqrt(1 - u^2)
  int grid = 0;
  double rho = 0.0;
  double refinement_error = 0.0;   ///< |I - I at half resolution|
  double grid_part = 0.0;          ///< trapezoid part, already divided by 2pi
  double ball_part = 0.0;          ///< polar part, already divided by 2pi
  double local_model_mass = 0.0;   ///< (1/2pi) sum over B of int_{|h|<r} dh / (c0 |h|), r = min(rho, 0.05 / sqrt(E))
  double local_model_error = 0.0;  ///< |(1/2pi) sum int_{|h|<r} F - local_model_mass|
  std::size_t half_dual_points = 0;
  double min_half_dual_distance = 0.0;
  bool symmetric = false;
};

/// 4 ceil(sqrt(E)): below this the grid is rejected.
int minimum_quadrature_grid(std::int64_t energy);
/// max(256, 16 ceil(sqrt(E))), rounded up to even.
int default_quadrature_grid(std::int64_t energy);
/// min(0.05, quarter of the smallest distance between points of B).
double default_excision_radius(const FrequencySet& freqs);

/// The second moment E(L^2) = (1/2pi) int_{T^d} dz / sqrt(1 - u(z)^2), d in {2, 3}.
///
/// A smooth cutoff chi (1 on |z - z0| <= rho/2, 0 beyond rho) around each
/// z0 in B splits the integrand. F (1 - sum chi) is smooth and periodic and
/// is integrated by the tensor trapezoid rule; F chi is integrated in polar
/// coordinates about z0, where r^{d-1} F is smooth, with Gauss-Legendre in r
/// and a periodic rule in angle.
QuadratureResult second_moment_quadrature(const FrequencySet& freqs, const QuadratureOptions& options = {});

struct MomentReport {
  int dim = 0;
  std::int64_t energy = 0;
  std::size_t multiplicity = 0;
  Rational u2;
  Rational u4;
  double second_moment = 0.0;
  double expectation_sq = 0.0;        ///< 1 / 2pi
  double predicted_correction = 0.0;  ///< 1 / (4 pi N)
  double variance = 0.0;              ///< I - 1/2pi
  double var_times_4piN = 0.0;
  double residual = 0.0;              ///< I - 1/2pi - 1/(4 pi N)
  double residual_constant = 20.0;
  bool residual_within_bound = false; ///< |residual| <= C u4
  QuadratureResult quadrature;
};

MomentReport variance_decomposition(const FrequencySet& freqs, const QuadratureOptions& options = {},
                                    double residual_constant = 20.0);

struct FourthMomentCheck {
  int dim = 0;
  std::int64_t energy = 0;
  std::size_t multiplicity = 0;
  Rational u4;
  Rational u4_times_N2;
  double ratio = 0.0;      ///< u4 N^2 / E^{(d-3)/2}
  bool asserted = false;   ///< true in d = 2, where u4 N^2 <= 3 is checked
  bool holds = true;
};

/// d = 2: checks u4 N^2 <= 3 exactly (InvariantViolation otherwise).
/// d >= 3: reports u4 N^2 / E^{(d-3)/2} with no constant asserted.
FourthMomentCheck fourth_moment_bound_check(const FrequencySet& freqs);

struct AsymptoticRow {
  std::int64_t energy = 0;
  std::size_t multiplicity = 0;
  std::optional<MomentReport> report;  ///< absent when skipped
  std::string note;
};

/// One variance_decomposition per energy; empty or degenerate sets are skipped with a note.
std::vector<AsymptoticRow> asymptotic_table(const std::vector<std::int64_t>& energies, int dim,
                                            const QuadratureOptions& options = {});

nlohmann::json to_json(const QuadratureResult& q);
nlohmann::json to_json(const MomentReport& r);
nlohmann::json to_json(const FourthMomentCheck& c);
nlohmann::json to_json(const std::vector<AsymptoticRow>& rows);
/// "dim,energy,N,u2,u4,I,var,var_times_4piN,residual,grid,rho"
std::string csv_header_moments();
std::string to_csv_row(const MomentReport& r);

}  // namespace nodal
