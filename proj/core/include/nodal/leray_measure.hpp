#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "nodal/ensemble.hpp"
#include "nodal/trig_field.hpp"

namespace nodal {

enum class LerayMethod { epsilon_level, surface_integral };

std::string to_string(LerayMethod m);
LerayMethod parse_leray_method(const std::string& s);

struct LerayEstimate {
  double value = 0.0;
  LerayMethod method = LerayMethod::surface_integral;
  double epsilon = 0.0;  ///< 0 for the surface method
  int grid = 0;
  double error_hint = 0.0;
  std::vector<std::string> warnings;
};

/// Default grid: 16 ceil(sqrt(E_max)) per axis, at least 128.
int default_leray_grid(std::int64_t max_energy);

/// Smallest grid accepted by leray_epsilon: 8 ceil(sqrt(E_max)).
int minimum_epsilon_grid(std::int64_t max_energy);

/// (1 / 2 eps) meas{x : |f(x)| < eps}.
///
/// The measure is integrated slice by slice: a partition of unity
/// w_j = (d_j f)^4 / sum_k (d_k f)^4 splits the band among the d axis
/// directions, and along each axis line {|f| < eps} is found exactly from
/// the restricted trigonometric polynomial. Transverse coordinates start
/// from the midpoint rule on `grid` lines per axis; a transverse cell is
/// trisected (up to four times) wherever its slice integral departs from the
/// smooth behaviour predicted by second differences of its neighbours, which
/// happens near critical points with small critical value. error_hint sums
/// those departures over the accepted cells.
LerayEstimate leray_epsilon(const TrigField& f, double epsilon, int grid);
LerayEstimate leray_epsilon(const RandomEigenfunction& f, double epsilon, int grid);

/// int_{f = 0} d sigma / |grad f| for d = 2.
///
/// Marching squares on the vertex grid x = i / grid. Edge crossings are roots
/// of the exact edge restriction; each segment is lifted to the curve at its
/// midpoint and integrated with a Richardson-corrected length and a Simpson
/// weight in 1 / |grad f|. Saddle cells are split by the sign at the cell
/// centre. Vertices with |f| < 1e-12 max|coeff| are moved to +1e-12 max|coeff|.
/// error_hint is the size of the correction over the plain chord rule.
LerayEstimate leray_surface_2d(const TrigField& f, int grid);
LerayEstimate leray_surface_2d(const RandomEigenfunction& f, int grid);

/// Intervals of [0, 1) on which |g| < eps, found exactly on the monotone
/// pieces of g between `cells` uniform breakpoints.
std::vector<std::pair<double, double>> band_intervals(const TrigPoly1D& g, double epsilon, int cells);

/// meas{t in [0, 1) : |g(t)| < eps}.
double band_measure(const TrigPoly1D& g, double epsilon, int cells = 0);

struct KacReport {
  double bound = 0.0;           ///< 2 M / beta
  double empirical_sup = 0.0;   ///< sup over the eps schedule of (1/2eps) meas{|g| < eps}
  double sup_epsilon = 0.0;     ///< where the sup was attained
  int degree = 0;
  int check_grid = 0;
};

/// Checks |g| < alpha => |g'| > beta on a fine grid, then returns 2M / beta
/// with the empirical supremum over eps in (0, alpha). Throws HypothesisError
/// if the hypothesis fails at a grid point.
KacReport kac_bound(const TrigPoly1D& g, double alpha, double beta, int check_grid = 0);

struct EnsembleBoundReport {
  double bound = 0.0;  ///< d^{3/2} 2 sqrt(E_max) / beta
  std::vector<std::pair<double, double>> values;  ///< (eps, L_eps)
  bool all_below = true;
  int check_grid = 0;
};

/// Verifies f in E(alpha, beta) on the vertex grid (|f| <= alpha => |grad f| > beta),
/// then evaluates L_eps for each eps < alpha in the schedule and compares with the bound.
EnsembleBoundReport ensemble_bound(const TrigField& f, double alpha, double beta,
                                   std::vector<double> epsilons = {}, int check_grid = 0,
                                   int leray_grid = 0);

/// (alpha, beta) for which f passes the grid membership check: beta is half
/// the smallest |grad f| seen where |f| <= alpha.
std::pair<double, double> fit_regularity(const TrigField& f, double alpha, int check_grid = 0);

struct ConvergenceReport {
  std::vector<std::pair<double, double>> values;  ///< (eps, L_eps)
  std::optional<double> last_difference;          ///< |v_n - v_{n-1}|
  std::optional<double> previous_difference;      ///< |v_{n-1} - v_{n-2}|
  int grid = 0;
};

ConvergenceReport epsilon_convergence(const TrigField& f, const std::vector<double>& schedule,
                                      int grid);

nlohmann::json to_json(const LerayEstimate& e);
/// "method,epsilon,grid,value,error_hint"
std::string csv_header_leray();
std::string to_csv_row(const LerayEstimate& e);
nlohmann::json to_json(const KacReport& r);
nlohmann::json to_json(const EnsembleBoundReport& r);
nlohmann::json to_json(const ConvergenceReport& r);

}  // namespace nodal
