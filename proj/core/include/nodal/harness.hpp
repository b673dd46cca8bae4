#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "nodal/ensemble.hpp"
#include "nodal/leray_measure.hpp"
#include "nodal/moments.hpp"

namespace nodal {

/// Library version string.
std::string version();

struct ExperimentConfig {
  int dim = 2;
  std::int64_t energy = 0;
  std::int64_t samples = 1000;
  std::uint64_t seed = 0;
  int grid = 0;                         ///< 0: 16 ceil(sqrt(E)), at least 128
  std::optional<double> epsilon;        ///< epsilon method only; default 1e-3
  std::optional<LerayMethod> method;    ///< default: surface in d = 2, epsilon otherwise
  std::string output;                   ///< report path, empty for none
  int threads = 0;                      ///< 0: LERAY_THREADS or hardware
  bool keep_trials = true;
  QuadratureOptions quadrature{};      ///< used by the variance experiment
};

/// Estimator applied to each sample. The default dispatches on the config.
using LerayEstimator = std::function<LerayEstimate(const RandomEigenfunction&)>;

struct TrialRecord {
  std::int64_t trial = 0;
  std::uint64_t stream = 0;  ///< substream actually used (trial, or K + trial after a retry)
  double value = 0.0;
  double error_hint = 0.0;
  bool retried = false;
  std::string error;  ///< message of the failed first attempt, if any
};

struct ExperimentTimings {
  double total_seconds = 0.0;
  double trials_seconds = 0.0;
  double quadrature_seconds = 0.0;
};

struct ExperimentReport {
  ExperimentConfig config;
  LerayMethod method = LerayMethod::surface_integral;
  double epsilon = 0.0;
  int grid = 0;
  std::size_t multiplicity = 0;
  std::int64_t completed = 0;
  std::int64_t retried = 0;
  std::vector<TrialRecord> trials;  ///< kept when config.keep_trials

  double mean = 0.0;
  std::optional<double> standard_error;  ///< absent for K = 1
  std::optional<double> sample_variance;
  double mean_square = 0.0;
  std::optional<double> mean_square_se;

  double predicted_mean = 0.0;             ///< 1 / sqrt(2 pi)
  double predicted_asymptote = 0.0;        ///< 1 / (4 pi N)
  std::optional<double> quadrature_I;      ///< second moment by quadrature
  std::optional<double> quadrature_error;  ///< its refinement error
  std::optional<double> predicted_variance;  ///< I - 1/(2 pi)
  std::optional<double> combined_se;         ///< sqrt(mean_square_se^2 + quadrature_error^2)
  std::optional<double> variance_times_4piN;

  ExperimentTimings timings;
};

/// K samples on substreams 0..K-1 of the master seed. A trial whose estimate
/// throws is redrawn once on substream K + t; more than 1% of such trials
/// aborts the run. Aggregation is in trial order, so results do not depend on
/// the thread count.
ExperimentReport run_expectation_experiment(const ExperimentConfig& config,
                                            const LerayEstimator& estimator = {});

/// As above, plus the quadrature second moment and the variance comparisons.
ExperimentReport run_variance_experiment(const ExperimentConfig& config,
                                         const LerayEstimator& estimator = {});

/// Default estimator for the config (method, epsilon and grid resolved).
LerayEstimator make_estimator(const ExperimentConfig& config);

nlohmann::json to_json(const ExperimentConfig& c);
ExperimentConfig experiment_config_from_json(const nlohmann::json& j);
/// Report JSON; timings live under "timings" so the rest is reproducible byte for byte.
nlohmann::json to_json(const ExperimentReport& r, bool include_trials = true);

/// trial,leray,method,epsilon,grid rows and a final summary row.
std::string to_csv(const ExperimentReport& r);

/// Writes JSON, or CSV when the path ends in ".csv".
void write_report(const ExperimentReport& r, const std::string& path);

}  // namespace nodal
