#include "nodal/harness.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "nodal/error.hpp"
#include "nodal/parallel.hpp"

#ifndef NODAL_VERSION
#define NODAL_VERSION "0.0.0"
#endif

namespace nodal {

namespace {

constexpr double kPi = std::numbers::pi;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

LerayMethod resolved_method(const ExperimentConfig& c) {
  if (c.method) return *c.method;
  return c.dim == 2 ? LerayMethod::surface_integral : LerayMethod::epsilon_level;
}

int resolved_grid(const ExperimentConfig& c) {
  return c.grid > 0 ? c.grid : default_leray_grid(c.energy);
}

double resolved_epsilon(const ExperimentConfig& c) {
  return resolved_method(c) == LerayMethod::epsilon_level ? c.epsilon.value_or(1e-3) : 0.0;
}

void validate(const ExperimentConfig& c) {
  if (c.samples < 1) throw DomainError("samples K must be >= 1");
  if (c.dim < 1) throw DomainError("dimension must be >= 1");
  if (c.energy < 1) throw DomainError("energy must be >= 1");
  if (resolved_method(c) == LerayMethod::surface_integral && c.dim != 2)
    throw DomainError("surface estimator requires d = 2");
  if (c.epsilon && !(*c.epsilon > 0.0)) throw DomainError("epsilon must be positive");
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

ExperimentReport run(const ExperimentConfig& config, const LerayEstimator& given, bool with_quadrature) {
  const auto t0 = Clock::now();
  validate(config);
  auto freqs = std::make_shared<const FrequencySet>(enumerate_frequencies(config.dim, config.energy));
  if (freqs->empty())
    throw EmptyEnsembleError("E = " + std::to_string(config.energy) + " has no lattice points in d = " +
                             std::to_string(config.dim));
  if (!check_nondegeneracy(*freqs)) throw PreconditionError("degenerate frequency set");

  ExperimentReport r;
  r.config = config;
  r.method = resolved_method(config);
  r.epsilon = resolved_epsilon(config);
  r.grid = resolved_grid(config);
  r.multiplicity = freqs->multiplicity();
  const LerayEstimator estimator = given ? given : make_estimator(config);

  const std::int64_t K = config.samples;
  std::vector<TrialRecord> trials(static_cast<std::size_t>(K));
  const auto t1 = Clock::now();
  parallel_for(static_cast<std::size_t>(K), resolve_thread_count(config.threads), [&](std::size_t i) {
    auto& rec = trials[i];
    rec.trial = static_cast<std::int64_t>(i);
    rec.stream = i;
    try {
      const auto e = estimator(sample(freqs, config.seed, i));
      rec.value = e.value;
      rec.error_hint = e.error_hint;
      if (!std::isfinite(rec.value)) throw InvariantViolation("non-finite Leray estimate");
      return;
    } catch (const std::exception& ex) {
      rec.error = ex.what();
    }
    rec.retried = true;
    rec.stream = static_cast<std::uint64_t>(K) + i;
    try {
      const auto e = estimator(sample(freqs, config.seed, rec.stream));
      rec.value = e.value;
      rec.error_hint = e.error_hint;
      if (!std::isfinite(rec.value)) throw InvariantViolation("non-finite Leray estimate");
    } catch (const std::exception& ex) {
      rec.value = std::numeric_limits<double>::quiet_NaN();
      rec.error += "; retry: " + std::string(ex.what());
    }
  });
  r.timings.trials_seconds = seconds_since(t1);

  std::int64_t failed_twice = 0;
  for (const auto& t : trials) {
    if (t.retried) ++r.retried;
    if (!std::isfinite(t.value)) ++failed_twice;
  }
  if (r.retried * 100 > K || failed_twice > 0) {
    std::string first;
    for (const auto& t : trials)
      if (t.retried) {
        first = t.error;
        break;
      }
    throw Error("experiment aborted: " + std::to_string(r.retried) + " of " + std::to_string(K) +
                " trials failed (first error: " + first + ")");
  }

  // Ordered reductions.
  double sum = 0.0, sum_sq = 0.0;
  for (const auto& t : trials) {
    sum += t.value;
    sum_sq += t.value * t.value;
  }
  r.completed = K;
  const double n = static_cast<double>(K);
  r.mean = sum / n;
  r.mean_square = sum_sq / n;
  if (K >= 2) {
    double ss = 0.0, ss2 = 0.0;
    for (const auto& t : trials) {
      ss += (t.value - r.mean) * (t.value - r.mean);
      const double q = t.value * t.value - r.mean_square;
      ss2 += q * q;
    }
    r.sample_variance = ss / (n - 1.0);
    r.standard_error = std::sqrt(*r.sample_variance / n);
    r.mean_square_se = std::sqrt(ss2 / (n - 1.0) / n);
  }
  r.predicted_mean = 1.0 / std::sqrt(2.0 * kPi);
  r.predicted_asymptote = 1.0 / (4.0 * kPi * static_cast<double>(r.multiplicity));

  if (with_quadrature) {
    const auto tq = Clock::now();
    QuadratureOptions q = config.quadrature;
    if (q.threads == 0) q.threads = config.threads;
    const auto res = second_moment_quadrature(*freqs, q);
    r.timings.quadrature_seconds = seconds_since(tq);
    r.quadrature_I = res.value;
    r.quadrature_error = res.refinement_error;
    r.predicted_variance = res.value - 1.0 / (2.0 * kPi);
    if (r.mean_square_se) r.combined_se = std::hypot(*r.mean_square_se, res.refinement_error);
  }
  if (r.sample_variance)
    r.variance_times_4piN = *r.sample_variance * 4.0 * kPi * static_cast<double>(r.multiplicity);

  if (config.keep_trials) r.trials = std::move(trials);
  r.timings.total_seconds = seconds_since(t0);
  if (!config.output.empty()) write_report(r, config.output);
  return r;
}

template <class T>
nlohmann::json opt(const std::optional<T>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

}  // namespace

std::string version() { return NODAL_VERSION; }

LerayEstimator make_estimator(const ExperimentConfig& config) {
  const LerayMethod method = resolved_method(config);
  const int grid = resolved_grid(config);
  if (method == LerayMethod::surface_integral)
    return [grid](const RandomEigenfunction& f) { return leray_surface_2d(f, grid); };
  const double eps = resolved_epsilon(config);
  return [grid, eps](const RandomEigenfunction& f) { return leray_epsilon(f, eps, grid); };
}

ExperimentReport run_expectation_experiment(const ExperimentConfig& config, const LerayEstimator& estimator) {
  return run(config, estimator, false);
}

ExperimentReport run_variance_experiment(const ExperimentConfig& config, const LerayEstimator& estimator) {
  return run(config, estimator, true);
}

nlohmann::json to_json(const ExperimentConfig& c) {
  return {{"dim", c.dim},
          {"energy", c.energy},
          {"samples", c.samples},
          {"seed", c.seed},
          {"grid", c.grid},
          {"epsilon", opt(c.epsilon)},
          {"method", c.method ? nlohmann::json(to_string(*c.method)) : nlohmann::json(nullptr)},
          {"output", c.output},
          {"threads", c.threads},
          {"keep_trials", c.keep_trials},
          {"quadrature",
           {{"grid", c.quadrature.grid},
            {"rho", c.quadrature.rho},
            {"use_symmetry", c.quadrature.use_symmetry}}}};
}

ExperimentConfig experiment_config_from_json(const nlohmann::json& j) {
  ExperimentConfig c;
  c.dim = j.value("dim", c.dim);
  c.energy = j.value("energy", c.energy);
  c.samples = j.value("samples", c.samples);
  c.seed = j.value("seed", c.seed);
  c.grid = j.value("grid", c.grid);
  if (j.contains("epsilon") && !j["epsilon"].is_null()) c.epsilon = j["epsilon"].get<double>();
  if (j.contains("method") && !j["method"].is_null()) c.method = parse_leray_method(j["method"].get<std::string>());
  c.output = j.value("output", c.output);
  c.threads = j.value("threads", c.threads);
  c.keep_trials = j.value("keep_trials", c.keep_trials);
  if (j.contains("quadrature")) {
    const auto& q = j["quadrature"];
    c.quadrature.grid = q.value("grid", 0);
    c.quadrature.rho = q.value("rho", 0.0);
    c.quadrature.use_symmetry = q.value("use_symmetry", false);
  }
  return c;
}

nlohmann::json to_json(const ExperimentReport& r, bool include_trials) {
  const nlohmann::json config = to_json(r.config);
  std::ostringstream hash;
  hash << std::hex << fnv1a(config.dump());
  nlohmann::json j = {{"version", version()},
                      {"config", config},
                      {"config_hash", hash.str()},
                      {"method", to_string(r.method)},
                      {"epsilon", r.epsilon},
                      {"grid", r.grid},
                      {"multiplicity", r.multiplicity},
                      {"completed", r.completed},
                      {"retried", r.retried},
                      {"mean", r.mean},
                      {"standard_error", opt(r.standard_error)},
                      {"sample_variance", opt(r.sample_variance)},
                      {"mean_square", r.mean_square},
                      {"mean_square_se", opt(r.mean_square_se)},
                      {"predicted_mean", r.predicted_mean},
                      {"predicted_asymptote", r.predicted_asymptote},
                      {"quadrature_I", opt(r.quadrature_I)},
                      {"quadrature_error", opt(r.quadrature_error)},
                      {"predicted_variance", opt(r.predicted_variance)},
                      {"combined_se", opt(r.combined_se)},
                      {"variance_times_4piN", opt(r.variance_times_4piN)},
                      {"timings",
                       {{"total_seconds", r.timings.total_seconds},
                        {"trials_seconds", r.timings.trials_seconds},
                        {"quadrature_seconds", r.timings.quadrature_seconds}}}};
  if (include_trials && !r.trials.empty()) {
    nlohmann::json t = nlohmann::json::array();
    for (const auto& rec : r.trials) {
      nlohmann::json e = {{"trial", rec.trial}, {"stream", rec.stream}, {"leray", rec.value},
                          {"error_hint", rec.error_hint}};
      if (rec.retried) e["error"] = rec.error;
      t.push_back(std::move(e));
    }
    j["trials"] = std::move(t);
  }
  return j;
}

std::string to_csv(const ExperimentReport& r) {
  std::ostringstream os;
  os.precision(17);
  const std::string method = to_string(r.method);
  os << "trial,leray,method,epsilon,grid\n";
  for (const auto& t : r.trials) os << t.trial << ',' << t.value << ',' << method << ',' << r.epsilon << ',' << r.grid << '\n';
  os << "summary," << r.mean << ',' << method << ',' << r.epsilon << ',' << r.grid << '\n';
  return os.str();
}

void write_report(const ExperimentReport& r, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open report file: " + path);
  if (path.size() >= 4 && path.compare(path.size() - 4, 4, ".csv") == 0) {
    out << to_csv(r);
  } else {
    out << to_json(r).dump(2) << '\n';
  }
  if (!out) throw Error("failed writing report file: " + path);
}

}  // namespace nodal
