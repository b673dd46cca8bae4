#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "nodal/error.hpp"
#include "nodal/harness.hpp"

using namespace nodal;

namespace {

ExperimentConfig small_config() {
  ExperimentConfig c;
  c.dim = 2;
  c.energy = 5;
  c.samples = 40;
  c.seed = 7;
  c.threads = 1;
  return c;
}

}  // namespace

TEST_CASE("constant stub estimator has zero variance") {
  auto c = small_config();
  c.samples = 25;
  const auto r = run_variance_experiment(c, [](const RandomEigenfunction&) {
    return LerayEstimate{0.25, LerayMethod::surface_integral, 0.0, 1, 0.0, {}};
  });
  CHECK(r.mean == 0.25);
  REQUIRE(r.sample_variance);
  CHECK(*r.sample_variance == 0.0);
  CHECK(*r.standard_error == 0.0);
  CHECK(r.quadrature_I.has_value());
  CHECK(*r.predicted_variance == doctest::Approx(0.17858183361214708 - 1 / (2 * std::numbers::pi)).epsilon(1e-6));
}

TEST_CASE("K = 1 leaves the standard error absent") {
  auto c = small_config();
  c.samples = 1;
  const auto r = run_expectation_experiment(c);
  CHECK_FALSE(r.standard_error.has_value());
  CHECK_FALSE(r.sample_variance.has_value());
  CHECK(to_json(r)["standard_error"].is_null());
}

TEST_CASE("mean equals the mean of per-trial values") {
  const auto r = run_expectation_experiment(small_config());
  REQUIRE(r.trials.size() == 40);
  double s = 0;
  for (const auto& t : r.trials) s += t.value;
  CHECK(r.mean == s / 40.0);
  for (const auto& t : r.trials) {
    const auto f = sample(std::make_shared<const FrequencySet>(enumerate_frequencies(2, 5)), 7, t.stream);
    CHECK(t.value == leray_surface_2d(f, r.grid).value);
  }
  CHECK(r.standard_error.value() > 0.0);
}

TEST_CASE("reports are reproducible across thread counts") {
  auto a = small_config();
  auto b = small_config();
  b.threads = 3;
  const auto ra = run_expectation_experiment(a);
  const auto rb = run_expectation_experiment(b);
  auto ja = to_json(ra, true);
  auto jb = to_json(rb, true);
  ja.erase("timings");
  jb.erase("timings");
  ja["config"].erase("threads");
  jb["config"].erase("threads");
  ja.erase("config_hash");
  jb.erase("config_hash");
  CHECK(ja.dump() == jb.dump());
  const auto rc = run_expectation_experiment(a);
  auto jc = to_json(rc, true);
  jc.erase("timings");
  jc["config"].erase("threads");
  jc.erase("config_hash");
  CHECK(ja.dump() == jc.dump());
}

TEST_CASE("order independence of the aggregates") {
  auto c = small_config();
  const auto r = run_expectation_experiment(c);
  std::vector<double> v;
  for (const auto& t : r.trials) v.push_back(t.value);
  std::reverse(v.begin(), v.end());
  double s = 0;
  for (double x : v) s += x;
  CHECK(std::abs(s / v.size() - r.mean) <= 1e-12);
}

TEST_CASE("failed trials are retried once, then abort past 1%") {
  auto c = small_config();
  c.samples = 200;
  const auto once = run_expectation_experiment(c, [](const RandomEigenfunction& f) {
    if (f.stream() == 17) throw ResolutionError("stub failure");
    return LerayEstimate{1.0, LerayMethod::surface_integral, 0.0, 1, 0.0, {}};
  });
  CHECK(once.retried == 1);
  CHECK(once.trials[17].stream == 217);
  CHECK(once.trials[17].retried);
  CHECK(once.mean == 1.0);
  CHECK_THROWS_AS(run_expectation_experiment(c,
                                             [](const RandomEigenfunction& f) {
                                               if (f.stream() % 50 == 3) throw ResolutionError("stub failure");
                                               return LerayEstimate{1.0, LerayMethod::surface_integral, 0.0, 1, 0.0, {}};
                                             }),
                  Error);
}

TEST_CASE("config validation") {
  auto c = small_config();
  c.samples = 0;
  CHECK_THROWS_AS(run_expectation_experiment(c), DomainError);
  c = small_config();
  c.energy = 3;
  CHECK_THROWS_AS(run_expectation_experiment(c), EmptyEnsembleError);
  c.energy = 1;
  CHECK_THROWS_AS(run_expectation_experiment(c), PreconditionError);
  c = small_config();
  c.dim = 3;
  c.energy = 5;
  c.method = LerayMethod::surface_integral;
  CHECK_THROWS_AS(run_expectation_experiment(c), DomainError);
}

TEST_CASE("epsilon method in three dimensions") {
  ExperimentConfig c;
  c.dim = 3;
  c.energy = 5;
  c.samples = 4;
  c.threads = 1;
  c.grid = 32;
  const auto r = run_expectation_experiment(c);
  CHECK(r.method == LerayMethod::epsilon_level);
  CHECK(r.epsilon == 1e-3);
  CHECK(std::isfinite(r.mean));
}

TEST_CASE("config and report files") {
  auto c = small_config();
  c.epsilon = 2e-3;
  c.method = LerayMethod::epsilon_level;
  const auto back = experiment_config_from_json(to_json(c));
  CHECK(to_json(back) == to_json(c));

  const auto dir = std::filesystem::temp_directory_path();
  const auto json_path = (dir / "nodal_harness_test.json").string();
  const auto csv_path = (dir / "nodal_harness_test.csv").string();
  c = small_config();
  c.samples = 5;
  c.output = json_path;
  const auto r = run_expectation_experiment(c);
  std::ifstream in(json_path);
  const auto j = nlohmann::json::parse(in);
  CHECK(j["mean"] == r.mean);
  CHECK(j["version"] == version());
  CHECK(j["trials"].size() == 5);
  write_report(r, csv_path);
  std::ifstream csv(csv_path);
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(csv, line)) lines.push_back(line);
  REQUIRE(lines.size() == 7);
  CHECK(lines[0] == "trial,leray,method,epsilon,grid");
  CHECK(lines[6].rfind("summary,", 0) == 0);
  std::filesystem::remove(json_path);
  std::filesystem::remove(csv_path);
}
