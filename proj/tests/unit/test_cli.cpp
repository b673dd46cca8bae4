#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "nodal/cli.hpp"

using namespace nodal;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli_main(args, out, err);
  return {code, out.str(), err.str()};
}

}  // namespace

TEST_CASE("lattice") {
  const auto r = run({"lattice", "--dim", "2", "--energy", "325", "--format", "json"});
  CHECK(r.code == 0);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j["multiplicity"] == 24);
  CHECK(j["multiplicity_formula"] == 24);
  const auto csv = run({"lattice", "-E", "5", "--format", "csv", "--half-dual"});
  CHECK(csv.code == 0);
  CHECK(csv.out.find("2,5,8,1") != std::string::npos);
}

TEST_CASE("usage errors exit 2") {
  CHECK(run({}).code == 2);
  CHECK(run({"lattice", "--bogus"}).code == 2);
  CHECK(run({"nosuch"}).code == 2);
  CHECK(run({"leray", "-E", "5", "--method", "magic"}).code == 2);
  const auto r = run({"experiment"});
  CHECK(r.code == 2);
  CHECK(run({"--help"}).code == 0);
}

TEST_CASE("runtime errors exit 1") {
  const auto r = run({"moments", "--dim", "2", "--energy", "1"});
  CHECK(r.code == 1);
  CHECK(r.err.find("degenerate frequency set") != std::string::npos);
  CHECK(run({"sample", "-E", "3"}).code == 1);
}

TEST_CASE("sample, leray, moments and singular") {
  const auto s = run({"sample", "-E", "5", "--seed", "3"});
  CHECK(s.code == 0);
  CHECK(nlohmann::json::parse(s.out)["coeffs"].size() == 4);
  const auto l = run({"leray", "-E", "25", "--seed", "3", "--grid", "128"});
  CHECK(l.code == 0);
  CHECK(nlohmann::json::parse(l.out)["method"] == "surface_integral");
  const auto le = run({"leray", "-E", "25", "--method", "epsilon", "--epsilon", "0.001", "--format", "csv"});
  CHECK(le.code == 0);
  CHECK(le.out.rfind("method,epsilon,grid", 0) == 0);
  const auto m = run({"moments", "-E", "5"});
  CHECK(m.code == 0);
  CHECK(nlohmann::json::parse(m.out)["u4"] == "21/512");
  const auto g = run({"singular", "-E", "5", "--samples", "1000", "--total"});
  CHECK(g.code == 0);
  const auto gj = nlohmann::json::parse(g.out);
  CHECK(gj["u_bounds"]["holds"] == true);
  CHECK(gj["decomposition"]["counts"]["positive"].get<int>() > 0);
}

TEST_CASE("experiment writes a report") {
  const auto path = std::filesystem::path("experiment_d2_E5_seed7.json");
  std::filesystem::remove(path);
  const auto r = run({"experiment", "--dim", "2", "--energy", "5", "--samples", "100", "--seed", "7"});
  CHECK(r.code == 0);
  REQUIRE(std::filesystem::exists(path));
  std::ifstream in(path);
  const auto j = nlohmann::json::parse(in);
  CHECK(j["completed"] == 100);
  CHECK(j["trials"].size() == 100);

  const auto cfg = std::filesystem::path("cli_test_config.json");
  std::ofstream(cfg) << R"({"dim": 2, "energy": 25, "samples": 3, "seed": 2, "output": "cli_test_report.csv"})";
  const auto c = run({"experiment", "--config", cfg.string(), "--format", "csv"});
  CHECK(c.code == 0);
  CHECK(std::filesystem::exists("cli_test_report.csv"));
  std::filesystem::remove(cfg);
  std::filesystem::remove("cli_test_report.csv");
  std::filesystem::remove(path);
}
