#include "nodal/cli.hpp"

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "nodal/ensemble.hpp"
#include "nodal/error.hpp"
#include "nodal/harness.hpp"
#include "nodal/lattice.hpp"
#include "nodal/leray_measure.hpp"
#include "nodal/moments.hpp"
#include "nodal/singular.hpp"

namespace nodal {

namespace {

struct Output {
  std::string format = "json";
  std::string path;

  void emit(std::ostream& out, const std::string& text) const {
    if (path.empty()) {
      out << text;
      if (!text.empty() && text.back() != '\n') out << '\n';
      return;
    }
    std::ofstream f(path);
    if (!f) throw Error("cannot open output file: " + path);
    f << text;
    if (!text.empty() && text.back() != '\n') f << '\n';
  }
};

void add_output(CLI::App* cmd, Output& o) {
  cmd->add_option("--format", o.format, "Output format")->check(CLI::IsMember({"json", "csv"}));
  cmd->add_option("-o,--output", o.path, "Write to file instead of stdout");
}

struct Problem {
  int dim = 2;
  std::int64_t energy = 0;
};

void add_problem(CLI::App* cmd, Problem& p) {
  cmd->add_option("-d,--dim", p.dim, "Torus dimension")->check(CLI::Range(1, 16));
  cmd->add_option("-E,--energy", p.energy, "Energy E = |lambda|^2")->required()->check(CLI::PositiveNumber);
}

std::string csv_line(const std::vector<std::string>& header, const std::vector<std::string>& row) {
  std::ostringstream os;
  for (std::size_t i = 0; i < header.size(); ++i) os << (i ? "," : "") << header[i];
  os << '\n';
  for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << row[i];
  os << '\n';
  return os.str();
}

template <class T>
std::string str(const T& v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

FrequencySet nonempty(const Problem& p) {
  auto fs = enumerate_frequencies(p.dim, p.energy);
  if (fs.empty())
    throw EmptyEnsembleError("E = " + std::to_string(p.energy) + " has no lattice points in d = " +
                             std::to_string(p.dim));
  return fs;
}

}  // namespace

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Nodal statistics of arithmetic random waves on the torus", "nodal"};
  app.set_version_flag("--version", version());
  app.require_subcommand(1);

  // lattice
  Problem lp;
  Output lo;
  bool with_half_dual = false;
  auto* lattice = app.add_subcommand("lattice", "Enumerate the frequency set and its invariants");
  add_problem(lattice, lp);
  add_output(lattice, lo);
  lattice->add_flag("--half-dual", with_half_dual, "Include the set B");

  // sample
  Problem sp;
  Output so;
  std::uint64_t s_seed = 0, s_stream = 0;
  auto* samp = app.add_subcommand("sample", "Draw one random eigenfunction");
  add_problem(samp, sp);
  add_output(samp, so);
  samp->add_option("--seed", s_seed, "Master seed");
  samp->add_option("--stream", s_stream, "Substream index");

  // leray
  Problem rp;
  Output ro;
  std::uint64_t r_seed = 0, r_stream = 0;
  std::string r_method;
  double r_eps = 1e-3;
  int r_grid = 0;
  auto* leray = app.add_subcommand("leray", "Leray measure of one sample");
  add_problem(leray, rp);
  add_output(leray, ro);
  leray->add_option("--seed", r_seed, "Master seed");
  leray->add_option("--stream", r_stream, "Substream index");
  leray->add_option("--method", r_method, "surface or epsilon")
      ->check(CLI::IsMember({"surface", "epsilon", "surface_integral", "epsilon_level"}));
  leray->add_option("--epsilon", r_eps, "Band half-width")->check(CLI::PositiveNumber);
  leray->add_option("--grid", r_grid, "Grid points per axis")->check(CLI::NonNegativeNumber);

  // moments
  Problem mp;
  Output mo;
  QuadratureOptions m_opts;
  auto* moments = app.add_subcommand("moments", "Second moment and variance decomposition");
  add_problem(moments, mp);
  add_output(moments, mo);
  moments->add_option("--grid", m_opts.grid, "Quadrature grid per axis")->check(CLI::NonNegativeNumber);
  moments->add_option("--rho", m_opts.rho, "Excision radius")->check(CLI::NonNegativeNumber);
  moments->add_flag("--symmetric", m_opts.use_symmetry, "Sum over a fundamental domain");
  moments->add_option("--threads", m_opts.threads, "Worker threads");

  // singular
  Problem gp;
  Output go;
  int g_M = 0, g_probes = 3, g_nodes = 16;
  std::int64_t g_samples = 0;
  std::uint64_t g_seed = 0;
  bool g_total = false;
  std::size_t g_witnesses = 64;
  auto* singular = app.add_subcommand("singular", "Singular cubes, u-bounds and cube integrals");
  add_problem(singular, gp);
  add_output(singular, go);
  singular->add_option("-M,--cubes", g_M, "Cubes per axis (0: default)")->check(CLI::NonNegativeNumber);
  singular->add_option("--probes", g_probes, "Probes per axis per cube")->check(CLI::PositiveNumber);
  singular->add_option("--samples", g_samples, "Random points for the u-bounds check")->check(CLI::NonNegativeNumber);
  singular->add_option("--seed", g_seed, "Seed for the u-bounds check");
  singular->add_flag("--total", g_total, "Integrate over all singular cubes");
  singular->add_option("--nodes", g_nodes, "Gauss nodes per direction for cube integrals")->check(CLI::PositiveNumber);
  singular->add_option("--witnesses", g_witnesses, "Maximum witnesses listed");

  // experiment
  Problem ep;
  ExperimentConfig ec;
  std::string e_method, e_config, e_format = "json";
  double e_eps = 0.0;
  bool e_variance = false, e_no_trials = false;
  auto* exper = app.add_subcommand("experiment", "Monte Carlo experiment over K samples");
  exper->add_option("-d,--dim", ep.dim, "Torus dimension")->check(CLI::Range(1, 16));
  exper->add_option("-E,--energy", ep.energy, "Energy")->check(CLI::PositiveNumber);
  exper->add_option("-K,--samples", ec.samples, "Number of samples")->check(CLI::PositiveNumber);
  exper->add_option("--seed", ec.seed, "Master seed");
  exper->add_option("--grid", ec.grid, "Estimator grid")->check(CLI::NonNegativeNumber);
  exper->add_option("--epsilon", e_eps, "Band half-width (epsilon method)")->check(CLI::PositiveNumber);
  exper->add_option("--method", e_method, "surface or epsilon")
      ->check(CLI::IsMember({"surface", "epsilon", "surface_integral", "epsilon_level"}));
  exper->add_option("-o,--output", ec.output, "Report path (.json or .csv)");
  exper->add_option("--threads", ec.threads, "Worker threads");
  exper->add_option("--config", e_config, "JSON config file; flags override it")->check(CLI::ExistingFile);
  exper->add_flag("--variance", e_variance, "Add the quadrature second moment and variance comparisons");
  exper->add_flag("--no-trials", e_no_trials, "Omit per-trial values from the report");
  exper->add_option("--format", e_format, "Summary format on stdout")->check(CLI::IsMember({"json", "csv"}));

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::CallForVersion&) {
    out << version() << '\n';
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n";
    const auto subs = app.get_subcommands();
    err << (subs.empty() ? app.help() : subs.front()->help());
    return 2;
  }

  try {
    if (*lattice) {
      const auto fs = enumerate_frequencies(lp.dim, lp.energy);
      auto j = to_json(fs);
      j["nondegenerate"] = !fs.empty() && check_nondegeneracy(fs);
      if (!fs.empty()) {
        j["four_tuple_count"] = four_tuple_count(fs).str();
        j["u4"] = to_string(u_fourth_moment(fs));
      }
      if (lp.dim == 2) j["multiplicity_formula"] = multiplicity_formula_2d(lp.energy);
      if (with_half_dual && !fs.empty()) j["half_dual"] = to_json(half_dual_set(fs));
      if (lo.format == "csv") {
        lo.emit(out, csv_line({"dim", "energy", "multiplicity", "nondegenerate"},
                              {str(lp.dim), str(lp.energy), str(fs.multiplicity()),
                               j["nondegenerate"].get<bool>() ? "1" : "0"}));
      } else {
        lo.emit(out, j.dump(2));
      }
    } else if (*samp) {
      const auto fs = std::make_shared<const FrequencySet>(nonempty(sp));
      const auto f = sample(fs, s_seed, s_stream);
      if (so.format == "csv") {
        std::ostringstream os;
        os.precision(17);
        os << "lambda,b,c\n";
        for (std::size_t i = 0; i < fs->representatives.size(); ++i) {
          const auto& r = fs->representatives[i];
          os << '"';
          for (std::size_t k = 0; k < r.size(); ++k) os << (k ? " " : "") << r[k];
          os << "\"," << f.coeffs()[i].first << ',' << f.coeffs()[i].second << '\n';
        }
        so.emit(out, os.str());
      } else {
        so.emit(out, to_json(f).dump(2));
      }
    } else if (*leray) {
      const auto fs = std::make_shared<const FrequencySet>(nonempty(rp));
      const auto f = sample(fs, r_seed, r_stream);
      const LerayMethod method = r_method.empty()
                                     ? (rp.dim == 2 ? LerayMethod::surface_integral : LerayMethod::epsilon_level)
                                     : parse_leray_method(r_method);
      const int grid = r_grid > 0 ? r_grid : default_leray_grid(fs->max_energy);
      const auto e = method == LerayMethod::surface_integral ? leray_surface_2d(f, grid)
                                                            : leray_epsilon(f, r_eps, grid);
      if (ro.format == "csv") {
        ro.emit(out, csv_header_leray() + "\n" + to_csv_row(e) + "\n");
      } else {
        auto j = to_json(e);
        j["seed"] = r_seed;
        j["stream"] = r_stream;
        ro.emit(out, j.dump(2));
      }
    } else if (*moments) {
      const auto fs = nonempty(mp);
      const auto r = variance_decomposition(fs, m_opts);
      if (mo.format == "csv") {
        mo.emit(out, csv_header_moments() + "\n" + to_csv_row(r) + "\n");
      } else {
        mo.emit(out, to_json(r).dump(2));
      }
    } else if (*singular) {
      const auto fs = nonempty(gp);
      const auto dec = classify_cubes(fs, g_M, g_probes);
      nlohmann::json j = {{"decomposition", to_json(dec, g_witnesses)}};
      j["u4"] = u_fourth_moment(fs).convert_to<double>();
      j["measB_bound"] = 65536.0 * j["u4"].get<double>();
      if (g_samples > 0) j["u_bounds"] = to_json(u_bounds_check(fs, dec, g_samples, g_seed, true));
      if (g_total) j["total"] = to_json(singular_total(fs, dec, g_nodes));
      if (go.format == "csv") {
        go.emit(out, csv_line({"dim", "energy", "M", "positive", "negative", "regular", "measB"},
                              {str(gp.dim), str(gp.energy), str(dec.M), str(dec.positive), str(dec.negative),
                               str(dec.regular), str(dec.measB())}));
      } else {
        go.emit(out, j.dump(2));
      }
    } else if (*exper) {
      if (!e_config.empty()) {
        std::ifstream f(e_config);
        const auto base = experiment_config_from_json(nlohmann::json::parse(f));
        ExperimentConfig merged = base;
        auto given = [&](const char* name) { return exper->count(name) > 0; };
        if (given("--dim")) merged.dim = ep.dim;
        if (given("--energy")) merged.energy = ep.energy;
        if (given("--samples")) merged.samples = ec.samples;
        if (given("--seed")) merged.seed = ec.seed;
        if (given("--grid")) merged.grid = ec.grid;
        if (given("--output")) merged.output = ec.output;
        if (given("--threads")) merged.threads = ec.threads;
        ec = merged;
      } else {
        if (ep.energy <= 0) {
          err << "error: --energy is required (or --config)\n\n" << exper->help();
          return 2;
        }
        ec.dim = ep.dim;
        ec.energy = ep.energy;
      }
      if (!e_method.empty()) ec.method = parse_leray_method(e_method);
      if (exper->count("--epsilon") > 0) ec.epsilon = e_eps;
      if (e_no_trials) ec.keep_trials = false;
      if (ec.output.empty())
        ec.output = "experiment_d" + std::to_string(ec.dim) + "_E" + std::to_string(ec.energy) + "_seed" +
                    std::to_string(ec.seed) + ".json";
      const auto r = e_variance ? run_variance_experiment(ec) : run_expectation_experiment(ec);
      if (e_format == "csv") {
        out << "dim,energy,N,K,method,grid,mean,se,variance,report\n"
            << ec.dim << ',' << ec.energy << ',' << r.multiplicity << ',' << r.completed << ','
            << to_string(r.method) << ',' << r.grid << ',' << str(r.mean) << ','
            << (r.standard_error ? str(*r.standard_error) : "") << ','
            << (r.sample_variance ? str(*r.sample_variance) : "") << ',' << ec.output << '\n';
      } else {
        auto j = to_json(r, false);
        j["report"] = ec.output;
        out << j.dump(2) << '\n';
      }
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

int cli_main(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return cli_main(args, std::cout, std::cerr);
}

}  // namespace nodal
