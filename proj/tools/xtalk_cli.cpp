// xtalk: command-line front end for topology export, simulation, envelope
// fitting, sweeps and T2(L) scaling fits.

#include <cmath>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "xtalk/errors.hpp"
#include "xtalk/fitting.hpp"
#include "xtalk/io.hpp"
#include "xtalk/runner.hpp"
#include "xtalk/topology.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitIo = 4;

using nlohmann::json;

struct TopologyArgs {
  std::string unit = "node";
  std::string config = "chain";
  std::string composition = "linked";
  int n_units = 4;
  std::string dot;
  std::string json_out;
};

struct SimulateArgs {
  std::string config;
  std::string out = "-";
};

struct FitArgs {
  std::string in;
  std::string side = "upper";
  std::string out = "-";
};

struct SweepArgs {
  std::string config;
  std::string out = "-";
};

struct ScalingArgs {
  std::string in;
  std::string out = "-";
};

int run_topology(const TopologyArgs& a) {
  const xtalk::QubitGraph g =
      xtalk::build_graph(xtalk::parse_unit(a.unit), xtalk::parse_config(a.config), a.n_units,
                         xtalk::parse_composition(a.composition));
  const std::string json_text = xtalk::graph_to_json(g).dump(2) + "\n";
  if (a.dot.empty() && a.json_out.empty()) {
    xtalk::atomic_write("-", json_text);
    return kExitOk;
  }
  if (!a.dot.empty()) xtalk::atomic_write(a.dot, xtalk::export_dot(g));
  if (!a.json_out.empty()) xtalk::atomic_write(a.json_out, json_text);
  return kExitOk;
}

int run_simulate(const SimulateArgs& a, std::size_t workers) {
  const xtalk::ExperimentConfig cfg = xtalk::parse_config_text(xtalk::read_text(a.config));
  const xtalk::AveragedSeries series = xtalk::run_experiment(cfg, {workers});
  std::ostringstream out;
  xtalk::write_series_csv(out, series);
  xtalk::atomic_write(a.out, out.str());
  return kExitOk;
}

xtalk::EnvelopeSide parse_side(const std::string& s) {
  if (s == "upper") return xtalk::EnvelopeSide::kUpper;
  if (s == "lower") return xtalk::EnvelopeSide::kLower;
  throw xtalk::ConfigError("--side must be upper or lower, got '" + s + "'");
}

int run_fit(const FitArgs& a) {
  std::istringstream in(xtalk::read_text(a.in));
  const xtalk::AveragedSeries series = xtalk::read_series_csv(in);
  const xtalk::EnvelopeFit fit = xtalk::fit_series(series, parse_side(a.side));
  xtalk::atomic_write(a.out, xtalk::to_json(fit).dump(2) + "\n");
  if (!fit.converged) {
    std::cerr << "xtalk fit: envelope fit did not converge (no resolvable decay)\n";
    return kExitNumerical;
  }
  return kExitOk;
}

int run_sweep(const SweepArgs& a, std::size_t workers) {
  const xtalk::SweepSpec spec = xtalk::parse_sweep_text(xtalk::read_text(a.config));
  const xtalk::SweepResult result = xtalk::run_sweep(spec, {workers});
  for (const auto& s : result.skipped) {
    std::cerr << "skipped L=" << s.size << " sigma=" << s.sigma << " alpha_noise=" << s.alpha_noise
              << ": " << s.reason << "\n";
  }
  for (const auto& r : result.rows) {
    if (!r.note.empty()) std::cerr << "L=" << r.size << ": " << r.note << "\n";
  }
  std::ostringstream out;
  xtalk::write_sweep_csv(out, result.rows);
  xtalk::atomic_write(a.out, out.str());
  return kExitOk;
}

int run_scaling(const ScalingArgs& a) {
  std::istringstream in(xtalk::read_text(a.in));
  const auto rows = xtalk::read_sweep_csv(in);
  using Key = std::tuple<std::string, std::string, double, double>;
  std::map<Key, std::vector<xtalk::ScalingPoint>> groups;
  std::vector<Key> order;
  for (const auto& r : rows) {
    if (!r.converged || !std::isfinite(r.t2)) continue;
    const Key key{r.unit, r.config, r.sigma, r.alpha_noise};
    auto [it, inserted] = groups.try_emplace(key);
    if (inserted) order.push_back(key);
    it->second.push_back({static_cast<double>(r.size), r.t2});
  }
  json out = json::array();
  for (const auto& key : order) {
    const auto& pts = groups.at(key);
    if (pts.size() < 3) {
      std::cerr << "skipping " << std::get<0>(key) << " " << std::get<1>(key)
                << ": fewer than 3 converged sizes\n";
      continue;
    }
    json entry = xtalk::to_json(xtalk::fit_power_law(pts));
    entry["unit"] = std::get<0>(key);
    entry["config"] = std::get<1>(key);
    entry["sigma"] = std::get<2>(key);
    entry["alpha_noise"] = std::get<3>(key);
    out.push_back(std::move(entry));
  }
  if (out.empty()) throw xtalk::NumericalError("no group has 3 or more converged sizes");
  xtalk::atomic_write(a.out, out.dump(2) + "\n");
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Crosstalk decoherence simulator for Heisenberg-coupled qubit networks"};
  app.require_subcommand(1);
  std::size_t workers = 0;
  app.add_option("--workers", workers, "Worker threads (0: XTALK_WORKERS or all cores)");

  TopologyArgs topo;
  auto* topology = app.add_subcommand("topology", "Build a qubit graph and export it");
  topology->add_option("--unit", topo.unit, "node | stick | triangle")->required();
  topology->add_option("--config", topo.config, "chain | ring | tree")->required();
  topology->add_option("--n-units", topo.n_units, "Number of elementary units")->required();
  topology->add_option("--composition", topo.composition, "linked | shared_strip (triangle)");
  topology->add_option("--dot", topo.dot, "Graphviz output path ('-' for stdout)");
  topology->add_option("--json", topo.json_out, "JSON output path ('-' for stdout)");

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Monte-Carlo average of P(t) and S(t)");
  simulate->add_option("--config", sim.config, "Experiment config JSON")->required();
  simulate->add_option("--out", sim.out, "Series CSV path ('-' for stdout)");

  FitArgs fa;
  auto* fit = app.add_subcommand("fit", "Fit the envelope of a series CSV");
  fit->add_option("--in", fa.in, "Series CSV")->required();
  fit->add_option("--side", fa.side, "upper | lower");
  fit->add_option("--out", fa.out, "Fit JSON path ('-' for stdout)");

  SweepArgs sw;
  auto* sweep = app.add_subcommand("sweep", "Run and fit a grid of experiments");
  sweep->add_option("--config", sw.config, "Sweep JSON")->required();
  sweep->add_option("--out", sw.out, "Sweep CSV path ('-' for stdout)");

  ScalingArgs sc;
  auto* scaling = app.add_subcommand("scaling", "Power-law fit of T2 against L");
  scaling->add_option("--in", sc.in, "Sweep CSV")->required();
  scaling->add_option("--out", sc.out, "Power-law JSON path ('-' for stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*topology) return run_topology(topo);
    if (*simulate) return run_simulate(sim, workers);
    if (*fit) return run_fit(fa);
    if (*sweep) return run_sweep(sw, workers);
    if (*scaling) return run_scaling(sc);
  } catch (const xtalk::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const xtalk::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const xtalk::IoError& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return kExitIo;
  }
  return kExitConfig;
}
