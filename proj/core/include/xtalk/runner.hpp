#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json_fwd.hpp>

#include "xtalk/fitting.hpp"
#include "xtalk/noise.hpp"
#include "xtalk/series.hpp"
#include "xtalk/topology.hpp"

namespace xtalk {

enum class InitialState { kNeel, kGhz };

struct ExperimentConfig {
  UnitKind unit = UnitKind::kNode;
  ConfigKind config = ConfigKind::kChain;
  CompositionRule composition = CompositionRule::kLinked;
  int n_units = 4;

  double j0 = 100.0;   // 1/t0
  double sigma = 0.5;  // 1/t0
  double e_z = 0.0;    // 1/t0
  NoiseKind noise = NoiseKind::kQuasiStatic;
  double alpha_noise = 2.0;

  InitialState initial_state = InitialState::kNeel;
  std::size_t n_realizations = 1000;
  std::uint64_t seed = 1;

  // Time grid. With adaptive_t_max the run stops once the fitted crest
  // envelope is within 5% of its asymptote; t_max is then only a cap.
  // Dynamic noise always runs to t_max.
  double t_max = 5.0;
  double dt = 5e-4;
  bool adaptive_t_max = true;
  double dt_step = 1e-3;

  // Entropy subsystem; defaults to the first ceil(L/2) qubits.
  std::optional<std::vector<int>> partition;
  bool want_p = true;
  bool want_s = false;
  // Evolve magnetization sectors separately (exact for this Hamiltonian).
  bool use_sector = true;

  NoiseSpec noise_spec() const;
  QubitGraph graph() const;
  // Throws ConfigError for any infeasible setting, before any simulation.
  void validate() const;
};

ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ExperimentConfig& cfg);

// Parse a JSON document; errors carry the line of the offending key or token.
ExperimentConfig parse_config_text(std::string_view text);

struct RunOptions {
  // 0 selects XTALK_WORKERS from the environment, else the hardware thread count.
  std::size_t workers = 0;
};

std::size_t resolve_worker_count(std::size_t requested);

// Build the initial state vector in the full 2^L space.
Eigen::VectorXcd initial_state_vector(const ExperimentConfig& cfg, int num_qubits);

// Monte-Carlo average of P(t) (and S(t) if requested) over n_realizations
// noise draws. Realization k uses RngStream(seed, k); reductions run in
// ascending k, so the result depends only on cfg.
AveragedSeries run_experiment(const ExperimentConfig& cfg, const RunOptions& options = {});

struct SweepSpec {
  ExperimentConfig base;
  std::vector<int> sizes;         // L; empty keeps the template's n_units
  std::vector<double> sigmas;     // empty keeps the template's sigma
  std::vector<double> alphas;     // empty keeps the template's alpha_noise
  EnvelopeSide side = EnvelopeSide::kUpper;
};

struct SweepRow {
  UnitKind unit = UnitKind::kNode;
  ConfigKind config = ConfigKind::kChain;
  int size = 0;
  double sigma = 0.0;
  double alpha_noise = 0.0;
  EnvelopeFit fit;
  std::string note;  // set when the fit could not be attempted
};

struct SkippedCell {
  int size = 0;
  double sigma = 0.0;
  double alpha_noise = 0.0;
  std::string reason;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::vector<SkippedCell> skipped;
};

// Envelope fit of run_experiment for every (L, sigma, alpha) cell, in that
// nesting order. Invalid cells are skipped with a reason; throws ConfigError
// if every cell is invalid.
SweepResult run_sweep(const SweepSpec& spec, const RunOptions& options = {});

// Envelope extraction plus fit on one averaged series, with the branch that
// matches the side (upper -> +).
EnvelopeFit fit_series(const AveragedSeries& series, EnvelopeSide side = EnvelopeSide::kUpper);

SweepSpec sweep_from_json(const nlohmann::json& j);
SweepSpec parse_sweep_text(std::string_view text);

std::string_view to_string(NoiseKind kind);
std::string_view to_string(InitialState state);

}  // namespace xtalk
