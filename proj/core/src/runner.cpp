#include "xtalk/runner.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <limits>
#include <mutex>
#include <string>
#include <thread>

#include "xtalk/dynamics.hpp"
#include "xtalk/errors.hpp"
#include "xtalk/observables.hpp"
#include "xtalk/spin_ops.hpp"

namespace xtalk {

namespace {

constexpr double kAdaptiveChunk = 0.25;      // t0 per adaptive time block
constexpr double kAdaptiveResidual = 0.05;   // stop once exp(-(t/T2)^a) < this
constexpr double kAdaptiveMinTime = 1.0;     // t0 before the first stop check

// Runs fn(k) for k in [begin, end) on up to `workers` threads. The first
// exception thrown by any task is rethrown after all threads have joined.
template <typename Fn>
void parallel_for(std::size_t begin, std::size_t end, std::size_t workers, Fn&& fn) {
  const std::size_t count = end > begin ? end - begin : 0;
  if (count == 0) return;
  const std::size_t n_threads = std::min(workers, count);
  if (n_threads <= 1) {
    for (std::size_t k = begin; k < end; ++k) fn(k);
    return;
  }
  std::atomic<std::size_t> next{begin};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto body = [&] {
    for (;;) {
      const std::size_t k = next.fetch_add(1);
      if (k >= end) return;
      try {
        fn(k);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next.store(end);
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(n_threads - 1);
  for (std::size_t i = 1; i < n_threads; ++i) pool.emplace_back(body);
  body();
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

// Per-time Welford accumulator; samples must be pushed in realization order.
class Accumulator {
 public:
  void resize(std::size_t n) {
    mean_.resize(n, 0.0);
    m2_.resize(n, 0.0);
  }
  std::size_t size() const { return mean_.size(); }

  // Fold samples of realization number `count` (0-based) into [offset, ...).
  void push(std::size_t count, std::size_t offset, std::span<const double> xs) {
    const double n = static_cast<double>(count + 1);
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const double delta = xs[i] - mean_[offset + i];
      mean_[offset + i] += delta / n;
      m2_[offset + i] += delta * (xs[i] - mean_[offset + i]);
    }
  }

  void finish(std::size_t n, std::vector<double>& mean, std::vector<double>& stderr_out) const {
    mean = mean_;
    stderr_out.assign(mean_.size(), 0.0);
    if (n < 2) return;
    const double nn = static_cast<double>(n);
    for (std::size_t i = 0; i < mean_.size(); ++i) {
      stderr_out[i] = std::sqrt(m2_[i] / (nn - 1.0) / nn);
    }
  }

 private:
  std::vector<double> mean_;
  std::vector<double> m2_;
};

// Projection of the initial state onto one basis block.
struct Component {
  Basis basis;
  SpinState psi;
};

std::vector<Component> split_components(const Eigen::VectorXcd& psi_full, int num_qubits,
                                        bool use_sector) {
  std::vector<Component> out;
  if (!use_sector) {
    out.push_back({Basis::full(num_qubits), psi_full});
    return out;
  }
  for (int n_up = 0; n_up <= num_qubits; ++n_up) {
    Basis basis = Basis::sector(num_qubits, n_up);
    SpinState psi(static_cast<Eigen::Index>(basis.dim()));
    bool any = false;
    for (std::size_t r = 0; r < basis.dim(); ++r) {
      psi[static_cast<Eigen::Index>(r)] = psi_full[static_cast<Eigen::Index>(basis.state(r))];
      any = any || psi[static_cast<Eigen::Index>(r)] != std::complex<double>(0.0, 0.0);
    }
    if (any) out.push_back({std::move(basis), std::move(psi)});
  }
  return out;
}

struct ExperimentPlan {
  ExperimentConfig cfg;
  QubitGraph graph;
  std::vector<Component> components;
  std::optional<Partition> partition;
  std::size_t workers;
};

SpinState assemble_full(const std::vector<Component>& comps, const std::vector<SpinState>& parts,
                        int num_qubits) {
  SpinState full = SpinState::Zero(Eigen::Index{1} << num_qubits);
  for (std::size_t c = 0; c < comps.size(); ++c) {
    const Basis& basis = comps[c].basis;
    for (std::size_t r = 0; r < basis.dim(); ++r) {
      full[static_cast<Eigen::Index>(basis.state(r))] += parts[c][static_cast<Eigen::Index>(r)];
    }
  }
  return full;
}

Couplings draw_couplings(const ExperimentPlan& plan, std::size_t k) {
  RngStream rng(plan.cfg.seed, k);
  return sample_quasi_static(plan.graph, plan.cfg.noise_spec(), rng);
}

bool should_stop(const AveragedSeries& partial, int& hits) {
  const double t_end = partial.times.back();
  if (t_end < kAdaptiveMinTime) return false;
  try {
    const EnvelopeFit fit = fit_series(partial, EnvelopeSide::kUpper);
    if (fit.converged && std::exp(-std::pow(t_end / fit.t2, fit.alpha)) < kAdaptiveResidual) {
      return ++hits >= 2;
    }
  } catch (const NumericalError&) {
  }
  hits = 0;
  return false;
}

AveragedSeries run_quasi_static(const ExperimentPlan& plan) {
  const ExperimentConfig& cfg = plan.cfg;
  const std::size_t n = cfg.n_realizations;

  std::vector<ReturnSpectrum> spectra(n);
  parallel_for(0, n, plan.workers, [&](std::size_t k) {
    const Couplings couplings = draw_couplings(plan, k);
    ReturnSpectrum spectrum;
    for (const auto& comp : plan.components) {
      const Hamiltonian h = build_hamiltonian(plan.graph, couplings, cfg.e_z, comp.basis);
      spectrum.append(SpectralPropagator(h.matrix), comp.psi);
    }
    spectra[k] = std::move(spectrum);
  });

  const TimeGrid grid{cfg.t_max, cfg.dt};
  grid.validate();
  const std::size_t total = grid.size();
  const std::size_t chunk =
      cfg.adaptive_t_max
          ? std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(kAdaptiveChunk / cfg.dt)))
          : total;

  AveragedSeries series;
  series.n_realizations = n;
  Accumulator acc;
  std::vector<double> block;
  std::size_t done = 0;
  int hits = 0;
  while (done < total) {
    const std::size_t len = std::min(chunk, total - done);
    acc.resize(done + len);
    block.assign(n * len, 0.0);
    const double start = grid.at(done);
    parallel_for(0, n, plan.workers, [&](std::size_t k) {
      return_probability_series(spectra[k], start, cfg.dt, len,
                                std::span<double>(block.data() + k * len, len));
    });
    for (std::size_t k = 0; k < n; ++k) {
      acc.push(k, done, std::span<const double>(block.data() + k * len, len));
    }
    done += len;

    if (cfg.adaptive_t_max && done < total) {
      AveragedSeries partial;
      partial.times.resize(done);
      for (std::size_t i = 0; i < done; ++i) partial.times[i] = grid.at(i);
      partial.n_realizations = n;
      acc.finish(n, partial.p_mean, partial.p_stderr);
      if (should_stop(partial, hits)) break;
    }
  }

  series.times.resize(done);
  for (std::size_t i = 0; i < done; ++i) series.times[i] = grid.at(i);
  acc.finish(n, series.p_mean, series.p_stderr);

  if (cfg.want_s) {
    const int num_qubits = plan.graph.num_qubits();
    Accumulator s_acc;
    s_acc.resize(done);
    const std::size_t batch = std::max<std::size_t>(1, plan.workers * 4);
    std::vector<std::vector<double>> rows(batch);
    for (std::size_t base = 0; base < n; base += batch) {
      const std::size_t stop = std::min(n, base + batch);
      parallel_for(base, stop, plan.workers, [&](std::size_t k) {
        const Couplings couplings = draw_couplings(plan, k);
        std::vector<SpectralPropagator> props;
        std::vector<Eigen::VectorXcd> coeffs;
        for (const auto& comp : plan.components) {
          const Hamiltonian h = build_hamiltonian(plan.graph, couplings, cfg.e_z, comp.basis);
          props.emplace_back(h.matrix);
          coeffs.push_back(props.back().to_eigenbasis(comp.psi));
        }
        std::vector<double>& row = rows[k - base];
        row.assign(done, 0.0);
        std::vector<SpinState> parts(props.size());
        for (std::size_t i = 0; i < done; ++i) {
          const double t = series.times[i];
          for (std::size_t c = 0; c < props.size(); ++c) {
            const Eigen::VectorXd& e = props[c].energies();
            Eigen::VectorXcd phased(e.size());
            for (Eigen::Index m = 0; m < e.size(); ++m) {
              phased[m] = coeffs[c][m] * std::polar(1.0, -e[m] * t);
            }
            parts[c] = props[c].from_eigenbasis(phased);
          }
          const SpinState full = assemble_full(plan.components, parts, num_qubits);
          row[i] = entanglement_entropy(reduced_density(full, *plan.partition));
        }
      });
      for (std::size_t k = base; k < stop; ++k) s_acc.push(k, 0, rows[k - base]);
    }
    s_acc.finish(n, series.s_mean, series.s_stderr);
  }
  return series;
}

AveragedSeries run_dynamic(const ExperimentPlan& plan) {
  const ExperimentConfig& cfg = plan.cfg;
  const std::size_t n = cfg.n_realizations;
  const TimeGrid grid{cfg.t_max, cfg.dt};
  grid.validate();
  const std::size_t total = grid.size();
  const std::size_t n_steps =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(cfg.t_max / cfg.dt_step - 1e-9)));
  const int num_qubits = plan.graph.num_qubits();
  const NoiseSpec spec = cfg.noise_spec();

  AveragedSeries series;
  series.n_realizations = n;
  series.times = grid.times();
  Accumulator p_acc;
  Accumulator s_acc;
  p_acc.resize(total);
  if (cfg.want_s) s_acc.resize(total);

  const std::size_t batch = std::max<std::size_t>(1, plan.workers * 4);
  std::vector<std::vector<double>> p_rows(batch);
  std::vector<std::vector<double>> s_rows(batch);
  for (std::size_t base = 0; base < n; base += batch) {
    const std::size_t stop = std::min(n, base + batch);
    parallel_for(base, stop, plan.workers, [&](std::size_t k) {
      RngStream rng(cfg.seed, k);
      const auto traces = sample_dynamic(plan.graph, spec, n_steps, rng);
      std::vector<std::complex<double>> amp(total, {0.0, 0.0});
      const bool single = plan.components.size() == 1;
      std::vector<SpinState> full_states;
      if (cfg.want_s && !single) {
        full_states.assign(total, SpinState::Zero(Eigen::Index{1} << num_qubits));
      }
      std::vector<double>& s_row = s_rows[k - base];
      if (cfg.want_s) s_row.assign(total, 0.0);

      for (const auto& comp : plan.components) {
        propagate_dynamic(
            plan.graph, traces, cfg.e_z, comp.basis, comp.psi, grid, cfg.dt_step,
            [&](std::size_t i, const SpinState& psi) {
              amp[i] += comp.psi.dot(psi);
              if (!cfg.want_s) return;
              if (single) {
                const SpinState full = embed_in_full_space(psi, comp.basis);
                s_row[i] = entanglement_entropy(reduced_density(full, *plan.partition));
              } else {
                for (std::size_t r = 0; r < comp.basis.dim(); ++r) {
                  full_states[i][static_cast<Eigen::Index>(comp.basis.state(r))] +=
                      psi[static_cast<Eigen::Index>(r)];
                }
              }
            });
      }
      if (cfg.want_s && !single) {
        for (std::size_t i = 0; i < total; ++i) {
          s_row[i] = entanglement_entropy(reduced_density(full_states[i], *plan.partition));
        }
      }
      std::vector<double>& p_row = p_rows[k - base];
      p_row.resize(total);
      double norm0 = 0.0;
      for (const auto& comp : plan.components) norm0 += comp.psi.squaredNorm();
      for (std::size_t i = 0; i < total; ++i) p_row[i] = std::norm(amp[i]) / (norm0 * norm0);
    });
    for (std::size_t k = base; k < stop; ++k) {
      p_acc.push(k, 0, p_rows[k - base]);
      if (cfg.want_s) s_acc.push(k, 0, s_rows[k - base]);
    }
  }
  p_acc.finish(n, series.p_mean, series.p_stderr);
  if (cfg.want_s) s_acc.finish(n, series.s_mean, series.s_stderr);
  return series;
}

std::string format_double(double x) {
  std::string s = std::to_string(x);
  s.erase(s.find_last_not_of('0') + 1);
  if (!s.empty() && s.back() == '.') s.pop_back();
  return s;
}

}  // namespace

std::size_t resolve_worker_count(std::size_t requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("XTALK_WORKERS"); env != nullptr && *env != '\0') {
    char* end = nullptr;
    const long value = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || value < 1) {
      throw ConfigError(std::string("XTALK_WORKERS must be a positive integer, got '") + env + "'");
    }
    return static_cast<std::size_t>(value);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

Eigen::VectorXcd initial_state_vector(const ExperimentConfig& cfg, int num_qubits) {
  const Eigen::Index dim = Eigen::Index{1} << num_qubits;
  Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(dim);
  if (cfg.initial_state == InitialState::kNeel) {
    std::uint64_t index = 0;
    for (int q = 1; q < num_qubits; q += 2) index |= std::uint64_t{1} << q;
    psi[static_cast<Eigen::Index>(index)] = 1.0;
  } else {
    const double a = 1.0 / std::sqrt(2.0);
    psi[0] = a;
    psi[dim - 1] = a;
  }
  return psi;
}

AveragedSeries run_experiment(const ExperimentConfig& cfg, const RunOptions& options) {
  cfg.validate();
  const QubitGraph graph = cfg.graph();
  const int num_qubits = graph.num_qubits();
  ExperimentPlan plan{cfg, graph,
                      split_components(initial_state_vector(cfg, num_qubits), num_qubits,
                                       cfg.use_sector),
                      std::nullopt, resolve_worker_count(options.workers)};
  if (cfg.want_s) {
    plan.partition = cfg.partition ? Partition(*cfg.partition, num_qubits)
                                   : Partition::first_half(num_qubits);
  }
  return cfg.noise == NoiseKind::kQuasiStatic ? run_quasi_static(plan) : run_dynamic(plan);
}

EnvelopeFit fit_series(const AveragedSeries& series, EnvelopeSide side) {
  const EnvelopePoints points = extract_envelope(series, side);
  EnvelopeFitOptions options;
  options.t_max = series.times.empty() ? 0.0 : series.times.back();
  return fit_envelope(points, side == EnvelopeSide::kUpper ? Branch::kPlus : Branch::kMinus,
                      options);
}

SweepResult run_sweep(const SweepSpec& spec, const RunOptions& options) {
  const ExperimentConfig& base = spec.base;
  const bool strip =
      base.unit == UnitKind::kTriangle && base.composition == CompositionRule::kSharedStrip;
  std::vector<int> sizes = spec.sizes;
  if (sizes.empty()) sizes.push_back(base.graph().num_qubits());
  const std::vector<double> sigmas = spec.sigmas.empty() ? std::vector<double>{base.sigma}
                                                         : spec.sigmas;
  const std::vector<double> alphas = spec.alphas.empty() ? std::vector<double>{base.alpha_noise}
                                                         : spec.alphas;

  SweepResult result;
  for (int size : sizes) {
    for (double sigma : sigmas) {
      for (double alpha : alphas) {
        ExperimentConfig cfg = base;
        cfg.sigma = sigma;
        cfg.alpha_noise = alpha;
        const int per_unit = strip ? 1 : qubits_per_unit(base.unit);
        if (size < 1 || size % per_unit != 0) {
          result.skipped.push_back({size, sigma, alpha,
                                    "L = " + std::to_string(size) + " is not a multiple of the " +
                                        std::to_string(per_unit) + "-qubit unit"});
          continue;
        }
        cfg.n_units = size / per_unit;
        try {
          cfg.validate();
        } catch (const ConfigError& e) {
          result.skipped.push_back({size, sigma, alpha, e.what()});
          continue;
        }

        const AveragedSeries series = run_experiment(cfg, options);
        SweepRow row;
        row.unit = cfg.unit;
        row.config = cfg.config;
        row.size = size;
        row.sigma = sigma;
        row.alpha_noise = alpha;
        try {
          row.fit = fit_series(series, spec.side);
        } catch (const NumericalError& e) {
          const double nan = std::numeric_limits<double>::quiet_NaN();
          row.fit.p_inf = row.fit.t2 = row.fit.alpha = nan;
          row.fit.standard_error = {nan, nan, nan};
          row.fit.residual = nan;
          row.fit.converged = false;
          row.note = e.what();
        }
        result.rows.push_back(std::move(row));
      }
    }
  }
  if (result.rows.empty()) {
    std::string msg = "every sweep cell is invalid";
    if (!result.skipped.empty()) {
      const auto& s = result.skipped.front();
      msg += " (first: L=" + std::to_string(s.size) + ", sigma=" + format_double(s.sigma) + ": " +
             s.reason + ")";
    }
    throw ConfigError(msg);
  }
  return result;
}

}  // namespace xtalk
