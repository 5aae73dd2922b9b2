#include "xtalk/dynamics.hpp"

#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

#include "xtalk/errors.hpp"

namespace xtalk {

namespace {

constexpr std::complex<double> kI{0.0, 1.0};

// Re-seed the phase recurrence from std::polar this often.
constexpr std::size_t kPhaseResync = 128;

// Weights below this cannot move P(t) by more than dim * 1e-15.
constexpr double kNegligibleWeight = 1e-15;

Eigen::VectorXcd phases(const Eigen::VectorXd& energies, double t) {
  Eigen::VectorXcd out(energies.size());
  for (Eigen::Index k = 0; k < energies.size(); ++k) out[k] = std::polar(1.0, -energies[k] * t);
  return out;
}

}  // namespace

void TimeGrid::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("time step dt must be positive");
  if (!(t_max >= 0.0) || !std::isfinite(t_max)) throw ConfigError("t_max must be >= 0");
}

std::size_t TimeGrid::size() const {
  return static_cast<std::size_t>(std::floor(t_max / dt + 1e-9)) + 1;
}

std::vector<double> TimeGrid::times() const {
  std::vector<double> out(size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = at(i);
  return out;
}

SpectralPropagator::SpectralPropagator(const Eigen::MatrixXd& hamiltonian) {
  if (hamiltonian.rows() != hamiltonian.cols()) {
    throw ConfigError("Hamiltonian must be square");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(hamiltonian);
  if (solver.info() != Eigen::Success) {
    throw NumericalError("eigendecomposition of the Hamiltonian did not converge");
  }
  energies_ = solver.eigenvalues();
  vectors_ = solver.eigenvectors();
}

Eigen::VectorXcd SpectralPropagator::to_eigenbasis(const SpinState& psi) const {
  if (psi.size() != dim()) {
    throw ConfigError("state dimension " + std::to_string(psi.size()) +
                      " does not match Hamiltonian dimension " + std::to_string(dim()));
  }
  return vectors_.transpose().cast<std::complex<double>>() * psi;
}

SpinState SpectralPropagator::from_eigenbasis(const Eigen::VectorXcd& coeffs) const {
  return vectors_.cast<std::complex<double>>() * coeffs;
}

SpinState SpectralPropagator::evolve(const SpinState& psi, double t) const {
  Eigen::VectorXcd c = to_eigenbasis(psi);
  return from_eigenbasis(phases(energies_, t).cwiseProduct(c));
}

std::vector<SpinState> propagate_static(const Hamiltonian& h, const SpinState& psi0,
                                        const TimeGrid& grid) {
  grid.validate();
  SpectralPropagator prop(h.matrix);
  const Eigen::VectorXcd c = prop.to_eigenbasis(psi0);
  const Eigen::MatrixXcd v = prop.eigenvectors().cast<std::complex<double>>();
  std::vector<SpinState> out;
  out.reserve(grid.size());
  out.push_back(psi0);
  for (std::size_t i = 1; i < grid.size(); ++i) {
    out.push_back(v * phases(prop.energies(), grid.at(i)).cwiseProduct(c));
  }
  return out;
}

void ReturnSpectrum::append(const SpectralPropagator& prop, const SpinState& psi0) {
  const Eigen::VectorXcd c = prop.to_eigenbasis(psi0);
  for (Eigen::Index k = 0; k < c.size(); ++k) {
    const double w = std::norm(c[k]);
    if (w < kNegligibleWeight) continue;
    energies.push_back(prop.energies()[k]);
    weights.push_back(w);
  }
}

void return_probability_series(const ReturnSpectrum& spectrum, double start, double dt,
                               std::size_t count, std::span<double> out) {
  if (out.size() < count) throw ConfigError("output span too short for requested samples");
  const std::size_t n = spectrum.energies.size();
  std::vector<std::complex<double>> z(n);
  std::vector<std::complex<double>> step(n);
  for (std::size_t k = 0; k < n; ++k) step[k] = std::polar(1.0, -spectrum.energies[k] * dt);
  // Normalizing by the retained weight makes P(0) exactly 1.
  double total = 0.0;
  for (std::size_t k = 0; k < n; ++k) total += spectrum.weights[k];
  const double norm2 = total * total;

  for (std::size_t i = 0; i < count; ++i) {
    if (i % kPhaseResync == 0) {
      const double t = start + static_cast<double>(i) * dt;
      for (std::size_t k = 0; k < n; ++k) z[k] = std::polar(1.0, -spectrum.energies[k] * t);
    }
    std::complex<double> amp{0.0, 0.0};
    for (std::size_t k = 0; k < n; ++k) {
      amp += spectrum.weights[k] * z[k];
      z[k] *= step[k];
    }
    out[i] = std::norm(amp) / norm2;
  }
}

void propagate_dynamic(const QubitGraph& graph, const std::vector<std::vector<double>>& traces,
                       double zeeman, const Basis& basis, const SpinState& psi0,
                       const TimeGrid& grid, double dt_step, const StateVisitor& visit) {
  grid.validate();
  if (!(dt_step > 0.0)) throw ConfigError("dt_step must be positive");
  if (traces.size() != graph.num_edges()) {
    throw ConfigError("need one trace per edge: got " + std::to_string(traces.size()) +
                      " for " + std::to_string(graph.num_edges()) + " edges");
  }
  if (static_cast<std::size_t>(psi0.size()) != basis.dim()) {
    throw ConfigError("initial state dimension does not match basis");
  }
  const double t_end = grid.at(grid.size() - 1);
  const auto n_steps = static_cast<std::size_t>(std::ceil(t_end / dt_step - 1e-9));
  for (const auto& trace : traces) {
    if (trace.size() < n_steps) {
      throw ConfigError("noise trace has " + std::to_string(trace.size()) +
                        " samples but t_max needs " + std::to_string(n_steps));
    }
  }

  const double eps = 1e-9 * dt_step;
  SpinState state = psi0;
  std::vector<double> couplings(graph.num_edges());
  std::size_t i = 0;
  for (std::size_t k = 0; k < n_steps; ++k) {
    const double t_start = static_cast<double>(k) * dt_step;
    const double t_stop = static_cast<double>(k + 1) * dt_step;
    for (std::size_t e = 0; e < traces.size(); ++e) couplings[e] = traces[e][k];
    const Hamiltonian h = build_hamiltonian(graph, couplings, zeeman, basis);
    const SpectralPropagator prop(h.matrix);
    const Eigen::VectorXcd c = prop.to_eigenbasis(state);

    while (i < grid.size() && grid.at(i) < t_stop - eps) {
      const double tau = grid.at(i) - t_start;
      if (std::abs(tau) <= eps) {
        visit(i, state);
      } else {
        visit(i, prop.from_eigenbasis(phases(prop.energies(), tau).cwiseProduct(c)));
      }
      ++i;
    }
    state = prop.from_eigenbasis(phases(prop.energies(), dt_step).cwiseProduct(c));
  }
  for (; i < grid.size(); ++i) visit(i, state);
}

std::vector<SpinState> propagate_dynamic(const QubitGraph& graph,
                                         const std::vector<std::vector<double>>& traces,
                                         double zeeman, const Basis& basis,
                                         const SpinState& psi0, const TimeGrid& grid,
                                         double dt_step) {
  std::vector<SpinState> out(grid.size());
  propagate_dynamic(graph, traces, zeeman, basis, psi0, grid, dt_step,
                    [&](std::size_t i, const SpinState& psi) { out[i] = psi; });
  return out;
}

}  // namespace xtalk
