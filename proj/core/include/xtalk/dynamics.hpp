#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "xtalk/spin_ops.hpp"
#include "xtalk/topology.hpp"

namespace xtalk {

using SpinState = Eigen::VectorXcd;

// Uniform time grid {0, dt, 2dt, ..., t_max} in units of t0.
struct TimeGrid {
  double t_max = 1.0;
  double dt = 5e-4;

  void validate() const;
  std::size_t size() const;
  double at(std::size_t i) const { return static_cast<double>(i) * dt; }
  std::vector<double> times() const;
};

// Eigendecomposition H = V diag(E) V^T of a real-symmetric Hamiltonian, reused
// for every evolution time.
class SpectralPropagator {
 public:
  explicit SpectralPropagator(const Eigen::MatrixXd& hamiltonian);

  Eigen::Index dim() const { return energies_.size(); }
  const Eigen::VectorXd& energies() const { return energies_; }
  const Eigen::MatrixXd& eigenvectors() const { return vectors_; }

  // Coordinates of a state in the eigenbasis (V^T psi).
  Eigen::VectorXcd to_eigenbasis(const SpinState& psi) const;
  SpinState from_eigenbasis(const Eigen::VectorXcd& coeffs) const;

  // exp(-i H t) psi
  SpinState evolve(const SpinState& psi, double t) const;

 private:
  Eigen::VectorXd energies_;
  Eigen::MatrixXd vectors_;
};

// psi(t) = V exp(-i E t) V^T psi0 on every grid time.
std::vector<SpinState> propagate_static(const Hamiltonian& h, const SpinState& psi0,
                                        const TimeGrid& grid);

// Spectral weights of psi0: the return amplitude is
// <psi0|psi(t)> = sum_k weights[k] exp(-i energies[k] t).
struct ReturnSpectrum {
  std::vector<double> energies;
  std::vector<double> weights;

  void append(const SpectralPropagator& prop, const SpinState& psi0);
};

// |<psi0|psi(t)>|^2 for times start, start+dt, ..., count samples.
void return_probability_series(const ReturnSpectrum& spectrum, double start, double dt,
                               std::size_t count, std::span<double> out);

// Called with (grid index, state) for every grid time in order.
using StateVisitor = std::function<void(std::size_t, const SpinState&)>;

// Piecewise-constant evolution: during [k dt_step, (k+1) dt_step) every edge
// coupling is held at traces[e][k]. States on the output grid falling inside a
// step are evaluated exactly from that step's eigendecomposition.
void propagate_dynamic(const QubitGraph& graph, const std::vector<std::vector<double>>& traces,
                       double zeeman, const Basis& basis, const SpinState& psi0,
                       const TimeGrid& grid, double dt_step, const StateVisitor& visit);

std::vector<SpinState> propagate_dynamic(const QubitGraph& graph,
                                         const std::vector<std::vector<double>>& traces,
                                         double zeeman, const Basis& basis,
                                         const SpinState& psi0, const TimeGrid& grid,
                                         double dt_step);

}  // namespace xtalk
