#include "xtalk/observables.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

#include <Eigen/Eigenvalues>

#include "xtalk/errors.hpp"

namespace xtalk {

namespace {

constexpr double kEigenFloor = 1e-14;
constexpr double kDensityTolerance = 1e-10;

}  // namespace

Partition::Partition(std::vector<int> subsystem, int num_qubits)
    : subsystem_(std::move(subsystem)), num_qubits_(num_qubits) {
  if (subsystem_.empty()) throw ConfigError("partition subsystem must be non-empty");
  std::set<int> seen;
  for (int q : subsystem_) {
    if (q < 0 || q >= num_qubits_) {
      throw ConfigError("partition qubit " + std::to_string(q) + " outside [0, " +
                        std::to_string(num_qubits_) + ")");
    }
    if (!seen.insert(q).second) {
      throw ConfigError("partition lists qubit " + std::to_string(q) + " twice");
    }
  }
  if (static_cast<int>(subsystem_.size()) >= num_qubits_) {
    throw ConfigError("partition subsystem must be a proper subset of the qubits");
  }
  for (int q = 0; q < num_qubits_; ++q) {
    if (!seen.contains(q)) environment_.push_back(q);
  }
}

Partition Partition::first_half(int num_qubits) {
  std::vector<int> sub;
  for (int q = 0; q < (num_qubits + 1) / 2; ++q) sub.push_back(q);
  return Partition(std::move(sub), num_qubits);
}

double return_probability(const SpinState& psi0, const SpinState& psi_t) {
  if (psi0.size() != psi_t.size()) {
    throw ConfigError("return probability of states with different dimensions");
  }
  return std::norm(psi0.dot(psi_t));
}

SpinState embed_in_full_space(const SpinState& psi, const Basis& basis) {
  if (static_cast<std::size_t>(psi.size()) != basis.dim()) {
    throw ConfigError("state dimension does not match basis");
  }
  SpinState full = SpinState::Zero(Eigen::Index{1} << basis.num_qubits());
  for (std::size_t r = 0; r < basis.dim(); ++r) {
    full[static_cast<Eigen::Index>(basis.state(r))] = psi[static_cast<Eigen::Index>(r)];
  }
  return full;
}

Eigen::MatrixXcd reduced_density(const SpinState& psi, const Partition& part) {
  const int n = part.num_qubits();
  if (psi.size() != (Eigen::Index{1} << n)) {
    throw ConfigError("reduced_density needs a full-space state of dimension 2^" +
                      std::to_string(n));
  }
  const auto& sub = part.subsystem();
  const auto& env = part.environment();
  const Eigen::Index dim_a = Eigen::Index{1} << sub.size();
  const Eigen::Index dim_b = Eigen::Index{1} << env.size();

  // Reshape psi into M(a, b) so that rho_alpha = M M^dagger.
  Eigen::MatrixXcd m(dim_a, dim_b);
  for (Eigen::Index b = 0; b < psi.size(); ++b) {
    Eigen::Index a_idx = 0;
    Eigen::Index b_idx = 0;
    for (std::size_t k = 0; k < sub.size(); ++k) a_idx |= ((b >> sub[k]) & 1) << k;
    for (std::size_t k = 0; k < env.size(); ++k) b_idx |= ((b >> env[k]) & 1) << k;
    m(a_idx, b_idx) = psi[b];
  }
  return m * m.adjoint();
}

double entanglement_entropy(const Eigen::MatrixXcd& rho) {
  if (rho.rows() != rho.cols() || rho.rows() == 0) {
    throw ConfigError("density matrix must be square and non-empty");
  }
  const double scale = std::max(1.0, rho.cwiseAbs().maxCoeff());
  if ((rho - rho.adjoint()).cwiseAbs().maxCoeff() > kDensityTolerance * scale) {
    throw ConfigError("density matrix is not Hermitian");
  }
  const std::complex<double> tr = rho.trace();
  if (std::abs(tr - 1.0) > kDensityTolerance) {
    throw ConfigError("density matrix trace " + std::to_string(tr.real()) + " differs from 1");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(rho, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    throw NumericalError("density matrix diagonalization did not converge");
  }
  double s = 0.0;
  for (Eigen::Index k = 0; k < solver.eigenvalues().size(); ++k) {
    const double p = solver.eigenvalues()[k];
    if (p > kEigenFloor) s -= p * std::log(p);
  }
  return std::max(0.0, s);
}

}  // namespace xtalk
