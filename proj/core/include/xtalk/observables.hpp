#pragma once

#include <vector>

#include <Eigen/Dense>

#include "xtalk/dynamics.hpp"
#include "xtalk/spin_ops.hpp"

namespace xtalk {

// Subsystem alpha of a bipartition; the complement is the environment.
class Partition {
 public:
  Partition(std::vector<int> subsystem, int num_qubits);

  // Qubits {0, ..., ceil(L/2) - 1}.
  static Partition first_half(int num_qubits);

  const std::vector<int>& subsystem() const { return subsystem_; }
  const std::vector<int>& environment() const { return environment_; }
  int num_qubits() const { return num_qubits_; }

 private:
  std::vector<int> subsystem_;
  std::vector<int> environment_;
  int num_qubits_;
};

// |<psi0|psi_t>|^2
double return_probability(const SpinState& psi0, const SpinState& psi_t);

// Scatter a state on a restricted basis into the full 2^L space.
SpinState embed_in_full_space(const SpinState& psi, const Basis& basis);

// Partial trace over the environment of |psi><psi|. psi must live in the full
// 2^L space; the result is indexed by the subsystem qubits in the order given,
// with subsystem()[0] as the least significant bit.
Eigen::MatrixXcd reduced_density(const SpinState& psi, const Partition& part);

// Von Neumann entropy -Tr[rho ln rho]; eigenvalues below 1e-14 are dropped.
double entanglement_entropy(const Eigen::MatrixXcd& rho);

}  // namespace xtalk
