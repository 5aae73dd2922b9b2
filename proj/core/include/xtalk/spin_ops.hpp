#pragma once

#include <bit>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "xtalk/topology.hpp"

namespace xtalk {

// Largest qubit count handled by the dense representation.
inline constexpr int kMaxDenseQubits = 12;

// Bit i of a basis index is set iff qubit i is down.
inline int count_up(std::uint64_t index, int num_qubits) {
  return num_qubits - std::popcount(index & ((std::uint64_t{1} << num_qubits) - 1));
}

// Ordered list of computational-basis indices spanning the active space, with
// an inverse lookup from basis index to row.
class Basis {
 public:
  static Basis full(int num_qubits);
  static Basis sector(int num_qubits, int n_up);

  int num_qubits() const { return num_qubits_; }
  std::size_t dim() const { return states_.size(); }
  const std::vector<std::uint64_t>& states() const { return states_; }
  std::uint64_t state(std::size_t row) const { return states_[row]; }

  // Row of a basis index, or -1 if the index is outside this space.
  std::int64_t row_of(std::uint64_t index) const;

  bool is_full() const { return states_.size() == (std::size_t{1} << num_qubits_); }

 private:
  Basis(int num_qubits, std::vector<std::uint64_t> states);

  int num_qubits_;
  std::vector<std::uint64_t> states_;
  std::vector<std::int64_t> lookup_;
};

// Sorted basis indices with exactly n_up up spins.
std::vector<std::uint64_t> sector_restrict(const QubitGraph& graph, int n_up);

// Exchange strengths, one per graph edge in graph edge order (units 1/t0).
using Couplings = std::vector<double>;

// Real-symmetric matrix of H = sum_e J_e sigma_i.sigma_j + E_z sum_i sigma_i^z
// on the given basis. Both terms are real in the computational basis.
struct Hamiltonian {
  Eigen::MatrixXd matrix;
  Basis basis;
};

Hamiltonian build_hamiltonian(const QubitGraph& graph, std::span<const double> couplings,
                              double zeeman, const Basis& basis);
Hamiltonian build_hamiltonian(const QubitGraph& graph, std::span<const double> couplings,
                              double zeeman = 0.0);

// Debug dump: one "row,col,value" line per non-zero entry.
void write_hamiltonian_csv(std::ostream& out, const Hamiltonian& h);

}  // namespace xtalk
