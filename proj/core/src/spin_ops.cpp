#include "xtalk/spin_ops.hpp"

#include <bit>
#include <iomanip>
#include <ostream>
#include <string>

#include "xtalk/errors.hpp"

namespace xtalk {

namespace {

void check_qubits(int num_qubits) {
  if (num_qubits < 1 || num_qubits > kMaxDenseQubits) {
    throw ConfigError("qubit count " + std::to_string(num_qubits) + " outside [1, " +
                      std::to_string(kMaxDenseQubits) + "] supported by the dense solver");
  }
}

}  // namespace

Basis::Basis(int num_qubits, std::vector<std::uint64_t> states)
    : num_qubits_(num_qubits),
      states_(std::move(states)),
      lookup_(std::size_t{1} << num_qubits, -1) {
  for (std::size_t r = 0; r < states_.size(); ++r) {
    lookup_[states_[r]] = static_cast<std::int64_t>(r);
  }
}

Basis Basis::full(int num_qubits) {
  check_qubits(num_qubits);
  std::vector<std::uint64_t> states(std::size_t{1} << num_qubits);
  for (std::size_t b = 0; b < states.size(); ++b) states[b] = b;
  return Basis(num_qubits, std::move(states));
}

Basis Basis::sector(int num_qubits, int n_up) {
  check_qubits(num_qubits);
  if (n_up < 0 || n_up > num_qubits) {
    throw ConfigError("n_up = " + std::to_string(n_up) + " outside [0, " +
                      std::to_string(num_qubits) + "]");
  }
  std::vector<std::uint64_t> states;
  const std::uint64_t end = std::uint64_t{1} << num_qubits;
  for (std::uint64_t b = 0; b < end; ++b) {
    if (count_up(b, num_qubits) == n_up) states.push_back(b);
  }
  return Basis(num_qubits, std::move(states));
}

std::int64_t Basis::row_of(std::uint64_t index) const {
  if (index >= lookup_.size()) return -1;
  return lookup_[index];
}

std::vector<std::uint64_t> sector_restrict(const QubitGraph& graph, int n_up) {
  return Basis::sector(graph.num_qubits(), n_up).states();
}

Hamiltonian build_hamiltonian(const QubitGraph& graph, std::span<const double> couplings,
                              double zeeman, const Basis& basis) {
  if (couplings.size() != graph.num_edges()) {
    throw ConfigError("coupling count " + std::to_string(couplings.size()) +
                      " does not match edge count " + std::to_string(graph.num_edges()));
  }
  if (basis.num_qubits() != graph.num_qubits()) {
    throw ConfigError("basis and graph disagree on qubit count");
  }
  const auto dim = static_cast<Eigen::Index>(basis.dim());
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(dim, dim);
  const int n = graph.num_qubits();
  const auto& edges = graph.edges();

  for (Eigen::Index r = 0; r < dim; ++r) {
    const std::uint64_t b = basis.state(static_cast<std::size_t>(r));
    double diag = zeeman * static_cast<double>(2 * count_up(b, n) - n);
    for (std::size_t e = 0; e < edges.size(); ++e) {
      const double j = couplings[e];
      const std::uint64_t mi = std::uint64_t{1} << edges[e].i;
      const std::uint64_t mj = std::uint64_t{1} << edges[e].j;
      const bool si = (b & mi) != 0;
      const bool sj = (b & mj) != 0;
      if (si == sj) {
        diag += j;
      } else {
        // sigma^x sigma^x + sigma^y sigma^y = 2 (sigma^+ sigma^- + h.c.) swaps antiparallel spins.
        diag -= j;
        const std::int64_t c = basis.row_of(b ^ mi ^ mj);
        if (c < 0) throw ConfigError("basis is not closed under the exchange term");
        h(c, r) += 2.0 * j;
      }
    }
    h(r, r) += diag;
  }
  return Hamiltonian{std::move(h), basis};
}

Hamiltonian build_hamiltonian(const QubitGraph& graph, std::span<const double> couplings,
                              double zeeman) {
  return build_hamiltonian(graph, couplings, zeeman, Basis::full(graph.num_qubits()));
}

void write_hamiltonian_csv(std::ostream& out, const Hamiltonian& h) {
  out << "row,col,value\n";
  out << std::setprecision(17);
  for (Eigen::Index r = 0; r < h.matrix.rows(); ++r) {
    for (Eigen::Index c = 0; c < h.matrix.cols(); ++c) {
      if (h.matrix(r, c) != 0.0) out << r << ',' << c << ',' << h.matrix(r, c) << '\n';
    }
  }
}

}  // namespace xtalk
