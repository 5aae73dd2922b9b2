#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "xtalk/dynamics.hpp"
#include "xtalk/errors.hpp"
#include "xtalk/noise.hpp"
#include "xtalk/observables.hpp"
#include "xtalk/spin_ops.hpp"
#include "xtalk/topology.hpp"

namespace xtalk {
namespace {

SpinState basis_state(std::size_t dim, std::size_t row) {
  SpinState psi = SpinState::Zero(static_cast<Eigen::Index>(dim));
  psi[static_cast<Eigen::Index>(row)] = 1.0;
  return psi;
}

SpinState random_state(Eigen::Index dim, unsigned seed) {
  std::srand(seed);
  SpinState psi = SpinState::Random(dim);
  return psi / psi.norm();
}

double total_sz(const SpinState& psi, const Basis& basis) {
  double m = 0.0;
  for (std::size_t r = 0; r < basis.dim(); ++r) {
    const int up = count_up(basis.state(r), basis.num_qubits());
    m += std::norm(psi[static_cast<Eigen::Index>(r)]) * (2.0 * up - basis.num_qubits());
  }
  return m;
}

TEST(Dynamics, TimeGrid) {
  const TimeGrid g{1.0, 0.25};
  EXPECT_EQ(g.size(), 5u);
  EXPECT_EQ(g.times(), (std::vector<double>{0.0, 0.25, 0.5, 0.75, 1.0}));
  EXPECT_EQ(TimeGrid({1.0, 5e-4}).size(), 2001u);
  EXPECT_THROW(TimeGrid({1.0, 0.0}).validate(), ConfigError);
  EXPECT_THROW(TimeGrid({-1.0, 0.1}).validate(), ConfigError);
}

TEST(Dynamics, TwoQubitOverlapAndReturnProbability) {
  const QubitGraph g = build_graph(UnitKind::kStick, ConfigKind::kChain, 1);
  const double j = 1.3;
  const std::vector<double> J = {j};
  const Hamiltonian h = build_hamiltonian(g, J, 0.0);
  const SpinState psi0 = basis_state(4, neel_basis_index(g));
  const TimeGrid grid{2.0, 2.0 / 49.0};
  const auto states = propagate_static(h, psi0, grid);
  ASSERT_EQ(states.size(), 50u);
  for (std::size_t i = 0; i < states.size(); ++i) {
    const double t = grid.at(i);
    const std::complex<double> overlap = psi0.dot(states[i]);
    const std::complex<double> want = std::polar(1.0, j * t) * std::cos(2.0 * j * t);
    EXPECT_LT(std::abs(overlap - want), 1e-12);
    EXPECT_NEAR(return_probability(psi0, states[i]), testing::two_qubit_return(j, t), 1e-12);
  }
  EXPECT_EQ((states[0] - psi0).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Dynamics, FerromagnetOnlyAcquiresPhase) {
  const QubitGraph g = build_graph(UnitKind::kNode, ConfigKind::kRing, 5);
  const std::vector<double> J = {1.0, 2.0, 0.5, 1.5, 0.7};
  const Hamiltonian h = build_hamiltonian(g, J, 0.0);
  const SpinState psi0 = basis_state(32, 0);
  for (const auto& psi : propagate_static(h, psi0, {1.0, 0.01})) {
    EXPECT_NEAR(return_probability(psi0, psi), 1.0, 1e-12);
  }
}

TEST(Dynamics, UnitarityEnergyAndMagnetization) {
  const QubitGraph g = build_graph(UnitKind::kStick, ConfigKind::kChain, 3);
  RngStream rng(2, 0);
  NoiseSpec spec;
  spec.j0 = 1.0;
  spec.sigma = 0.4;
  const auto J = sample_quasi_static(g, spec, rng);
  const Hamiltonian h = build_hamiltonian(g, J, 0.3);
  const SpinState psi0 = random_state(64, 3);
  const Eigen::MatrixXcd hc = h.matrix.cast<std::complex<double>>();
  const double e0 = psi0.dot(hc * psi0).real();
  const double m0 = total_sz(psi0, h.basis);
  for (const auto& psi : propagate_static(h, psi0, {3.0, 0.05})) {
    EXPECT_NEAR(psi.norm(), 1.0, 1e-10);
    EXPECT_NEAR(psi.dot(hc * psi).real(), e0, 1e-8 * std::abs(e0));
    EXPECT_NEAR(total_sz(psi, h.basis), m0, 1e-8);
  }
}

TEST(Dynamics, TimeComposition) {
  const QubitGraph g = build_graph(UnitKind::kNode, ConfigKind::kChain, 5);
  const std::vector<double> J = {1.0, 0.8, 1.2, 0.9};
  const Hamiltonian h = build_hamiltonian(g, J, 0.1);
  const SpectralPropagator prop(h.matrix);
  const SpinState psi0 = random_state(32, 4);
  const SpinState direct = prop.evolve(psi0, 1.7);
  const SpinState stepped = prop.evolve(prop.evolve(psi0, 0.6), 1.1);
  EXPECT_LT((direct - stepped).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Dynamics, DimensionMismatchRejected) {
  const QubitGraph g = build_graph(UnitKind::kStick, ConfigKind::kChain, 1);
  const std::vector<double> J = {1.0};
  const Hamiltonian h = build_hamiltonian(g, J, 0.0);
  EXPECT_THROW(propagate_static(h, basis_state(8, 0), {1.0, 0.1}), ConfigError);
}

TEST(Dynamics, ReturnSpectrumMatchesStates) {
  const QubitGraph g = build_graph(UnitKind::kNode, ConfigKind::kRing, 6);
  const std::vector<double> J = {1.0, 0.8, 1.2, 0.9, 1.1, 1.05};
  const Basis basis = Basis::sector(6, 3);
  const Hamiltonian h = build_hamiltonian(g, J, 0.0, basis);
  const SpinState psi0 = basis_state(basis.dim(), static_cast<std::size_t>(basis.row_of(neel_basis_index(g))));
  ReturnSpectrum spec;
  spec.append(SpectralPropagator(h.matrix), psi0);
  const TimeGrid grid{3.0, 0.001};
  std::vector<double> p(grid.size());
  return_probability_series(spec, 0.0, grid.dt, grid.size(), p);
  const auto states = propagate_static(h, psi0, grid);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    EXPECT_NEAR(p[i], return_probability(psi0, states[i]), 1e-11);
  }
  std::vector<double> tail(10);
  return_probability_series(spec, grid.at(1500), grid.dt, 10, tail);
  for (std::size_t i = 0; i < 10; ++i) EXPECT_NEAR(tail[i], p[1500 + i], 1e-12);
}

std::vector<std::vector<double>> constant_traces(std::size_t edges, std::size_t steps, double j) {
  return std::vector<std::vector<double>>(edges, std::vector<double>(steps, j));
}

TEST(Dynamics, ConstantTracesMatchStatic) {
  const QubitGraph g = build_graph(UnitKind::kNode, ConfigKind::kChain, 4);
  const Basis basis = Basis::sector(4, 2);
  const std::vector<double> J(3, 1.0);
  const Hamiltonian h = build_hamiltonian(g, J, 0.2, basis);
  const SpinState psi0 = basis_state(basis.dim(), 1);
  const TimeGrid grid{1.0, 0.0037};
  const auto want = propagate_static(h, psi0, grid);
  const auto got = propagate_dynamic(g, constant_traces(3, 100, 1.0), 0.2, basis, psi0, grid, 0.01);
  ASSERT_EQ(got.size(), want.size());
  for (std::size_t i = 0; i < got.size(); ++i) {
    EXPECT_LT((got[i] - want[i]).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(Dynamics, ZeroTracesAreIdentity) {
  const QubitGraph g = build_graph(UnitKind::kNode, ConfigKind::kRing, 4);
  const Basis basis = Basis::full(4);
  const SpinState psi0 = random_state(16, 9);
  for (const auto& psi :
       propagate_dynamic(g, constant_traces(4, 50, 0.0), 0.0, basis, psi0, {0.5, 0.01}, 0.01)) {
    EXPECT_LT((psi - psi0).cwiseAbs().maxCoeff(), 1e-14);
  }
}

TEST(Dynamics, ShortTraceRejected) {
  const QubitGraph g = build_graph(UnitKind::kNode, ConfigKind::kChain, 3);
  const Basis basis = Basis::full(3);
  EXPECT_THROW(propagate_dynamic(g, constant_traces(2, 10, 1.0), 0.0, basis, basis_state(8, 2),
                                 {1.0, 0.01}, 0.01),
               ConfigError);
}

TEST(Dynamics, DynamicNormAndStepConvergence) {
  const QubitGraph g = build_graph(UnitKind::kNode, ConfigKind::kChain, 4);
  const Basis basis = Basis::sector(4, 2);
  const SpinState psi0 =
      basis_state(basis.dim(), static_cast<std::size_t>(basis.row_of(neel_basis_index(g))));
  NoiseSpec spec;
  spec.kind = NoiseKind::kDynamic;
  spec.alpha = 2.0;
  const TimeGrid grid{1.0, 5e-4};

  // Coarse traces on a 1e-3 step, and the same path held piecewise on 5e-4 steps.
  RngStream rng(12, 0);
  const auto coarse = sample_dynamic(g, spec, 1000, rng);
  std::vector<std::vector<double>> fine(coarse.size());
  for (std::size_t e = 0; e < coarse.size(); ++e) {
    fine[e].resize(2000);
    for (std::size_t k = 0; k < 2000; ++k) {
      // linear interpolation between coarse samples gives the halved-step path
      const double x = static_cast<double>(k) / 2.0;
      const std::size_t k0 = std::min<std::size_t>(static_cast<std::size_t>(x), 998);
      const double f = x - static_cast<double>(k0);
      fine[e][k] = coarse[e][k0] * (1.0 - f) + coarse[e][k0 + 1] * f;
    }
  }
  const auto a = propagate_dynamic(g, coarse, 0.0, basis, psi0, grid, 1e-3);
  const auto b = propagate_dynamic(g, fine, 0.0, basis, psi0, grid, 5e-4);
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_NEAR(a[i].norm(), 1.0, 1e-9);
    worst = std::max(worst, std::abs(return_probability(psi0, a[i]) - return_probability(psi0, b[i])));
  }
  EXPECT_LT(worst, 1e-3);
}

}  // namespace
}  // namespace xtalk
