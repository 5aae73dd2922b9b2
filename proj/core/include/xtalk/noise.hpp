#pragma once

#include <cstdint>
#include <iosfwd>
#include <random>
#include <span>
#include <vector>

#include "xtalk/spin_ops.hpp"
#include "xtalk/topology.hpp"

namespace xtalk {

enum class NoiseKind { kQuasiStatic, kDynamic };

struct NoiseSpec {
  NoiseKind kind = NoiseKind::kQuasiStatic;
  double j0 = 100.0;      // mean exchange, 1/t0
  double sigma = 0.5;     // deviation, 1/t0
  double alpha = 2.0;     // 1/f^alpha spectral exponent (dynamic only)
  double dt_noise = 1e-3; // trace resolution, t0 (dynamic only)

  // Throws ConfigError on sigma < 0, non-finite values or, for dynamic noise,
  // alpha outside [1, 3] or dt_noise <= 0.
  void validate() const;
};

// Stable 64-bit mix of (master seed, realization index).
std::uint64_t derive_stream_seed(std::uint64_t master_seed, std::uint64_t index);

// Deterministic pseudorandom stream for one realization. Identical
// (master seed, index) pairs replay identical sequences.
class RngStream {
 public:
  RngStream(std::uint64_t master_seed, std::uint64_t index)
      : engine_(derive_stream_seed(master_seed, index)) {}

  double normal() { return normal_(engine_); }
  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

// One independent N(j0, sigma^2) draw per edge, in edge order.
Couplings sample_quasi_static(const QubitGraph& graph, const NoiseSpec& spec, RngStream& rng);

// Hurst exponent used for a 1/f^alpha target: H = (alpha - 1) / 2, clamped to
// [0.01, 0.99].
double hurst_for_alpha(double alpha);

// Fractional Brownian motion sampled by circulant embedding of fractional
// Gaussian noise, then shifted and scaled to sample mean 0 and sample
// standard deviation sigma.
std::vector<double> gen_fbm_trace(double alpha, std::size_t n_steps, double sigma,
                                  RngStream& rng);

// Per-edge coupling traces j0 + fBm, one trace of n_steps samples per edge.
std::vector<std::vector<double>> sample_dynamic(const QubitGraph& graph, const NoiseSpec& spec,
                                                std::size_t n_steps, RngStream& rng);

// Audit dump with columns "step,value".
void write_trace_csv(std::ostream& out, std::span<const double> trace);

}  // namespace xtalk
