#include "xtalk/noise.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <iomanip>
#include <ostream>
#include <string>

#include <unsupported/Eigen/FFT>

#include "xtalk/errors.hpp"

namespace xtalk {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Autocovariance of unit-variance fractional Gaussian noise at lag k.
double fgn_autocovariance(double hurst, std::size_t k) {
  const double two_h = 2.0 * hurst;
  const double kd = static_cast<double>(k);
  return 0.5 * (std::pow(kd + 1.0, two_h) - 2.0 * std::pow(kd, two_h) +
                std::pow(std::abs(kd - 1.0), two_h));
}

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

// Davies-Harte: exact fGn sample of length n via an FFT of size 2M, M >= n.
std::vector<double> sample_fgn(double hurst, std::size_t n, RngStream& rng) {
  const std::size_t half = next_pow2(n);
  const std::size_t m = 2 * half;

  std::vector<std::complex<double>> row(m);
  for (std::size_t k = 0; k <= half; ++k) row[k] = fgn_autocovariance(hurst, k);
  for (std::size_t k = half + 1; k < m; ++k) row[k] = row[m - k];

  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> eig;
  fft.fwd(eig, row);

  double max_eig = 0.0;
  for (const auto& e : eig) max_eig = std::max(max_eig, e.real());
  std::vector<std::complex<double>> weighted(m);
  for (std::size_t k = 0; k < m; ++k) {
    double lambda = eig[k].real();
    if (lambda < 0.0) {
      if (lambda < -1e-10 * max_eig) {
        throw NumericalError("circulant embedding has a negative eigenvalue for H = " +
                             std::to_string(hurst));
      }
      lambda = 0.0;
    }
    const double scale = std::sqrt(lambda / static_cast<double>(m));
    const double re = rng.normal();
    const double im = rng.normal();
    weighted[k] = {scale * re, scale * im};
  }
  std::vector<std::complex<double>> mixed;
  fft.fwd(mixed, weighted);

  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = mixed[i].real();
  return out;
}

}  // namespace

void NoiseSpec::validate() const {
  if (!std::isfinite(j0) || !std::isfinite(sigma)) {
    throw ConfigError("noise parameters must be finite");
  }
  if (sigma < 0.0) throw ConfigError("sigma must be >= 0, got " + std::to_string(sigma));
  if (kind == NoiseKind::kDynamic) {
    if (!(alpha >= 1.0 && alpha <= 3.0)) {
      throw ConfigError("alpha must lie in [1, 3], got " + std::to_string(alpha));
    }
    if (!(dt_noise > 0.0)) throw ConfigError("dt_noise must be positive");
  }
}

std::uint64_t derive_stream_seed(std::uint64_t master_seed, std::uint64_t index) {
  return splitmix64(splitmix64(master_seed) ^ splitmix64(index + 0x632BE59BD9B4E019ULL));
}

Couplings sample_quasi_static(const QubitGraph& graph, const NoiseSpec& spec, RngStream& rng) {
  spec.validate();
  Couplings out(graph.num_edges());
  for (double& j : out) j = spec.j0 + spec.sigma * rng.normal();
  return out;
}

double hurst_for_alpha(double alpha) {
  return std::clamp((alpha - 1.0) / 2.0, 0.01, 0.99);
}

std::vector<double> gen_fbm_trace(double alpha, std::size_t n_steps, double sigma,
                                  RngStream& rng) {
  if (!(alpha >= 1.0 && alpha <= 3.0)) {
    throw ConfigError("alpha must lie in [1, 3], got " + std::to_string(alpha));
  }
  if (n_steps < 2) throw ConfigError("fBm trace needs at least 2 steps");
  if (sigma < 0.0) throw ConfigError("sigma must be >= 0");

  std::vector<double> path = sample_fgn(hurst_for_alpha(alpha), n_steps, rng);
  double running = 0.0;
  for (double& x : path) {
    running += x;
    x = running;
  }

  const double n = static_cast<double>(n_steps);
  double mean = 0.0;
  for (double x : path) mean += x;
  mean /= n;
  double ss = 0.0;
  for (double& x : path) {
    x -= mean;
    ss += x * x;
  }
  const double sd = std::sqrt(ss / (n - 1.0));
  if (!(sd > 0.0)) throw NumericalError("degenerate fBm path with zero variance");
  const double inv_sd = 1.0 / sd;
  for (double& x : path) x = sigma * (x * inv_sd);
  return path;
}

std::vector<std::vector<double>> sample_dynamic(const QubitGraph& graph, const NoiseSpec& spec,
                                                std::size_t n_steps, RngStream& rng) {
  spec.validate();
  std::vector<std::vector<double>> traces;
  traces.reserve(graph.num_edges());
  for (std::size_t e = 0; e < graph.num_edges(); ++e) {
    std::vector<double> trace = gen_fbm_trace(spec.alpha, n_steps, spec.sigma, rng);
    for (double& x : trace) x += spec.j0;
    traces.push_back(std::move(trace));
  }
  return traces;
}

void write_trace_csv(std::ostream& out, std::span<const double> trace) {
  out << "step,value\n" << std::setprecision(12);
  for (std::size_t i = 0; i < trace.size(); ++i) out << i << ',' << trace[i] << '\n';
}

}  // namespace xtalk
