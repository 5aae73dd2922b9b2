#pragma once

// Reference computations used as independent checks in the test suites.

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

namespace xtalk::testing {

// P(t) of |up,down> under J sigma.sigma: triplet-0 at +J, singlet at -3J.
inline double two_qubit_return(double j, double t) {
  const double c = std::cos(2.0 * j * t);
  return c * c;
}

// Quasi-static average over J ~ N(j0, sigma^2): E[cos 4Jt] = cos(4 j0 t) exp(-8 sigma^2 t^2).
inline double two_qubit_average(double j0, double sigma, double t) {
  return 0.5 + 0.5 * std::cos(4.0 * j0 * t) * std::exp(-8.0 * sigma * sigma * t * t);
}

// Least-squares slope of y on x.
inline double ols_slope(const std::vector<double>& x, const std::vector<double>& y) {
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(y.size());
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  return sxy / sxx;
}

// Log-log slope of the Hann-windowed periodogram averaged over traces, on the
// decade of frequency bins centred (geometrically) in [1, n/2]. Direct DFT at
// the needed bins only.
inline double periodogram_slope(const std::vector<std::vector<double>>& traces) {
  const std::size_t n = traces.front().size();
  const double centre = std::sqrt(static_cast<double>(n / 2));
  const auto lo = static_cast<std::size_t>(std::ceil(centre / std::sqrt(10.0)));
  const auto hi = static_cast<std::size_t>(std::floor(centre * std::sqrt(10.0)));
  std::vector<double> power(hi - lo + 1, 0.0);
  std::vector<double> window(n);
  for (std::size_t i = 0; i < n; ++i) {
    window[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                     static_cast<double>(n - 1));
  }
  std::vector<double> x(n);
  for (const auto& trace : traces) {
    double mean = 0.0;
    for (double v : trace) mean += v;
    mean /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = (trace[i] - mean) * window[i];
    for (std::size_t k = lo; k <= hi; ++k) {
      std::complex<double> acc = 0.0;
      const std::complex<double> step =
          std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n));
      std::complex<double> w = 1.0;
      for (std::size_t i = 0; i < n; ++i) {
        acc += x[i] * w;
        w *= step;
        if ((i & 255) == 255) w /= std::abs(w);
      }
      power[k - lo] += std::norm(acc);
    }
  }
  std::vector<double> lx, ly;
  for (std::size_t k = lo; k <= hi; ++k) {
    lx.push_back(std::log(static_cast<double>(k)));
    ly.push_back(std::log(power[k - lo]));
  }
  return ols_slope(lx, ly);
}

// Entropy of a reduced state obtained by brute-force index bookkeeping
// (subsystem qubits listed, least significant first).
inline Eigen::MatrixXcd brute_reduced(const Eigen::VectorXcd& psi, int num_qubits,
                                      const std::vector<int>& subsystem) {
  const Eigen::Index da = Eigen::Index{1} << subsystem.size();
  Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(da, da);
  const Eigen::Index dim = Eigen::Index{1} << num_qubits;
  auto sub_index = [&](Eigen::Index b) {
    Eigen::Index a = 0;
    for (std::size_t q = 0; q < subsystem.size(); ++q)
      if ((b >> subsystem[q]) & 1) a |= Eigen::Index{1} << q;
    return a;
  };
  std::uint64_t sub_mask = 0;
  for (int q : subsystem) sub_mask |= std::uint64_t{1} << q;
  for (Eigen::Index b1 = 0; b1 < dim; ++b1) {
    for (Eigen::Index b2 = 0; b2 < dim; ++b2) {
      if ((static_cast<std::uint64_t>(b1) & ~sub_mask) != (static_cast<std::uint64_t>(b2) & ~sub_mask)) continue;
      rho(sub_index(b1), sub_index(b2)) += psi[b1] * std::conj(psi[b2]);
    }
  }
  return rho;
}

inline double entropy_of(const Eigen::MatrixXcd& rho) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(rho);
  double s = 0.0;
  for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k) {
    const double p = es.eigenvalues()[k];
    if (p > 1e-14) s -= p * std::log(p);
  }
  return s;
}

}  // namespace xtalk::testing
