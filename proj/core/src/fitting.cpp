#include "xtalk/fitting.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "xtalk/errors.hpp"

namespace xtalk {

namespace {

constexpr double kProminenceFraction = 0.005;
constexpr std::size_t kMinExtrema = 4;
constexpr double kAlphaMin = 0.5;
constexpr double kAlphaMax = 4.0;
constexpr double kT2Min = 1e-9;
constexpr double kStderrFloor = 1e-9;

// Indices of strict local maxima of `v`; a flat top counts once, at its middle.
std::vector<std::size_t> local_maxima(std::span<const double> v) {
  std::vector<std::size_t> out;
  const std::size_t n = v.size();
  std::size_t i = 1;
  while (i + 1 < n) {
    if (v[i] > v[i - 1]) {
      std::size_t j = i;
      while (j + 1 < n && v[j + 1] == v[i]) ++j;
      if (j + 1 < n && v[j + 1] < v[i]) {
        out.push_back((i + j) / 2);
      }
      i = j + 1;
    } else {
      ++i;
    }
  }
  return out;
}

// Topographic prominence: height above the higher of the two lowest points
// reachable before meeting a strictly higher sample on each side.
double prominence(std::span<const double> v, std::size_t peak) {
  const double h = v[peak];
  double left_min = h;
  for (std::size_t k = peak; k-- > 0;) {
    if (v[k] > h) break;
    left_min = std::min(left_min, v[k]);
  }
  double right_min = h;
  for (std::size_t k = peak + 1; k < v.size(); ++k) {
    if (v[k] > h) break;
    right_min = std::min(right_min, v[k]);
  }
  return h - std::max(left_min, right_min);
}

struct Residuals {
  Eigen::VectorXd r;        // sqrt(w) * (y - f)
  Eigen::MatrixXd jac;      // sqrt(w) * df/dp
  double cost = 0.0;
};

Residuals evaluate(const EnvelopePoints& pts, const Eigen::VectorXd& sqrt_w,
                   const std::array<double, 3>& p, Branch branch) {
  const double sign = branch == Branch::kPlus ? 1.0 : -1.0;
  const auto n = static_cast<Eigen::Index>(pts.size());
  Residuals out{Eigen::VectorXd(n), Eigen::MatrixXd(n, 3), 0.0};
  const double p_inf = p[0];
  const double t2 = p[1];
  const double alpha = p[2];
  for (Eigen::Index k = 0; k < n; ++k) {
    const double t = pts.t[static_cast<std::size_t>(k)];
    double u = 0.0;
    double log_ratio = 0.0;
    if (t > 0.0) {
      log_ratio = std::log(t / t2);
      u = std::exp(alpha * log_ratio);
    }
    const double e = std::exp(-u);
    const double amp = sign * (1.0 - p_inf);
    const double f = p_inf + amp * e;
    const double w = sqrt_w[k];
    out.r[k] = w * (pts.value[static_cast<std::size_t>(k)] - f);
    out.jac(k, 0) = w * (1.0 - sign * e);
    out.jac(k, 1) = w * amp * e * alpha * u / t2;
    out.jac(k, 2) = w * (-amp * e * u * log_ratio);
  }
  out.cost = out.r.squaredNorm();
  return out;
}

std::array<double, 3> clamp_params(std::array<double, 3> p, double t2_max) {
  p[0] = std::clamp(p[0], 0.0, 1.0);
  p[1] = std::clamp(p[1], kT2Min, t2_max);
  p[2] = std::clamp(p[2], kAlphaMin, kAlphaMax);
  return p;
}

double initial_t2(const EnvelopePoints& pts, double p_inf, Branch branch) {
  const double level = branch == Branch::kPlus ? p_inf + (1.0 - p_inf) / std::exp(1.0)
                                                : p_inf - (1.0 - p_inf) / std::exp(1.0);
  for (std::size_t k = 1; k < pts.size(); ++k) {
    const double a = pts.value[k - 1] - level;
    const double b = pts.value[k] - level;
    const bool crossed = branch == Branch::kPlus ? (a > 0.0 && b <= 0.0) : (a < 0.0 && b >= 0.0);
    if (crossed) {
      const double frac = a / (a - b);
      return pts.t[k - 1] + frac * (pts.t[k] - pts.t[k - 1]);
    }
  }
  return pts.t.back();
}

}  // namespace

EnvelopePoints extract_envelope(std::span<const double> times, std::span<const double> values,
                                std::span<const double> stderrs, EnvelopeSide side) {
  if (times.size() != values.size() || times.empty()) {
    throw ConfigError("envelope extraction needs matching, non-empty time and value arrays");
  }
  if (!stderrs.empty() && stderrs.size() != values.size()) {
    throw ConfigError("standard-error column length does not match values");
  }
  // Work on -v for the lower side so that everything below looks for maxima.
  std::vector<double> v(values.begin(), values.end());
  if (side == EnvelopeSide::kLower) {
    for (double& x : v) x = -x;
  }
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  const double threshold = kProminenceFraction * (*hi - *lo);

  std::vector<std::size_t> candidates;
  for (std::size_t idx : local_maxima(v)) {
    if (prominence(v, idx) >= threshold) candidates.push_back(idx);
  }

  std::vector<std::size_t> kept;
  double later_best = -std::numeric_limits<double>::infinity();
  for (std::size_t k = candidates.size(); k-- > 0;) {
    const double h = v[candidates[k]];
    if (h >= later_best - threshold) kept.push_back(candidates[k]);
    later_best = std::max(later_best, h);
  }
  std::reverse(kept.begin(), kept.end());

  if (kept.size() < kMinExtrema) {
    throw NumericalError("envelope extraction found " + std::to_string(kept.size()) +
                         " extrema (" + std::to_string(candidates.size()) +
                         " before the crest filter); need at least " +
                         std::to_string(kMinExtrema) +
                         " - is the series long enough and oscillating?");
  }

  EnvelopePoints out;
  auto push = [&](std::size_t idx) {
    out.t.push_back(times[idx]);
    out.value.push_back(values[idx]);
    if (!stderrs.empty()) out.uncertainty.push_back(stderrs[idx]);
  };
  push(0);
  for (std::size_t idx : kept) {
    if (idx > 0) push(idx);
  }
  return out;
}

EnvelopePoints extract_envelope(const AveragedSeries& series, EnvelopeSide side) {
  return extract_envelope(series.times, series.p_mean, series.p_stderr, side);
}

double envelope_model(double t, double p_inf, double t2, double alpha, Branch branch) {
  const double sign = branch == Branch::kPlus ? 1.0 : -1.0;
  const double u = t > 0.0 ? std::pow(t / t2, alpha) : 0.0;
  return p_inf + sign * (1.0 - p_inf) * std::exp(-u);
}

double EnvelopeFit::evaluate(double t) const {
  return envelope_model(t, p_inf, t2, alpha, branch);
}

EnvelopeFit fit_envelope(const EnvelopePoints& points, Branch branch,
                         const EnvelopeFitOptions& options) {
  if (points.size() < kMinExtrema) {
    throw ConfigError("envelope fit needs at least 4 points, got " +
                      std::to_string(points.size()));
  }
  for (std::size_t k = 1; k < points.size(); ++k) {
    if (!(points.t[k] > points.t[k - 1])) {
      throw ConfigError("envelope times must be strictly increasing");
    }
  }
  const auto n = static_cast<Eigen::Index>(points.size());
  const double t_max = options.t_max > 0.0 ? options.t_max : points.t.back();
  const double t2_max = 10.0 * t_max;

  EnvelopeFit fit;
  fit.branch = branch;
  fit.weighted = options.use_weights && !points.uncertainty.empty();

  Eigen::VectorXd sqrt_w = Eigen::VectorXd::Ones(n);
  if (fit.weighted) {
    for (Eigen::Index k = 0; k < n; ++k) {
      sqrt_w[k] = 1.0 / std::max(points.uncertainty[static_cast<std::size_t>(k)], kStderrFloor);
    }
  }

  // Initial guess.
  const std::size_t tail = std::max<std::size_t>(1, points.size() / 10);
  double p_inf0 = 0.0;
  for (std::size_t k = points.size() - tail; k < points.size(); ++k) p_inf0 += points.value[k];
  p_inf0 = std::clamp(p_inf0 / static_cast<double>(tail), 0.0, 1.0);

  const auto [vmin, vmax] = std::minmax_element(points.value.begin(), points.value.end());
  if (*vmax - *vmin < 1e-9) {
    // Nothing decays: every parameter but P_inf is unidentifiable.
    fit.p_inf = p_inf0;
    fit.t2 = std::numeric_limits<double>::quiet_NaN();
    fit.alpha = std::numeric_limits<double>::quiet_NaN();
    fit.standard_error = {std::numeric_limits<double>::quiet_NaN(),
                          std::numeric_limits<double>::quiet_NaN(),
                          std::numeric_limits<double>::quiet_NaN()};
    fit.converged = false;
    return fit;
  }

  std::array<double, 3> p =
      clamp_params({p_inf0, initial_t2(points, p_inf0, branch), 2.0}, t2_max);
  Residuals cur = evaluate(points, sqrt_w, p, branch);
  double lambda = 1e-3;

  for (fit.iterations = 1; fit.iterations <= options.max_iterations; ++fit.iterations) {
    const Eigen::Matrix3d jtj = cur.jac.transpose() * cur.jac;
    const Eigen::Vector3d jtr = cur.jac.transpose() * cur.r;
    Eigen::Matrix3d damped = jtj;
    for (int d = 0; d < 3; ++d) damped(d, d) += lambda * std::max(jtj(d, d), 1e-300);
    Eigen::Vector3d step = damped.ldlt().solve(jtr);
    // Parameters on a bound with the step pointing outward are held fixed and
    // the step is re-solved over the rest.
    const std::array<double, 3> lo = {0.0, kT2Min, kAlphaMin};
    const std::array<double, 3> hi = {1.0, t2_max, kAlphaMax};
    bool any_fixed = false;
    Eigen::Matrix3d reduced = damped;
    Eigen::Vector3d rhs = jtr;
    for (int d = 0; d < 3; ++d) {
      if ((p[d] <= lo[d] && step[d] < 0.0) || (p[d] >= hi[d] && step[d] > 0.0)) {
        any_fixed = true;
        reduced.row(d).setZero();
        reduced.col(d).setZero();
        reduced(d, d) = 1.0;
        rhs[d] = 0.0;
      }
    }
    if (any_fixed) step = reduced.ldlt().solve(rhs);

    std::array<double, 3> trial =
        clamp_params({p[0] + step[0], p[1] + step[1], p[2] + step[2]}, t2_max);
    double rel_change = 0.0;
    for (int d = 0; d < 3; ++d) {
      rel_change = std::max(rel_change, std::abs(trial[d] - p[d]) / std::max(std::abs(p[d]), 1e-12));
    }
    const Residuals next = evaluate(points, sqrt_w, trial, branch);
    if (std::isfinite(next.cost) && next.cost <= cur.cost) {
      p = trial;
      cur = next;
      lambda = std::max(lambda / 3.0, 1e-12);
    } else {
      lambda *= 4.0;
    }
    if (rel_change < options.relative_tolerance || !std::isfinite(rel_change)) {
      fit.converged = std::isfinite(rel_change);
      break;
    }
  }
  fit.iterations = std::min(fit.iterations, options.max_iterations);
  // A T2 on the upper bound, or shorter than the first envelope spacing, is a
  // decay the points do not resolve.
  if (p[1] < points.t[1] || p[1] >= t2_max * (1.0 - 1e-6)) fit.converged = false;

  fit.p_inf = p[0];
  fit.t2 = p[1];
  fit.alpha = p[2];
  fit.residual = std::sqrt(cur.cost);

  const Eigen::Matrix3d jtj = cur.jac.transpose() * cur.jac;
  const double dof = static_cast<double>(std::max<Eigen::Index>(n - 3, 1));
  const double s2 = cur.cost / dof;
  Eigen::FullPivLU<Eigen::Matrix3d> lu(jtj);
  if (lu.isInvertible()) {
    const Eigen::Matrix3d cov = s2 * lu.inverse();
    fit.standard_error = {std::sqrt(std::max(cov(0, 0), 0.0)), std::sqrt(std::max(cov(1, 1), 0.0)),
                          std::sqrt(std::max(cov(2, 2), 0.0))};
  } else {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    fit.standard_error = {nan, nan, nan};
  }
  return fit;
}

double PowerLawFit::evaluate(double size) const { return tau0 * std::pow(size, -gamma); }

PowerLawFit fit_power_law(std::span<const ScalingPoint> points) {
  if (points.size() < 3) {
    throw ConfigError("power-law fit needs at least 3 points, got " +
                      std::to_string(points.size()));
  }
  double sx = 0.0, sy = 0.0;
  for (const auto& pt : points) {
    if (!(pt.size > 0.0) || !(pt.t2 > 0.0)) {
      throw ConfigError("power-law fit needs positive L and T2");
    }
    sx += std::log(pt.size);
    sy += std::log(pt.t2);
  }
  const double n = static_cast<double>(points.size());
  const double mx = sx / n;
  const double my = sy / n;
  double sxx = 0.0, sxy = 0.0;
  for (const auto& pt : points) {
    const double dx = std::log(pt.size) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(pt.t2) - my);
  }
  if (sxx <= 0.0) throw ConfigError("power-law fit needs at least two distinct sizes");
  const double slope = sxy / sxx;
  const double intercept = my - slope * mx;

  PowerLawFit fit;
  fit.tau0 = std::exp(intercept);
  fit.gamma = -slope;
  fit.n_points = points.size();
  double rss = 0.0;
  for (const auto& pt : points) {
    const double r = std::log(pt.t2) - (intercept + slope * std::log(pt.size));
    rss += r * r;
  }
  fit.residual = std::sqrt(rss);
  return fit;
}

namespace {

nlohmann::json number_or_null(double x) {
  return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr);
}

}  // namespace

nlohmann::json to_json(const EnvelopeFit& fit) {
  return {
      {"P_inf", number_or_null(fit.p_inf)},
      {"T2", number_or_null(fit.t2)},
      {"alpha", number_or_null(fit.alpha)},
      {"branch", fit.branch == Branch::kPlus ? "+" : "-"},
      {"residual", number_or_null(fit.residual)},
      {"stderr",
       {{"P_inf", number_or_null(fit.standard_error.p_inf)},
        {"T2", number_or_null(fit.standard_error.t2)},
        {"alpha", number_or_null(fit.standard_error.alpha)}}},
      {"converged", fit.converged},
  };
}

nlohmann::json to_json(const PowerLawFit& fit) {
  return {
      {"tau0", fit.tau0},
      {"gamma", fit.gamma},
      {"residual", fit.residual},
      {"n_points", fit.n_points},
  };
}

}  // namespace xtalk
