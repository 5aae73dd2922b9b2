#pragma once

#include <span>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "xtalk/series.hpp"

namespace xtalk {

enum class EnvelopeSide { kUpper, kLower };

// Sign in P_inf +/- (1 - P_inf) exp(-(t/T2)^alpha).
enum class Branch { kPlus, kMinus };

// Envelope samples with strictly increasing t. `uncertainty` is either empty
// or holds one Monte-Carlo standard error per point.
struct EnvelopePoints {
  std::vector<double> t;
  std::vector<double> value;
  std::vector<double> uncertainty;

  std::size_t size() const { return t.size(); }
};

// Crest (upper) or trough (lower) envelope of an oscillating decay.
//
// Candidates are strict local extrema (flat tops collapse to their midpoint)
// whose topographic prominence is at least 0.5% of the series range. A
// candidate is then kept only if no later candidate beats it by more than that
// same threshold, so secondary maxima of a multi-frequency signal drop out and
// the envelope is non-increasing up to the threshold. The t = 0 sample is
// always prepended. Throws NumericalError with fewer than 4 extrema.
EnvelopePoints extract_envelope(std::span<const double> times, std::span<const double> values,
                                std::span<const double> stderrs, EnvelopeSide side);
EnvelopePoints extract_envelope(const AveragedSeries& series, EnvelopeSide side);

struct EnvelopeParams {
  double p_inf = 0.0;
  double t2 = 0.0;
  double alpha = 0.0;
};

struct EnvelopeFit {
  double p_inf = 0.0;
  double t2 = 0.0;
  double alpha = 0.0;
  Branch branch = Branch::kPlus;
  double residual = 0.0;  // weighted residual 2-norm
  EnvelopeParams standard_error;
  bool converged = false;
  int iterations = 0;
  bool weighted = false;

  double evaluate(double t) const;
};

struct EnvelopeFitOptions {
  int max_iterations = 500;
  double relative_tolerance = 1e-8;
  // Upper bound on T2 is 10 * t_max; defaults to the last envelope time.
  double t_max = 0.0;
  // Use 1/stderr^2 weights when the points carry uncertainties.
  bool use_weights = true;
};

double envelope_model(double t, double p_inf, double t2, double alpha, Branch branch);

// Bounded Levenberg-Marquardt fit with P_inf in [0, 1], T2 in (0, 10 t_max],
// alpha in [0.5, 4]. Never throws on non-convergence: the best parameters are
// returned with converged = false. So is a T2 on its upper bound or below the
// first envelope spacing, where the points resolve no decay.
EnvelopeFit fit_envelope(const EnvelopePoints& points, Branch branch,
                         const EnvelopeFitOptions& options = {});

struct ScalingPoint {
  double size = 0.0;  // L
  double t2 = 0.0;
};

// T2(L) = tau0 * L^(-gamma)
struct PowerLawFit {
  double tau0 = 0.0;
  double gamma = 0.0;
  double residual = 0.0;  // 2-norm of ln T2 residuals
  std::size_t n_points = 0;

  double evaluate(double size) const;
};

PowerLawFit fit_power_law(std::span<const ScalingPoint> points);

nlohmann::json to_json(const EnvelopeFit& fit);
nlohmann::json to_json(const PowerLawFit& fit);

}  // namespace xtalk
