#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "oracles.hpp"
#include "xtalk/errors.hpp"
#include "xtalk/fitting.hpp"

namespace xtalk {
namespace {

constexpr double kJ0 = 100.0;

struct Samples {
  std::vector<double> t, v;
};

template <typename F>
Samples sample(double t_max, double dt, F f) {
  Samples s;
  const auto n = static_cast<std::size_t>(t_max / dt + 1e-9) + 1;
  for (std::size_t i = 0; i < n; ++i) {
    s.t.push_back(static_cast<double>(i) * dt);
    s.v.push_back(f(s.t.back()));
  }
  return s;
}

EnvelopePoints model_points(double p_inf, double t2, double alpha, Branch b, double t_max, int n) {
  EnvelopePoints pts;
  for (int k = 0; k < n; ++k) {
    const double t = t_max * k / (n - 1);
    pts.t.push_back(t);
    pts.value.push_back(envelope_model(t, p_inf, t2, alpha, b));
  }
  return pts;
}

TEST(Envelope, PureOscillationMaximaAreOneAndEvenlySpaced) {
  const double dt = 5e-4;
  const Samples s = sample(0.5, dt, [](double t) { return testing::two_qubit_return(kJ0, t); });
  const EnvelopePoints env = extract_envelope(s.t, s.v, {}, EnvelopeSide::kUpper);
  ASSERT_GE(env.size(), 5u);
  const double period = std::acos(-1.0) / (2.0 * kJ0);
  // a sampled maximum is within half a grid step of a true one
  const double drop = 1.0 - testing::two_qubit_return(kJ0, dt / 2.0);
  for (std::size_t k = 0; k < env.size(); ++k) EXPECT_NEAR(env.value[k], 1.0, drop + 1e-12);
  for (std::size_t k = 2; k < env.size(); ++k) {
    EXPECT_NEAR(env.t[k] - env.t[k - 1], period, dt + 1e-12);
  }
}

TEST(Envelope, MonotoneSeriesRejected) {
  const Samples s = sample(1.0, 1e-3, [](double t) { return std::exp(-t); });
  EXPECT_THROW(extract_envelope(s.t, s.v, {}, EnvelopeSide::kUpper), NumericalError);
}

TEST(Envelope, DampedCosineMaximaOnTheEnvelope) {
  auto env_fn = [](double t) { return 0.5 + 0.5 * std::exp(-std::pow(t / 0.489, 2.0)); };
  // 1e-4 steps put every sampled crest within 1e-4 of the true one
  const Samples s = sample(2.0, 1e-4, [&](double t) {
    return 0.5 + 0.5 * std::exp(-std::pow(t / 0.489, 2.0)) * std::cos(4.0 * kJ0 * t);
  });
  const EnvelopePoints env = extract_envelope(s.t, s.v, {}, EnvelopeSide::kUpper);
  ASSERT_GE(env.size(), 20u);
  for (std::size_t k = 0; k < env.size(); ++k) EXPECT_NEAR(env.value[k], env_fn(env.t[k]), 1e-3);
}

TEST(Envelope, LowerSideFindsMinima) {
  const Samples s = sample(2.0, 1e-4, [](double t) {
    return 0.5 + 0.5 * std::exp(-std::pow(t / 0.7, 2.0)) * std::cos(4.0 * kJ0 * t);
  });
  const EnvelopePoints env = extract_envelope(s.t, s.v, {}, EnvelopeSide::kLower);
  for (std::size_t k = 1; k < env.size(); ++k) {
    EXPECT_NEAR(env.value[k], 0.5 - 0.5 * std::exp(-std::pow(env.t[k] / 0.7, 2.0)), 1e-3);
  }
  EXPECT_EQ(env.t[0], 0.0);
}

TEST(Envelope, StrictlyIncreasingTimesAndStderrCarried) {
  const Samples s = sample(1.0, 5e-4, [](double t) {
    return 0.3 + 0.7 * std::exp(-t) * std::pow(std::cos(2.0 * kJ0 * t), 2.0);
  });
  std::vector<double> se(s.v.size());
  for (std::size_t i = 0; i < se.size(); ++i) se[i] = 1e-3 * static_cast<double>(i);
  const EnvelopePoints env = extract_envelope(s.t, s.v, se, EnvelopeSide::kUpper);
  ASSERT_EQ(env.uncertainty.size(), env.size());
  for (std::size_t k = 1; k < env.size(); ++k) {
    EXPECT_GT(env.t[k], env.t[k - 1]);
    EXPECT_NEAR(env.uncertainty[k], 1e-3 * env.t[k] / 5e-4, 1e-9);
  }
}

TEST(Envelope, SecondaryCrestsAreDropped) {
  // Two incommensurate tones: the envelope must follow the outer crest only.
  const Samples s = sample(1.5, 5e-4, [](double t) {
    const double e = std::exp(-std::pow(t / 0.6, 2.0));
    return 0.4 + 0.6 * e * (0.7 * std::pow(std::cos(200.0 * t), 2.0) +
                            0.3 * std::pow(std::cos(37.0 * t), 2.0));
  });
  const EnvelopePoints env = extract_envelope(s.t, s.v, {}, EnvelopeSide::kUpper);
  const double threshold = 0.005 * 0.6;
  for (std::size_t k = 1; k < env.size(); ++k) {
    for (std::size_t m = k + 1; m < env.size(); ++m) {
      EXPECT_LE(env.value[m], env.value[k] + threshold);
    }
  }
}

TEST(EnvelopeFit, RecoversNoiselessModel) {
  for (Branch b : {Branch::kPlus, Branch::kMinus}) {
    const EnvelopePoints pts = model_points(0.5, 0.489, 2.0, b, 3.0, 60);
    const EnvelopeFit fit = fit_envelope(pts, b);
    EXPECT_TRUE(fit.converged);
    EXPECT_NEAR(fit.p_inf, 0.5, 1e-6 * 0.5);
    EXPECT_NEAR(fit.t2, 0.489, 1e-6 * 0.489);
    EXPECT_NEAR(fit.alpha, 2.0, 1e-6 * 2.0);
    EXPECT_LT(fit.residual, 1e-8);
  }
  const EnvelopeFit other = fit_envelope(model_points(0.2, 1.3, 0.8, Branch::kPlus, 6.0, 80), Branch::kPlus);
  EXPECT_NEAR(other.p_inf, 0.2, 1e-6 * 0.2);
  EXPECT_NEAR(other.t2, 1.3, 1e-6 * 1.3);
  EXPECT_NEAR(other.alpha, 0.8, 1e-6 * 0.8);
}

TEST(EnvelopeFit, UnbiasedUnderNoise) {
  std::mt19937_64 gen(17);
  const double noise = 0.01;
  std::normal_distribution<double> d(0.0, noise);
  double sum = 0.0, sum_se = 0.0;
  const int trials = 100;
  for (int r = 0; r < trials; ++r) {
    EnvelopePoints pts = model_points(0.4, 0.8, 1.5, Branch::kPlus, 3.0, 50);
    pts.uncertainty.assign(pts.size(), noise);
    for (std::size_t k = 1; k < pts.size(); ++k) pts.value[k] += d(gen);
    const EnvelopeFit fit = fit_envelope(pts, Branch::kPlus);
    ASSERT_TRUE(fit.converged);
    EXPECT_TRUE(fit.weighted);
    sum += fit.t2;
    sum_se += fit.standard_error.t2;
  }
  const double mean = sum / trials;
  const double se = sum_se / trials;
  // mean of 100 fits is within 3 standard errors of the mean
  EXPECT_LT(std::abs(mean - 0.8), 3.0 * se / std::sqrt(static_cast<double>(trials)));
}

TEST(EnvelopeFit, TimeRescalingCovariance) {
  EnvelopePoints pts = model_points(0.3, 0.7, 1.7, Branch::kPlus, 3.0, 40);
  for (std::size_t k = 1; k < pts.size(); ++k) pts.value[k] += 0.01 * std::sin(7.0 * k);
  const EnvelopeFit a = fit_envelope(pts, Branch::kPlus);
  for (double& t : pts.t) t *= 4.0;
  const EnvelopeFit b = fit_envelope(pts, Branch::kPlus);
  EXPECT_NEAR(b.t2, 4.0 * a.t2, 1e-7 * b.t2);
  EXPECT_NEAR(b.alpha, a.alpha, 1e-7);
  EXPECT_NEAR(b.p_inf, a.p_inf, 1e-7);
}

TEST(EnvelopeFit, PlusBranchStaysInUnitInterval) {
  std::mt19937_64 gen(5);
  std::normal_distribution<double> d(0.0, 0.05);
  for (int r = 0; r < 20; ++r) {
    EnvelopePoints pts = model_points(0.1, 0.5, 2.5, Branch::kPlus, 2.0, 30);
    for (std::size_t k = 1; k < pts.size(); ++k) pts.value[k] = std::clamp(pts.value[k] + d(gen), 0.0, 1.0);
    const EnvelopeFit fit = fit_envelope(pts, Branch::kPlus);
    for (double t : pts.t) {
      const double y = fit.evaluate(t);
      EXPECT_GE(y, 0.0);
      EXPECT_LE(y, 1.0);
    }
  }
}

TEST(EnvelopeFit, RespectsBounds) {
  // Decay far faster than alpha = 4 allows pins alpha to its bound.
  EnvelopePoints pts = model_points(0.5, 1.0, 12.0, Branch::kPlus, 2.0, 40);
  const EnvelopeFit fit = fit_envelope(pts, Branch::kPlus);
  EXPECT_LE(fit.alpha, 4.0);
  EXPECT_GE(fit.alpha, 0.5);
  EXPECT_GE(fit.p_inf, 0.0);
  EXPECT_LE(fit.p_inf, 1.0);
}

TEST(EnvelopeFit, ConvergesWithAlphaOnItsBound) {
  // Stretched decay slower than alpha = 0.5 allows: the optimum sits on the
  // bound and the remaining parameters still settle.
  EnvelopePoints pts = model_points(0.1, 0.3, 0.3, Branch::kPlus, 4.0, 80);
  const EnvelopeFit fit = fit_envelope(pts, Branch::kPlus);
  EXPECT_TRUE(fit.converged);
  EXPECT_LT(fit.iterations, 200);
  EXPECT_DOUBLE_EQ(fit.alpha, 0.5);
}

TEST(EnvelopeFit, FlatEnvelopeIsUnconverged) {
  EnvelopePoints pts;
  for (int k = 0; k < 10; ++k) {
    pts.t.push_back(0.1 * k);
    pts.value.push_back(1.0);
  }
  const EnvelopeFit fit = fit_envelope(pts, Branch::kPlus);
  EXPECT_FALSE(fit.converged);
  EXPECT_TRUE(std::isnan(fit.t2));
  const nlohmann::json j = to_json(fit);
  EXPECT_TRUE(j.at("T2").is_null());
  EXPECT_FALSE(j.at("converged").get<bool>());
}

TEST(EnvelopeFit, TooFewPointsRejected) {
  EXPECT_THROW(fit_envelope(model_points(0.5, 1.0, 2.0, Branch::kPlus, 1.0, 3), Branch::kPlus),
               ConfigError);
}

TEST(EnvelopeFit, JsonShape) {
  const EnvelopeFit fit = fit_envelope(model_points(0.5, 0.489, 2.0, Branch::kPlus, 3.0, 30), Branch::kPlus);
  const nlohmann::json j = to_json(fit);
  for (const char* key : {"P_inf", "T2", "alpha", "branch", "residual", "stderr", "converged"}) {
    EXPECT_TRUE(j.contains(key)) << key;
  }
  EXPECT_EQ(j.at("branch"), "+");
  EXPECT_TRUE(j.at("stderr").contains("T2"));
}

TEST(PowerLaw, ExactOnLogLinearData) {
  std::vector<ScalingPoint> pts;
  for (int L = 4; L <= 10; ++L) pts.push_back({double(L), 3.0 * std::pow(double(L), -1.5)});
  const PowerLawFit fit = fit_power_law(pts);
  EXPECT_NEAR(fit.tau0, 3.0, 1e-10 * 3.0);
  EXPECT_NEAR(fit.gamma, 1.5, 1e-10);
  EXPECT_LT(fit.residual, 1e-10);
  EXPECT_EQ(fit.n_points, 7u);
  EXPECT_NEAR(fit.evaluate(5.0), 3.0 * std::pow(5.0, -1.5), 1e-12);
  const nlohmann::json j = to_json(fit);
  EXPECT_NEAR(j.at("gamma").get<double>(), 1.5, 1e-10);
}

TEST(PowerLaw, InputValidation) {
  const std::vector<ScalingPoint> two = {{4, 1.0}, {6, 0.5}};
  EXPECT_THROW(fit_power_law(two), ConfigError);
  const std::vector<ScalingPoint> neg = {{4, 1.0}, {6, -0.5}, {8, 0.2}};
  EXPECT_THROW(fit_power_law(neg), ConfigError);
  const std::vector<ScalingPoint> same = {{4, 1.0}, {4, 0.5}, {4, 0.2}};
  EXPECT_THROW(fit_power_law(same), ConfigError);
}

}  // namespace
}  // namespace xtalk
