#pragma once

// Shared fixtures and independent oracles for the test suites. Oracle
// computations here deliberately avoid the library's code paths (long double
// direct sums, dense grid scans, brute-force maximization) so they can act
// as independent checks.

#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "driftval/driftval.hpp"

namespace testutil {

using namespace driftval;

/// Seeded random strictly-positive distribution (independent of the
/// library's smoothing logic; plain normalization of uniforms).
inline std::vector<double> random_probs(std::size_t dim, std::uint64_t seed,
                                        double min_mass = 0.05) {
  SplitMix64 rng(seed);
  std::vector<double> p(dim);
  double total = 0.0;
  for (auto& v : p) {
    v = min_mass + rng.next_double();
    total += v;
  }
  for (auto& v : p) v /= total;
  return p;
}

/// Direct long-double summation oracles.
inline double entropy_oracle(const std::vector<double>& p) {
  long double h = 0.0L;
  for (double pi : p) {
    if (pi > 0.0) h -= static_cast<long double>(pi) * std::log(static_cast<long double>(pi));
  }
  return static_cast<double>(h);
}

inline double kl_oracle(const std::vector<double>& p, const std::vector<double>& q) {
  long double d = 0.0L;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] > 0.0) {
      d += static_cast<long double>(p[i]) *
           std::log(static_cast<long double>(p[i]) / static_cast<long double>(q[i]));
    }
  }
  return static_cast<double>(d);
}

inline double cross_entropy_oracle(const std::vector<double>& p,
                                   const std::vector<double>& m) {
  long double x = 0.0L;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] > 0.0) x -= static_cast<long double>(p[i]) * std::log(static_cast<long double>(m[i]));
  }
  return static_cast<double>(x);
}

/// Linear drift path from a random P_0 toward a mixed-away P_1 whose
/// KL(P_0 || P_1) approximately equals `target_kl` (tuned by bisection on
/// the mixing weight).
inline DriftPath linear_fixture(std::size_t dim, std::uint64_t seed, double target_kl,
                                double horizon = 1.0) {
  const auto p0 = random_probs(dim, seed);
  const auto noise = random_probs(dim, seed ^ 0xabcdefull);
  auto kl_at = [&](double w) {
    std::vector<double> p1(dim);
    for (std::size_t i = 0; i < dim; ++i) p1[i] = (1.0 - w) * p0[i] + w * noise[i];
    return kl_oracle(p0, p1);
  };
  double lo = 0.0, hi = 1.0;
  if (kl_at(1.0) < target_kl) {
    hi = 1.0;  // saturate: use the most distant endpoint available
  } else {
    for (int it = 0; it < 80; ++it) {
      const double mid = 0.5 * (lo + hi);
      (kl_at(mid) < target_kl ? lo : hi) = mid;
    }
  }
  std::vector<double> p1(dim);
  for (std::size_t i = 0; i < dim; ++i) p1[i] = (1.0 - hi) * p0[i] + hi * noise[i];
  std::vector<DriftAnchor> anchors;
  anchors.push_back({0.0, CategoricalDistribution::from_probs(p0)});
  anchors.push_back({horizon, CategoricalDistribution::from_probs(p1)});
  return DriftPath(DriftKind::kLinear, std::move(anchors), horizon);
}

/// Constant path (zero drift).
inline DriftPath constant_fixture(std::size_t dim, std::uint64_t seed,
                                  double horizon = 1.0) {
  const auto p0 = random_probs(dim, seed);
  std::vector<DriftAnchor> anchors;
  anchors.push_back({0.0, CategoricalDistribution::from_probs(p0)});
  return DriftPath(DriftKind::kLinear, std::move(anchors), horizon);
}

/// Two-regime path: P_0 on [0, fresh_until], a steep linear ramp over
/// [fresh_until, fresh_until + ramp], then a distant stale distribution.
inline DriftPath two_regime_fixture(std::size_t dim, std::uint64_t seed,
                                    double stale_kl, double fresh_until = 0.5,
                                    double ramp = 0.05, double horizon = 1.0) {
  const DriftPath far_path = linear_fixture(dim, seed, stale_kl, 1.0);
  const CategoricalDistribution p0 = far_path.at(0.0);
  const CategoricalDistribution stale = far_path.at(1.0);
  std::vector<DriftAnchor> anchors;
  anchors.push_back({0.0, p0});
  anchors.push_back({fresh_until, p0});
  anchors.push_back({fresh_until + ramp, stale});
  anchors.push_back({horizon, stale});
  return DriftPath(DriftKind::kLinear, std::move(anchors), horizon);
}

/// Learning-curve fit for a fixture path at test time 0, exact loss mode.
/// Sizes start at 1024 so the smoothing bias of the estimator is negligible
/// and the curve sits cleanly in its power-law region (beta close to 1).
inline LearningCurveFit fit_fixture_curve(const DriftPath& path, std::uint64_t seed,
                                          int replicates = 24) {
  CurveEstimationOptions opt;
  opt.sizes = {1024, 2048, 4096, 8192, 16384, 32768, 65536};
  opt.replicates = replicates;
  opt.train_time = 0.0;
  opt.test_time = 0.0;
  opt.loss_mode = LossMode::kExact;
  const auto points = estimate_learning_curve(path, opt, seed);
  return fit_power_law(points);
}

/// Wilson-Hilferty chi-square critical value at upper tail probability
/// corresponding to z (e.g. z = 3.0902 for p = 0.001).
inline double chi2_critical(double df, double z) {
  const double a = 2.0 / (9.0 * df);
  const double c = 1.0 - a + z * std::sqrt(a);
  return df * c * c * c;
}

inline double chi2_statistic(const std::vector<std::size_t>& counts,
                             const std::vector<double>& expected_probs,
                             std::size_t n) {
  double stat = 0.0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const double expected = expected_probs[i] * static_cast<double>(n);
    const double diff = static_cast<double>(counts[i]) - expected;
    stat += diff * diff / expected;
  }
  return stat;
}

}  // namespace testutil
