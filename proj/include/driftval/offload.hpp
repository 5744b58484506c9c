#pragma once

// Sequential offloading: greedily deletes the stale tail [t*, t_prev] of an
// interval dataset whenever the substitution gain of the fresher remainder
// beats the reciprocal of the retained fraction, i.e.
//
//   f_{n - n0}(t**, t*) > n / (n - n0)
//
// where t* is the window's equivalent time and t** the equivalent time after
// the cut. Each accepted step provably increases the dataset's equivalent
// size; the loop stops at the first rejected step.
//
// Exact mode scores datasets with the shifted-curve model
//
//   n_bar(m, KL) = G^-1(gamma + KL + alpha * m^-beta)
//                = m * (1 + (KL/alpha) * m^beta)^(-1/beta)
//
// the finite-size analogue of inverting a learning curve whose asymptote is
// offset by the drift KL (curves are parallel in log space). It is exact at
// KL = 0 (n_bar = m), reaches the bounded limit G^-1(H + KL) as m grows, and
// keeps the gain monotone in m, so flow scaling behaves correctly.

#include <cmath>
#include <cstdint>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "driftval/density.hpp"
#include "driftval/drift_path.hpp"
#include "driftval/learning_curve.hpp"
#include "driftval/numeric.hpp"
#include "driftval/substitution.hpp"

namespace driftval {

/// Finite-size equivalent size under the shifted-curve model.
inline double shifted_curve_equiv_size(double m, double kl,
                                       const LearningCurveFit& fit) {
  if (!(m > 0.0)) return 0.0;
  if (kl < 0.0) throw std::invalid_argument("equiv size: negative KL");
  return fit.invert(fit.gamma + kl + fit.alpha * std::pow(m, -fit.beta));
}

enum class OffloadMode { kExact, kMonteCarlo };

/// Gain threshold forms. RetainedFraction is n/(n-n0), the reciprocal of the
/// kept mass fraction; SizeDeltaRatio is the literal n^(i-1)/(n^(i)-n^(i-1))
/// variant kept behind a flag for comparison.
enum class GainThreshold { kRetainedFraction, kSizeDeltaRatio };

struct OffloadOptions {
  double n = 0.0;                  // initial dataset size (fractional allowed)
  OffloadMode mode = OffloadMode::kExact;
  GainThreshold threshold = GainThreshold::kRetainedFraction;
  int iteration_cap = 64;
  double min_cut_fraction = 1e-6;  // of the original window width
  int replicates = 16;             // monte-carlo gain estimation
  LossMode loss_mode = LossMode::kExact;
  std::size_t test_draws = kDefaultTestDraws;
  double pseudo_count = kDefaultPseudoCount;
};

struct OffloadStep {
  int iteration = 0;
  double t_prev = 0.0;
  double t_new = 0.0;
  double n_prev = 0.0;
  double n_new = 0.0;
  double n_deleted = 0.0;
  double gain_ratio = 0.0;
  double threshold = 0.0;
  bool accepted = false;
  double equiv_before = 0.0;
  double equiv_after = 0.0;
  double t_star = 0.0;       // equivalent time of the window before the cut
  double t_star_new = 0.0;   // equivalent time after the cut
};

struct OffloadTrace {
  std::vector<OffloadStep> steps;
  double final_window_hi = 0.0;
  double final_size = 0.0;
  double final_equivalent_time = 0.0;
  int accepted_steps = 0;
};

namespace detail {

inline double offload_gain(const DriftPath& path, double t1, double t2, double m,
                           const LearningCurveFit& fit, const OffloadOptions& opt,
                           std::uint64_t seed, int iteration) {
  if (opt.mode == OffloadMode::kExact) {
    const CategoricalDistribution p0 = path.at(0.0);
    const double kl1 = kl_divergence(p0, path.at(t1));
    const double kl2 = kl_divergence(p0, path.at(t2));
    const double den = shifted_curve_equiv_size(m, kl2, fit);
    if (!(den > 0.0)) {
      throw std::runtime_error("sequential_offload: reference equivalence undefined");
    }
    return shifted_curve_equiv_size(m, kl1, fit) / den;
  }
  SubstitutionOptions sopt;
  sopt.n = static_cast<std::size_t>(std::llround(std::max(1.0, m)));
  sopt.replicates = opt.replicates;
  sopt.loss_mode = opt.loss_mode;
  sopt.test_draws = opt.test_draws;
  sopt.pseudo_count = opt.pseudo_count;
  sopt.mode = SubstitutionMode::kMonteCarlo;
  // fresh stream per iteration so acceptance decisions are uncorrelated
  const std::uint64_t gain_seed = derive_stream(
      seed, StreamTag::kOffloadGain, {static_cast<std::uint64_t>(iteration)});
  return substitution(path, t1, t2, fit, sopt, gain_seed);
}

inline double offload_equiv_size(const DriftPath& path, const SamplingDensity& density,
                                 double window_hi, double m,
                                 const LearningCurveFit& fit,
                                 const OffloadOptions& opt, std::uint64_t seed,
                                 std::uint64_t tag_index) {
  if (opt.mode == OffloadMode::kExact) {
    const CategoricalDistribution p0 = path.at(0.0);
    const CategoricalDistribution net = net_distribution(path, density, 0.0, window_hi);
    return shifted_curve_equiv_size(m, kl_divergence(p0, net), fit);
  }
  EquivalenceOptions eopt;
  eopt.n = static_cast<std::size_t>(std::llround(std::max(1.0, m)));
  eopt.replicates = opt.replicates;
  eopt.test_time = 0.0;
  eopt.loss_mode = opt.loss_mode;
  eopt.test_draws = opt.test_draws;
  eopt.pseudo_count = opt.pseudo_count;
  const auto est = equiv_size_for_density(
      path, density, false, fit, eopt,
      derive_stream(seed, StreamTag::kOffloadGain, {1000 + tag_index}),
      StreamTag::kEquivTrain, StreamTag::kEquivTest);
  return est.equivalent_size;
}

}  // namespace detail

/// Algorithm: starting from D_{n,[0,t],lambda}, repeatedly cut the tail at
/// the window's equivalent time while the substitution gain exceeds the
/// threshold. The trace ends with the first rejected step (or a cap/edge
/// termination) and records both sizes and recomputed equivalent sizes.
inline OffloadTrace sequential_offload(const DriftPath& path,
                                       const SamplingDensity& density, double t,
                                       const LearningCurveFit& fit,
                                       const OffloadOptions& opt,
                                       std::uint64_t seed = 0) {
  if (!(opt.n >= 2.0)) throw std::invalid_argument("sequential_offload: n must be >= 2");
  if (density.kind() != DensityKind::kPoint &&
      std::abs(density.integral(0.0, t) - 1.0) > kDensityNormTolerance) {
    throw std::invalid_argument("sequential_offload: density not normalized on window");
  }

  OffloadTrace trace;
  double window_hi = t;
  double n_current = opt.n;
  SamplingDensity current = density;
  const double min_cut = opt.min_cut_fraction * t;

  for (int iteration = 1; iteration <= opt.iteration_cap; ++iteration) {
    const EquivalentTimeResult star = equivalent_time(path, current, window_hi);
    trace.final_equivalent_time = star.t_star;

    OffloadStep step;
    step.iteration = iteration;
    step.t_prev = window_hi;
    step.n_prev = n_current;
    step.t_star = star.t_star;
    step.t_new = star.t_star;

    // nothing (or almost nothing) left to cut
    if (window_hi - star.t_star <= std::max(min_cut, 0.0)) {
      step.n_new = n_current;
      step.gain_ratio = 1.0;
      step.threshold = 1.0;
      step.accepted = false;
      trace.steps.push_back(step);
      break;
    }

    const double kept_fraction = current.integral(0.0, star.t_star);
    const double n_new = n_current * kept_fraction;
    const double n_deleted = n_current - n_new;
    step.n_new = n_new;
    step.n_deleted = n_deleted;

    if (!(n_new > 0.0) || kept_fraction <= 0.0) {
      // density mass lies entirely in the cut tail
      step.gain_ratio = 0.0;
      step.threshold = std::numeric_limits<double>::infinity();
      step.accepted = false;
      trace.steps.push_back(step);
      break;
    }

    const SamplingDensity truncated = current.restricted_to(star.t_star);
    const EquivalentTimeResult star_new = equivalent_time(path, truncated, star.t_star);
    step.t_star_new = star_new.t_star;

    step.gain_ratio = detail::offload_gain(path, star_new.t_star, star.t_star,
                                           n_new, fit, opt, seed, iteration);
    step.threshold = opt.threshold == GainThreshold::kRetainedFraction
                         ? n_current / n_new
                         : n_current / (n_new - n_current);
    step.equiv_before = detail::offload_equiv_size(
        path, current, window_hi, n_current, fit, opt, seed,
        static_cast<std::uint64_t>(2 * iteration));
    step.equiv_after = detail::offload_equiv_size(
        path, truncated, star.t_star, n_new, fit, opt, seed,
        static_cast<std::uint64_t>(2 * iteration + 1));
    step.accepted = step.gain_ratio > step.threshold;
    trace.steps.push_back(step);

    if (!step.accepted) break;

    ++trace.accepted_steps;
    window_hi = star.t_star;
    n_current = n_new;
    current = truncated;
    trace.final_equivalent_time = star_new.t_star;
  }

  trace.final_window_hi = window_hi;
  trace.final_size = n_current;
  return trace;
}

inline nlohmann::json offload_trace_json(const OffloadTrace& trace) {
  nlohmann::json steps = nlohmann::json::array();
  for (const auto& s : trace.steps) {
    steps.push_back({{"iteration", s.iteration},
                     {"t_prev", s.t_prev},
                     {"t_new", s.t_new},
                     {"n_prev", s.n_prev},
                     {"n_new", s.n_new},
                     {"n_deleted", s.n_deleted},
                     {"gain_ratio", s.gain_ratio},
                     {"threshold", s.threshold},
                     {"accepted", s.accepted},
                     {"equiv_before", s.equiv_before},
                     {"equiv_after", s.equiv_after}});
  }
  return nlohmann::json{{"steps", std::move(steps)},
                        {"final_window_hi", trace.final_window_hi},
                        {"final_size", trace.final_size},
                        {"final_equivalent_time", trace.final_equivalent_time},
                        {"accepted_steps", trace.accepted_steps}};
}

inline void write_offload_trace_csv(std::ostream& os, const OffloadTrace& trace) {
  os << "iteration,t_prev,t_new,n_prev,n_new,gain_ratio,threshold,accepted\n";
  for (const auto& s : trace.steps) {
    os << s.iteration << ',' << format_double(s.t_prev) << ','
       << format_double(s.t_new) << ',' << format_double(s.n_prev) << ','
       << format_double(s.n_new) << ',' << format_double(s.gain_ratio) << ','
       << format_double(s.threshold) << ',' << (s.accepted ? 1 : 0) << '\n';
  }
}

/// A base collection-rate table and a multiplier: psi_H = alpha * psi_L.
/// Both rates normalize to the same sampling density; only the implied
/// dataset sizes differ.
struct FlowScenario {
  std::vector<DensityKnot> base_rate;  // piecewise-constant psi_L
  double multiplier = 1.0;             // alpha >= 1
  double horizon = 0.0;
};

struct FlowComparison {
  OffloadTrace low;
  OffloadTrace high;
  double n_low = 0.0;
  double n_high = 0.0;
  double final_equivalent_time_low = 0.0;
  double final_equivalent_time_high = 0.0;
  bool acceptance_subset = false;   // every step accepted under psi_L is
                                    // accepted under psi_H at the same index
  bool final_time_weakly_closer = false;
};

/// Proposition-4 comparison: runs the offloading loop under the base rate and
/// under the multiplied rate. The normalized density is identical, so traces
/// align step-by-step while both accept; the larger implied size can only
/// keep accepting longer.
inline FlowComparison flow_scaling_analysis(const DriftPath& path,
                                            const FlowScenario& scenario,
                                            const LearningCurveFit& fit,
                                            const OffloadOptions& base_options,
                                            std::uint64_t seed = 0) {
  if (scenario.multiplier < 1.0) {
    throw std::invalid_argument("flow analysis: multiplier must be >= 1");
  }
  const SamplingDensity density = SamplingDensity::flow(scenario.base_rate);

  FlowComparison cmp;
  cmp.n_low = density.total_raw_mass();
  cmp.n_high = scenario.multiplier * cmp.n_low;

  OffloadOptions low_opt = base_options;
  low_opt.n = cmp.n_low;
  OffloadOptions high_opt = base_options;
  high_opt.n = cmp.n_high;

  cmp.low = sequential_offload(path, density, scenario.horizon, fit, low_opt, seed);
  cmp.high = sequential_offload(path, density, scenario.horizon, fit, high_opt, seed);
  cmp.final_equivalent_time_low = cmp.low.final_equivalent_time;
  cmp.final_equivalent_time_high = cmp.high.final_equivalent_time;

  cmp.acceptance_subset = true;
  for (std::size_t i = 0; i < cmp.low.steps.size(); ++i) {
    if (!cmp.low.steps[i].accepted) break;
    if (i >= cmp.high.steps.size() || !cmp.high.steps[i].accepted) {
      cmp.acceptance_subset = false;
      break;
    }
  }
  cmp.final_time_weakly_closer =
      cmp.final_equivalent_time_high <= cmp.final_equivalent_time_low + 1e-9;
  return cmp;
}

}  // namespace driftval
