#pragma once

// Substitution curves f_n(t1, t2) — the ratio of equivalent sizes when a
// size-n dataset from time t2 is swapped for one from time t1 — their
// infinite-size frontier, and the equivalent time of interval datasets.

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "driftval/drift_path.hpp"
#include "driftval/learning_curve.hpp"
#include "driftval/numeric.hpp"

namespace driftval {

inline constexpr double kKlZeroTolerance = 1e-15;

/// Frontier value lim_{n->inf} f_n(t1, t2) =
/// G^-1(H(P_0) + KL(P_0||P_t1)) / G^-1(H(P_0) + KL(P_0||P_t2)).
/// When both KL terms vanish the datasets are interchangeable (ratio 1);
/// when only the reference KL vanishes the denominator diverges (ratio 0).
inline double substitution_frontier(const DriftPath& path, double t1, double t2,
                                    const LearningCurveFit& fit) {
  const CategoricalDistribution p0 = path.at(0.0);
  const double h0 = entropy(p0);
  const double kl1 = kl_divergence(p0, path.at(t1));
  const double kl2 = kl_divergence(p0, path.at(t2));
  if (kl2 <= kKlZeroTolerance) {
    return kl1 <= kKlZeroTolerance ? 1.0 : 0.0;
  }
  const auto den = fit.try_invert(h0 + kl2);
  if (!den) throw std::runtime_error("substitution frontier: reference equivalence undefined");
  const auto num = fit.try_invert(h0 + kl1);
  if (!num) return std::numeric_limits<double>::infinity();
  return *num / *den;
}

enum class SubstitutionMode { kMonteCarlo, kExact };

struct SubstitutionOptions {
  std::size_t n = 0;
  int replicates = 16;
  LossMode loss_mode = LossMode::kExact;
  std::size_t test_draws = kDefaultTestDraws;
  double pseudo_count = kDefaultPseudoCount;
  SubstitutionMode mode = SubstitutionMode::kMonteCarlo;
};

/// f_n(t1, t2) at prediction time 0. Monte-Carlo mode forms the ratio of
/// Definition-1 equivalent sizes; exact mode returns the frontier value.
inline double substitution(const DriftPath& path, double t1, double t2,
                           const LearningCurveFit& fit,
                           const SubstitutionOptions& opt, std::uint64_t seed) {
  if (opt.mode == SubstitutionMode::kExact) {
    return substitution_frontier(path, t1, t2, fit);
  }
  if (opt.n < 1) throw std::invalid_argument("substitution: n must be >= 1");
  EquivalenceOptions eopt;
  eopt.n = opt.n;
  eopt.replicates = opt.replicates;
  eopt.test_time = 0.0;
  eopt.loss_mode = opt.loss_mode;
  eopt.test_draws = opt.test_draws;
  eopt.pseudo_count = opt.pseudo_count;

  const auto num = detail::equiv_size_for_density(
      path, SamplingDensity::point(t1), false, fit, eopt, seed,
      StreamTag::kSubstitutionNum, StreamTag::kEquivTest);
  const auto den = detail::equiv_size_for_density(
      path, SamplingDensity::point(t2), false, fit, eopt, seed,
      StreamTag::kSubstitutionDen, StreamTag::kEquivTest);
  if (den.used_replicates == 0 || !(den.equivalent_size > 0.0)) {
    throw std::runtime_error("substitution: reference equivalence undefined");
  }
  if (num.used_replicates == 0) {
    throw std::runtime_error("substitution: numerator equivalence undefined");
  }
  return num.equivalent_size / den.equivalent_size;
}

struct SubstitutionCell {
  double t1 = 0.0;
  std::size_t n = 0;
  double f_value = 0.0;
};

struct FrontierCell {
  double t1 = 0.0;
  double f_value = 0.0;
};

/// Tabulated substitution values against a fixed reference time plus the
/// infinite-size frontier along the same t1 grid.
struct SubstitutionCurve {
  double t2 = 0.0;
  std::vector<SubstitutionCell> grid;
  std::vector<FrontierCell> frontier;
};

inline SubstitutionCurve build_substitution_curve(
    const DriftPath& path, const std::vector<double>& t1_values, double t2,
    const std::vector<std::size_t>& sizes, const LearningCurveFit& fit,
    const SubstitutionOptions& base_options, std::uint64_t seed) {
  SubstitutionCurve curve;
  curve.t2 = t2;
  for (double t1 : t1_values) {
    for (std::size_t n : sizes) {
      SubstitutionOptions opt = base_options;
      opt.n = n;
      const std::uint64_t cell_seed =
          derive_stream(seed, StreamTag::kSubstitutionNum,
                        {static_cast<std::uint64_t>(curve.grid.size())});
      curve.grid.push_back({t1, n, substitution(path, t1, t2, fit, opt, cell_seed)});
    }
    curve.frontier.push_back({t1, substitution_frontier(path, t1, t2, fit)});
  }
  return curve;
}

inline void write_substitution_csv(std::ostream& os, const SubstitutionCurve& c) {
  os << "t1,t2,n,f_value,is_frontier\n";
  for (const auto& cell : c.grid) {
    os << format_double(cell.t1) << ',' << format_double(c.t2) << ',' << cell.n
       << ',' << format_double(cell.f_value) << ",0\n";
  }
  for (const auto& cell : c.frontier) {
    os << format_double(cell.t1) << ',' << format_double(c.t2) << ",0,"
       << format_double(cell.f_value) << ",1\n";
  }
}

inline constexpr double kBisectionKlTolerance = 1e-10;
inline constexpr int kBisectionMaxIterations = 200;
inline constexpr int kRootScanGrid = 4096;

struct EquivalentTimeResult {
  double t_star = 0.0;
  double kl_net = 0.0;       // KL(P_0 || net distribution), the root target
  double bracket_lo = 0.0;
  double bracket_hi = 0.0;
  double residual = 0.0;     // |KL(P_0||P_{t*}) - kl_net|
  int multiplicity = 1;      // number of crossing intervals on the scan grid
};

/// Solves KL(P_0||P_{t*}) = KL(P_0||net) on [0, t] by bisection. Under
/// monotone KL the root is unique; otherwise the smallest root is returned
/// and the multiplicity flag counts the crossings seen on the scan grid.
inline EquivalentTimeResult equivalent_time(const DriftPath& path,
                                            const SamplingDensity& density,
                                            double t) {
  if (!(t >= 0.0) || t > path.horizon()) {
    throw std::invalid_argument("equivalent_time: window outside [0, horizon]");
  }
  const CategoricalDistribution p0 = path.at(0.0);
  const CategoricalDistribution net = net_distribution(path, density, 0.0, t);
  const double target = kl_divergence(p0, net);

  EquivalentTimeResult res;
  res.kl_net = target;

  auto g = [&](double s) { return kl_divergence(p0, path.at(s)) - target; };

  // g(0) = -target; when the net distribution already matches P_0 the
  // smallest root sits at the origin
  if (target <= kBisectionKlTolerance) {
    res.t_star = 0.0;
    res.residual = target;
    return res;
  }
  if (t == 0.0) {
    throw std::runtime_error("equivalent_time: no time on [0, t] matches the net KL");
  }

  // scan for the first sign change; count all crossings for the flag
  double lo = 0.0;
  double g_lo = g(0.0);
  std::optional<std::pair<double, double>> bracket;
  int crossings = 0;
  for (int i = 1; i <= kRootScanGrid; ++i) {
    const double hi = t * static_cast<double>(i) / kRootScanGrid;
    const double g_hi = g(hi);
    if (std::abs(g_hi) <= kKlZeroTolerance || g_lo * g_hi < 0.0 ||
        (std::abs(g_lo) <= kKlZeroTolerance && g_hi > 0.0)) {
      ++crossings;
      if (!bracket) bracket = {lo, hi};
    }
    lo = hi;
    g_lo = g_hi;
  }
  if (!bracket) {
    throw std::runtime_error("equivalent_time: no time on [0, t] matches the net KL");
  }
  res.multiplicity = crossings;
  res.bracket_lo = bracket->first;
  res.bracket_hi = bracket->second;

  double a = bracket->first, b = bracket->second;
  double ga = g(a);
  for (int it = 0; it < kBisectionMaxIterations; ++it) {
    const double mid = 0.5 * (a + b);
    const double gm = g(mid);
    if (std::abs(gm) <= kBisectionKlTolerance) {
      a = b = mid;
      break;
    }
    if (ga * gm <= 0.0) {
      b = mid;
    } else {
      a = mid;
      ga = gm;
    }
  }
  res.t_star = 0.5 * (a + b);
  res.residual = std::abs(g(res.t_star));
  return res;
}

inline nlohmann::json equivalent_time_json(const EquivalentTimeResult& r, double t,
                                           const SamplingDensity& density) {
  return nlohmann::json{{"t", t},
                        {"density_kind", density_kind_name(density.kind())},
                        {"t_star", r.t_star},
                        {"kl_net", r.kl_net},
                        {"multiplicity", r.multiplicity}};
}

}  // namespace driftval
