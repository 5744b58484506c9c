#pragma once

// Learning-curve estimation, power-law fitting G(n) = gamma + alpha * n^-beta,
// closed-form inversion, and the equivalent-size / effectiveness machinery
// built on top of the inverse.

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "driftval/dataset.hpp"
#include "driftval/density.hpp"
#include "driftval/drift_path.hpp"
#include "driftval/numeric.hpp"
#include "driftval/parallel.hpp"
#include "driftval/rng.hpp"

namespace driftval {

struct LearningCurvePoint {
  std::size_t n = 0;
  double mean_loss = 0.0;  // nats
  double std_err = 0.0;    // nats
  int replicates = 0;
};

/// Fitted power law G(n) = gamma + alpha * n^-beta, valid on [n_min, n_max].
struct LearningCurveFit {
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
  double n_min = 0.0;
  double n_max = 0.0;
  double r_squared = 0.0;  // in log space

  double value(double n) const {
    return gamma + alpha * std::pow(n, -beta);
  }

  /// Closed-form inverse: n = ((loss - gamma) / alpha)^(-1/beta).
  /// Throws std::domain_error below the irreducible loss; values above G(1)
  /// invert to fractional sizes < 1, which is valid output.
  double invert(double loss) const {
    auto n = try_invert(loss);
    if (!n) throw std::domain_error("learning curve: loss is at or below irreducible loss");
    return *n;
  }

  std::optional<double> try_invert(double loss) const {
    if (!(loss > gamma)) return std::nullopt;
    return std::pow((loss - gamma) / alpha, -1.0 / beta);
  }

  nlohmann::json to_json(double test_time) const {
    return nlohmann::json{{"test_time", test_time}, {"alpha", alpha},
                          {"beta", beta},           {"gamma", gamma},
                          {"r2", r_squared},        {"n_min", n_min},
                          {"n_max", n_max}};
  }

  static LearningCurveFit from_json(const nlohmann::json& j) {
    LearningCurveFit f;
    f.alpha = j.at("alpha").get<double>();
    f.beta = j.at("beta").get<double>();
    f.gamma = j.at("gamma").get<double>();
    f.n_min = j.value("n_min", 0.0);
    f.n_max = j.value("n_max", 0.0);
    f.r_squared = j.value("r2", 0.0);
    return f;
  }
};

enum class LossMode { kEmpirical, kExact };

inline constexpr std::size_t kDefaultTestDraws = 50000;

struct CurveEstimationOptions {
  std::vector<std::size_t> sizes;
  int replicates = 8;
  double train_time = 0.0;
  double test_time = 0.0;
  LossMode loss_mode = LossMode::kEmpirical;
  std::size_t test_draws = kDefaultTestDraws;
  double pseudo_count = kDefaultPseudoCount;
};

/// Monte-Carlo learning curve: for each size, the mean over replicates of
/// the loss of an estimator trained at train_time and tested at test_time.
/// Exact mode evaluates the expected loss against P_{test_time} analytically,
/// removing test-set noise entirely.
inline std::vector<LearningCurvePoint> estimate_learning_curve(
    const DriftPath& path, const CurveEstimationOptions& opt, std::uint64_t seed) {
  if (opt.sizes.empty()) throw std::invalid_argument("learning curve: no sizes");
  for (std::size_t i = 1; i < opt.sizes.size(); ++i) {
    if (opt.sizes[i] <= opt.sizes[i - 1]) {
      throw std::invalid_argument("learning curve: sizes must strictly increase");
    }
  }
  if (opt.replicates < 3) throw std::invalid_argument("learning curve: need >= 3 replicates");

  const SamplingDensity train_density = SamplingDensity::point(opt.train_time);
  const SamplingDensity test_density = SamplingDensity::point(opt.test_time);
  const CategoricalDistribution p_test = path.at(opt.test_time);

  std::vector<LearningCurvePoint> points(opt.sizes.size());
  std::vector<std::vector<double>> losses(opt.sizes.size());
  for (auto& l : losses) l.resize(static_cast<std::size_t>(opt.replicates));

  const std::size_t total = opt.sizes.size() * static_cast<std::size_t>(opt.replicates);
  parallel_for(total, [&](std::size_t job) {
    const std::size_t si = job / static_cast<std::size_t>(opt.replicates);
    const std::size_t r = job % static_cast<std::size_t>(opt.replicates);
    const std::uint64_t train_seed = derive_stream(seed, StreamTag::kCurveTrain, {si, r});
    const Dataset train = sample_dataset(path, train_density, opt.sizes[si], train_seed);
    const CategoricalEstimator est = fit_mle(train, path.dimension(), opt.pseudo_count);
    double loss;
    if (opt.loss_mode == LossMode::kExact) {
      loss = exact_loss(p_test.probs(), est);
    } else {
      const std::uint64_t test_seed = derive_stream(seed, StreamTag::kCurveTest, {si, r});
      const Dataset test = sample_dataset(path, test_density, opt.test_draws, test_seed);
      loss = empirical_loss(est, test);
    }
    losses[si][r] = loss;
  });

  for (std::size_t si = 0; si < opt.sizes.size(); ++si) {
    points[si].n = opt.sizes[si];
    points[si].replicates = opt.replicates;
    points[si].mean_loss = mean_of(losses[si]);
    points[si].std_err = std_error_of(losses[si]);
  }
  return points;
}

namespace detail {

/// Closed-form log-linear (alpha, beta) for a fixed gamma, plus the residual
/// sum of squares in the original loss space. Returns nullopt when the fit
/// degenerates (beta <= 0 or a point sits at/below gamma).
struct PowerLawCandidate {
  double alpha = 0.0;
  double beta = 0.0;
  double sse = 0.0;
};

inline std::optional<PowerLawCandidate> fit_for_gamma(
    std::span<const LearningCurvePoint> pts, double gamma) {
  std::vector<double> log_n(pts.size()), log_excess(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double excess = pts[i].mean_loss - gamma;
    if (!(excess > 0.0)) return std::nullopt;
    log_n[i] = std::log(static_cast<double>(pts[i].n));
    log_excess[i] = std::log(excess);
  }
  LinearFit lf;
  try {
    lf = linear_regression(log_n, log_excess);
  } catch (const std::invalid_argument&) {
    return std::nullopt;
  }
  PowerLawCandidate c;
  c.beta = -lf.slope;
  c.alpha = std::exp(lf.intercept);
  if (!(c.beta > 0.0) || !std::isfinite(c.alpha)) return std::nullopt;
  KahanSum sse;
  for (const auto& p : pts) {
    const double err = p.mean_loss - gamma -
                       c.alpha * std::pow(static_cast<double>(p.n), -c.beta);
    sse.add(err * err);
  }
  c.sse = sse.value();
  return c;
}

}  // namespace detail

inline constexpr int kGammaGridSize = 64;

/// Fits G(n) = gamma + alpha * n^-beta by a log-spaced gamma grid on
/// [0, min observed loss] with a closed-form log-linear (alpha, beta) per
/// candidate, then golden-section refinement of gamma around the grid best.
/// Objective: residual sum of squares in the original loss space.
inline LearningCurveFit fit_power_law(std::span<const LearningCurvePoint> points) {
  if (points.size() < 4) {
    throw std::invalid_argument("fit_power_law: need at least 4 points");
  }
  for (std::size_t i = 1; i < points.size(); ++i) {
    if (points[i].n <= points[i - 1].n) {
      throw std::invalid_argument("fit_power_law: sizes must strictly increase");
    }
  }
  if (points.back().n < 8 * points.front().n) {
    throw std::invalid_argument("fit_power_law: sizes must span at least 8x");
  }
  double min_loss = points.front().mean_loss;
  double max_loss = points.front().mean_loss;
  for (const auto& p : points) {
    min_loss = std::min(min_loss, p.mean_loss);
    max_loss = std::max(max_loss, p.mean_loss);
  }
  if (!(max_loss > min_loss) || points.back().mean_loss >= points.front().mean_loss) {
    throw std::runtime_error("fit_power_law: curve not in power-law region");
  }

  // gamma candidates: 0, then gaps below min_loss shrinking geometrically
  std::vector<double> candidates;
  candidates.reserve(kGammaGridSize);
  candidates.push_back(0.0);
  for (int k = 1; k < kGammaGridSize; ++k) {
    const double gap = std::pow(10.0, -12.0 * k / (kGammaGridSize - 1));
    candidates.push_back(min_loss * (1.0 - gap));
  }

  double best_gamma = -1.0;
  double best_sse = std::numeric_limits<double>::infinity();
  detail::PowerLawCandidate best{};
  for (double gamma : candidates) {
    const auto c = detail::fit_for_gamma(points, gamma);
    if (c && c->sse < best_sse) {
      best_sse = c->sse;
      best_gamma = gamma;
      best = *c;
    }
  }
  if (best_gamma < 0.0) {
    throw std::runtime_error("fit_power_law: curve not in power-law region");
  }

  // golden-section refinement between the neighbors of the best candidate
  {
    double lo = 0.0, hi = min_loss * (1.0 - 1e-15);
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      if (candidates[i] == best_gamma) {
        if (i > 0) lo = candidates[i - 1];
        if (i + 1 < candidates.size()) hi = candidates[i + 1];
        break;
      }
    }
    const double gr = 0.6180339887498949;
    double a = lo, b = hi;
    double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
    auto sse_at = [&](double g) {
      const auto c = detail::fit_for_gamma(points, g);
      return c ? c->sse : std::numeric_limits<double>::infinity();
    };
    double f1 = sse_at(x1), f2 = sse_at(x2);
    for (int it = 0; it < 200 && (b - a) > 1e-15 * std::max(1.0, min_loss); ++it) {
      if (f1 <= f2) {
        b = x2; x2 = x1; f2 = f1;
        x1 = b - gr * (b - a);
        f1 = sse_at(x1);
      } else {
        a = x1; x1 = x2; f1 = f2;
        x2 = a + gr * (b - a);
        f2 = sse_at(x2);
      }
    }
    const double refined = 0.5 * (a + b);
    const auto c = detail::fit_for_gamma(points, refined);
    if (c && c->sse < best_sse) {
      best_sse = c->sse;
      best_gamma = refined;
      best = *c;
    }
  }

  LearningCurveFit fit;
  fit.alpha = best.alpha;
  fit.beta = best.beta;
  fit.gamma = best_gamma;
  fit.n_min = static_cast<double>(points.front().n);
  fit.n_max = static_cast<double>(points.back().n);

  // R^2 in log space against the fitted line
  {
    std::vector<double> y(points.size()), yhat(points.size());
    bool ok = true;
    for (std::size_t i = 0; i < points.size(); ++i) {
      const double excess = points[i].mean_loss - fit.gamma;
      if (!(excess > 0.0)) { ok = false; break; }
      y[i] = std::log(excess);
      yhat[i] = std::log(fit.alpha) - fit.beta * std::log(static_cast<double>(points[i].n));
    }
    if (ok) {
      const double my = mean_of(y);
      KahanSum ss_res, ss_tot;
      for (std::size_t i = 0; i < y.size(); ++i) {
        ss_res.add((y[i] - yhat[i]) * (y[i] - yhat[i]));
        ss_tot.add((y[i] - my) * (y[i] - my));
      }
      fit.r_squared = ss_tot.value() > 0.0 ? 1.0 - ss_res.value() / ss_tot.value() : 1.0;
    }
  }
  return fit;
}

/// What the estimator is trained on: samples from `density` (a point density
/// is a fixed-time dataset, anything else is an interval dataset). With
/// exact_estimator set, the estimator is the window's net distribution
/// itself — the infinite-data limit.
struct TrainSpec {
  SamplingDensity density = SamplingDensity::point(0.0);
  bool exact_estimator = false;

  static TrainSpec at_time(double t) { return {SamplingDensity::point(t), false}; }
  static TrainSpec infinite_at_time(double t) { return {SamplingDensity::point(t), true}; }
  static TrainSpec window(SamplingDensity density) { return {std::move(density), false}; }
};

enum class InvertOrder {
  kPerReplicate,  // E[G^-1(loss_r)]: expectation outside the inverse
  kMeanLoss,      // G^-1(E[loss_r]): inverse of the mean loss
};

struct EquivalenceOptions {
  std::size_t n = 0;
  int replicates = 16;
  double test_time = 0.0;
  LossMode loss_mode = LossMode::kExact;
  std::size_t test_draws = kDefaultTestDraws;
  double pseudo_count = kDefaultPseudoCount;
  InvertOrder invert_order = InvertOrder::kPerReplicate;
};

/// Equivalent-size estimate from Monte-Carlo replicate losses; replicates
/// whose loss does not exceed the irreducible loss are dropped and counted.
struct EquivSizeEstimate {
  double equivalent_size = 0.0;
  double mean_loss = 0.0;
  double clamped_fraction = 0.0;
  int used_replicates = 0;
};

namespace detail {

inline EquivSizeEstimate equiv_size_for_density(
    const DriftPath& path, const SamplingDensity& density, bool exact_estimator,
    const LearningCurveFit& fit, const EquivalenceOptions& opt,
    std::uint64_t seed, StreamTag train_tag, StreamTag test_tag) {
  const CategoricalDistribution p_test = path.at(opt.test_time);
  EquivSizeEstimate out;

  if (exact_estimator) {
    // infinite-data shortcut: the estimator is the net distribution itself
    const CategoricalDistribution net = net_distribution(path, density);
    const double loss = expected_cross_entropy(p_test, net);
    out.mean_loss = loss;
    const auto n_bar = fit.try_invert(loss);
    if (!n_bar) {
      out.clamped_fraction = 1.0;
      return out;
    }
    out.equivalent_size = *n_bar;
    out.used_replicates = 1;
    return out;
  }

  if (opt.n < 1) throw std::invalid_argument("equivalent_size: n must be >= 1");
  if (opt.replicates < 1) throw std::invalid_argument("equivalent_size: need replicates");

  std::vector<double> losses(static_cast<std::size_t>(opt.replicates));
  parallel_for(losses.size(), [&](std::size_t r) {
    const std::uint64_t train_seed = derive_stream(seed, train_tag, {r});
    const Dataset train = sample_dataset(path, density, opt.n, train_seed);
    const CategoricalEstimator est = fit_mle(train, path.dimension(), opt.pseudo_count);
    if (opt.loss_mode == LossMode::kExact) {
      losses[r] = exact_loss(p_test.probs(), est);
    } else {
      const std::uint64_t test_seed = derive_stream(seed, test_tag, {r});
      const SamplingDensity test_density = SamplingDensity::point(opt.test_time);
      const Dataset test = sample_dataset(path, test_density, opt.test_draws, test_seed);
      losses[r] = empirical_loss(est, test);
    }
  });

  out.mean_loss = mean_of(losses);
  if (opt.invert_order == InvertOrder::kMeanLoss) {
    const auto n_bar = fit.try_invert(out.mean_loss);
    if (!n_bar) {
      out.clamped_fraction = 1.0;
      return out;
    }
    out.equivalent_size = *n_bar;
    out.used_replicates = opt.replicates;
    return out;
  }

  KahanSum inverted;
  int kept = 0;
  for (double loss : losses) {
    const auto n_bar = fit.try_invert(loss);
    if (!n_bar) continue;
    inverted.add(*n_bar);
    ++kept;
  }
  out.clamped_fraction = 1.0 - static_cast<double>(kept) /
                                   static_cast<double>(opt.replicates);
  out.used_replicates = kept;
  if (kept > 0) out.equivalent_size = inverted.value() / kept;
  return out;
}

}  // namespace detail

struct EquivalenceReport {
  std::string train_spec;
  double test_time = 0.0;
  std::size_t n = 0;
  double mean_loss = 0.0;            // nats
  double equivalent_size = 0.0;      // fractional oracle-sample count
  double reference_equivalent_size = 0.0;
  double effectiveness = 0.0;
  double clamped_fraction = 0.0;
};

/// Definition-1 equivalent size plus the effectiveness ratio against the
/// measured same-time equivalent size. `fit` must be the learning curve of
/// the test time.
inline EquivalenceReport equivalent_size(const DriftPath& path, const TrainSpec& spec,
                                         const LearningCurveFit& fit,
                                         const EquivalenceOptions& opt,
                                         std::uint64_t seed) {
  EquivalenceReport rep;
  rep.test_time = opt.test_time;
  rep.n = opt.n;
  rep.train_spec = spec.exact_estimator ? "exact:" + spec.density.describe()
                                        : spec.density.describe();

  const auto est = detail::equiv_size_for_density(
      path, spec.density, spec.exact_estimator, fit, opt, seed,
      StreamTag::kEquivTrain, StreamTag::kEquivTest);
  if (est.used_replicates == 0) {
    throw std::runtime_error("equivalent_size: all replicates clamped below irreducible loss");
  }
  rep.mean_loss = est.mean_loss;
  rep.equivalent_size = est.equivalent_size;
  rep.clamped_fraction = est.clamped_fraction;

  const SamplingDensity ref_density = SamplingDensity::point(opt.test_time);
  const auto ref = detail::equiv_size_for_density(
      path, ref_density, spec.exact_estimator, fit, opt, seed,
      StreamTag::kEquivReference, StreamTag::kEquivTest);
  if (ref.used_replicates == 0 || !(ref.equivalent_size > 0.0)) {
    throw std::runtime_error("equivalent_size: reference equivalence undefined");
  }
  rep.reference_equivalent_size = ref.equivalent_size;
  rep.effectiveness = rep.equivalent_size / ref.equivalent_size;
  return rep;
}

inline void write_equivalence_csv_header(std::ostream& os) {
  os << "train_spec,test_time,n,mean_loss_nats,equiv_size,effectiveness,clamped_fraction\n";
}

inline void write_equivalence_csv_row(std::ostream& os, const EquivalenceReport& r,
                                      double unit_scale = 1.0) {
  os << r.train_spec << ',' << format_double(r.test_time) << ',' << r.n << ','
     << format_double(r.mean_loss * unit_scale) << ','
     << format_double(r.equivalent_size) << ',' << format_double(r.effectiveness)
     << ',' << format_double(r.clamped_fraction) << '\n';
}

inline void write_curve_points_csv(std::ostream& os,
                                   std::span<const LearningCurvePoint> pts,
                                   double unit_scale = 1.0) {
  os << "n,mean_loss_nats,std_err_nats,replicates\n";
  for (const auto& p : pts) {
    os << p.n << ',' << format_double(p.mean_loss * unit_scale) << ','
       << format_double(p.std_err * unit_scale) << ',' << p.replicates << '\n';
  }
}

}  // namespace driftval
