#pragma once

// Time-indexed families {P_t} of categorical distributions over a fixed
// universal element set, evaluable at any t in [0, horizon].
//
// Kinds:
//   linear          — convex interpolation between anchor distributions
//   geometric-walk  — anchors[0] starts a seeded random walk in log space;
//                     between knots the path interpolates geometrically, so
//                     entries stay strictly positive and vary continuously
//   birth-process   — anchors[0] is the base measure; each later anchor is a
//                     mass-injection event that ramps new elements in from
//                     its scheduled time onward
//
// Every kind is deterministic given (kind, anchors, seed) and evaluates to a
// valid distribution, which makes t -> KL(P_0 || P_t) continuous.

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "driftval/density.hpp"
#include "driftval/distribution.hpp"
#include "driftval/numeric.hpp"
#include "driftval/rng.hpp"

namespace driftval {

enum class DriftKind { kLinear, kGeometricWalk, kBirthProcess };

inline const char* drift_kind_name(DriftKind k) {
  switch (k) {
    case DriftKind::kLinear: return "linear";
    case DriftKind::kGeometricWalk: return "geometric-walk";
    case DriftKind::kBirthProcess: return "birth-process";
  }
  return "?";
}

inline DriftKind drift_kind_from_name(const std::string& name) {
  if (name == "linear") return DriftKind::kLinear;
  if (name == "geometric-walk") return DriftKind::kGeometricWalk;
  if (name == "birth-process") return DriftKind::kBirthProcess;
  throw std::invalid_argument("drift path: unknown kind '" + name + "'");
}

struct DriftAnchor {
  double t = 0.0;
  CategoricalDistribution distribution;
};

class DriftPath {
 public:
  // Walk shape constants; part of the path definition so that a serialized
  // {kind, seed, horizon, anchors} document fully determines the family.
  static constexpr int kWalkSegments = 16;
  static constexpr double kWalkSigma = 0.25;

  DriftPath(DriftKind kind, std::vector<DriftAnchor> anchors, double horizon,
            std::uint64_t seed = 0)
      : kind_(kind), anchors_(std::move(anchors)), horizon_(horizon), seed_(seed) {
    if (anchors_.empty()) throw std::invalid_argument("drift path: no anchors");
    if (!(horizon_ > 0.0)) throw std::invalid_argument("drift path: horizon must be positive");
    dimension_ = anchors_.front().distribution.size();
    for (std::size_t i = 0; i < anchors_.size(); ++i) {
      if (anchors_[i].distribution.size() != dimension_) {
        throw std::invalid_argument("drift path: anchor dimension mismatch");
      }
      if (i > 0 && !(anchors_[i].t > anchors_[i - 1].t)) {
        throw std::invalid_argument("drift path: anchor times must strictly increase");
      }
      if (anchors_[i].t < 0.0 || anchors_[i].t > horizon_) {
        throw std::invalid_argument("drift path: anchor time outside [0, horizon]");
      }
    }
    if (kind_ == DriftKind::kGeometricWalk) build_walk_knots();
  }

  DriftKind kind() const { return kind_; }
  double horizon() const { return horizon_; }
  std::uint64_t seed() const { return seed_; }
  std::size_t dimension() const { return dimension_; }
  std::span<const DriftAnchor> anchors() const { return anchors_; }

  CategoricalDistribution at(double t) const {
    std::vector<double> buf(dimension_);
    evaluate_into(t, buf);
    return CategoricalDistribution::from_probs(std::move(buf));
  }

  /// Allocation-free evaluation for hot sampling loops.
  void evaluate_into(double t, std::span<double> out) const {
    if (t < 0.0 || t > horizon_) {
      throw std::invalid_argument("drift path: time outside [0, horizon]");
    }
    switch (kind_) {
      case DriftKind::kLinear: evaluate_linear(t, out); break;
      case DriftKind::kGeometricWalk: evaluate_walk(t, out); break;
      case DriftKind::kBirthProcess: evaluate_birth(t, out); break;
    }
  }

  nlohmann::json to_json() const {
    nlohmann::json anchors = nlohmann::json::array();
    for (const auto& a : anchors_) {
      nlohmann::json probs = nlohmann::json::array();
      for (double p : a.distribution.probs()) probs.push_back(p);
      anchors.push_back({{"t", a.t}, {"probs", std::move(probs)}});
    }
    return nlohmann::json{{"kind", drift_kind_name(kind_)},
                          {"seed", seed_},
                          {"horizon", horizon_},
                          {"anchors", std::move(anchors)}};
  }

  static DriftPath from_json(const nlohmann::json& j) {
    const DriftKind kind = drift_kind_from_name(j.at("kind").get<std::string>());
    const std::uint64_t seed = j.value("seed", std::uint64_t{0});
    const double horizon = j.at("horizon").get<double>();
    std::vector<DriftAnchor> anchors;
    for (const auto& a : j.at("anchors")) {
      std::vector<double> probs = a.at("probs").get<std::vector<double>>();
      anchors.push_back({a.at("t").get<double>(),
                         CategoricalDistribution::smoothed(probs)});
    }
    return DriftPath(kind, std::move(anchors), horizon, seed);
  }

 private:
  void evaluate_linear(double t, std::span<double> out) const {
    const auto [i, w] = bracket(anchors_, t);
    const auto lo = anchors_[i].distribution.probs();
    const auto hi = anchors_[i + 1 < anchors_.size() ? i + 1 : i].distribution.probs();
    for (std::size_t k = 0; k < dimension_; ++k) {
      out[k] = (1.0 - w) * lo[k] + w * hi[k];
    }
  }

  void evaluate_walk(double t, std::span<double> out) const {
    const double pos = t / horizon_ * kWalkSegments;
    std::size_t seg = static_cast<std::size_t>(pos);
    if (seg >= static_cast<std::size_t>(kWalkSegments)) seg = kWalkSegments - 1;
    const double w = pos - static_cast<double>(seg);
    const auto& lo = walk_knots_[seg];
    const auto& hi = walk_knots_[seg + 1];
    KahanSum z;
    for (std::size_t k = 0; k < dimension_; ++k) {
      out[k] = std::exp((1.0 - w) * std::log(lo[k]) + w * std::log(hi[k]));
      z.add(out[k]);
    }
    const double norm = z.value();
    for (std::size_t k = 0; k < dimension_; ++k) out[k] /= norm;
  }

  void evaluate_birth(double t, std::span<double> out) const {
    const auto base = anchors_.front().distribution.probs();
    for (std::size_t k = 0; k < dimension_; ++k) out[k] = base[k];
    double total = 1.0;
    for (std::size_t j = 1; j < anchors_.size(); ++j) {
      const double start = anchors_[j].t;
      const double end = j + 1 < anchors_.size() ? anchors_[j + 1].t : horizon_;
      const double width = std::max(end - start, 1e-12);
      const double ramp = std::clamp((t - start) / width, 0.0, 1.0);
      if (ramp <= 0.0) continue;
      const auto inject = anchors_[j].distribution.probs();
      for (std::size_t k = 0; k < dimension_; ++k) out[k] += ramp * inject[k];
      total += ramp;
    }
    for (std::size_t k = 0; k < dimension_; ++k) out[k] /= total;
  }

  static std::pair<std::size_t, double> bracket(std::span<const DriftAnchor> anchors,
                                                double t) {
    if (t <= anchors.front().t) return {0, 0.0};
    if (t >= anchors.back().t) return {anchors.size() - 1, 0.0};
    std::size_t i = 0;
    while (i + 1 < anchors.size() && anchors[i + 1].t < t) ++i;
    const double span = anchors[i + 1].t - anchors[i].t;
    return {i, (t - anchors[i].t) / span};
  }

  void build_walk_knots() {
    SplitMix64 rng = make_rng(seed_, StreamTag::kWalkKnots);
    walk_knots_.resize(kWalkSegments + 1);
    std::vector<double> log_p(dimension_);
    const auto start = anchors_.front().distribution.probs();
    for (std::size_t k = 0; k < dimension_; ++k) log_p[k] = std::log(start[k]);
    const double step_sigma = kWalkSigma * std::sqrt(1.0 / kWalkSegments) *
                              std::sqrt(horizon_);
    for (int j = 0; j <= kWalkSegments; ++j) {
      KahanSum z;
      auto& knot = walk_knots_[j];
      knot.resize(dimension_);
      for (std::size_t k = 0; k < dimension_; ++k) {
        knot[k] = std::exp(log_p[k]);
        z.add(knot[k]);
      }
      for (std::size_t k = 0; k < dimension_; ++k) knot[k] /= z.value();
      if (j < kWalkSegments) {
        for (std::size_t k = 0; k < dimension_; ++k) {
          log_p[k] += step_sigma * rng.next_gaussian();
        }
      }
    }
  }

  DriftKind kind_;
  std::vector<DriftAnchor> anchors_;
  double horizon_;
  std::uint64_t seed_;
  std::size_t dimension_ = 0;
  std::vector<std::vector<double>> walk_knots_;
};

inline constexpr int kNetQuadratureSteps = 1024;
inline constexpr double kDensityNormTolerance = 1e-6;

/// Net distribution of a window: ∫ P_s(.) lambda_s ds over [t1, t2], by
/// composite trapezoid quadrature with nodes aligned to every density knot
/// and anchor time (exact for linear paths under uniform densities).
inline CategoricalDistribution net_distribution(const DriftPath& path,
                                                const SamplingDensity& density,
                                                double t1, double t2,
                                                int steps = kNetQuadratureSteps) {
  if (t1 < 0.0 || t2 > path.horizon() || !(t2 >= t1)) {
    throw std::invalid_argument("net distribution: window outside path horizon");
  }
  if (density.kind() == DensityKind::kPoint) {
    const double t = density.support_lo();
    if (t < t1 || t > t2) {
      throw std::invalid_argument("net distribution: density support outside window");
    }
    return path.at(t);
  }
  if (density.support_lo() < t1 - 1e-12 || density.support_hi() > t2 + 1e-12) {
    throw std::invalid_argument("net distribution: density support outside window");
  }
  const double mass = density.integral(t1, t2);
  if (std::abs(mass - 1.0) > kDensityNormTolerance) {
    throw std::invalid_argument("net distribution: density does not integrate to 1 over window");
  }

  // Breakpoints: window ends, density knots, anchor times inside the window.
  std::vector<double> brk{density.support_lo(), density.support_hi()};
  for (const auto& k : density.knots()) {
    if (k.t > brk.front() && k.t < brk.back()) brk.push_back(k.t);
  }
  for (const auto& a : path.anchors()) {
    if (a.t > brk.front() && a.t < brk.back()) brk.push_back(a.t);
  }
  std::sort(brk.begin(), brk.end());
  brk.erase(std::unique(brk.begin(), brk.end()), brk.end());

  // Fixed-step quadrature: per sub-interval the density mass is integrated
  // exactly and the path is evaluated at the midpoint, so linear paths under
  // uniform densities come out exact and rate jumps cost nothing.
  const std::size_t dim = path.dimension();
  std::vector<double> acc(dim, 0.0);
  std::vector<double> buf(dim);
  double weight_mass = 0.0;
  const double total_width = brk.back() - brk.front();
  for (std::size_t piece = 0; piece + 1 < brk.size(); ++piece) {
    const double lo = brk[piece];
    const double hi = brk[piece + 1];
    const int n = std::max(1, static_cast<int>(std::round(
                                  steps * (hi - lo) / total_width)));
    const double h = (hi - lo) / n;
    for (int s = 0; s < n; ++s) {
      const double a = lo + s * h;
      const double b = (s + 1 == n) ? hi : a + h;
      const double w = density.integral(a, b);
      if (w <= 0.0) continue;
      path.evaluate_into(0.5 * (a + b), buf);
      for (std::size_t k = 0; k < dim; ++k) acc[k] += w * buf[k];
      weight_mass += w;
    }
  }
  if (!(weight_mass > 0.0)) {
    throw std::invalid_argument("net distribution: density is zero on the window");
  }
  const double norm = kahan_total(acc);
  for (double& v : acc) v /= norm;
  return CategoricalDistribution::from_probs(std::move(acc));
}

inline CategoricalDistribution net_distribution(const DriftPath& path,
                                                const SamplingDensity& density) {
  if (density.kind() == DensityKind::kPoint) {
    return path.at(density.support_lo());
  }
  return net_distribution(path, density, density.support_lo(),
                          density.support_hi());
}

}  // namespace driftval
