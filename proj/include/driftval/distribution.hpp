#pragma once

// Categorical distributions over a fixed universal element set, plus the
// exact information-theoretic quantities the rest of the library is built
// on: entropy, KL divergence and expected cross-entropy, all in nats.

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "driftval/numeric.hpp"
#include "driftval/rng.hpp"

namespace driftval {

/// Dense index into the universal element set. Ids run 0..|omega|-1.
using ElementId = std::uint32_t;

inline constexpr double kProbSumTolerance = 1e-12;
inline constexpr double kDefaultSmoothingMass = 1e-9;

/// Strictly positive probability vector over the universal element set.
///
/// Unsupported elements never carry exactly zero mass: construction through
/// smoothed() spreads a total infinitesimal mass across them and rescales
/// the supported part, which keeps every log and KL term finite.
class CategoricalDistribution {
 public:
  CategoricalDistribution() = default;

  /// Wraps an already strictly positive, normalized vector.
  static CategoricalDistribution from_probs(std::vector<double> probs) {
    validate(probs);
    CategoricalDistribution d;
    d.probs_ = std::move(probs);
    d.smoothing_delta_ = 0.0;
    return d;
  }

  /// Builds the universal-space measure from raw (possibly zero) masses:
  /// supported entries are scaled by (1 - delta) and each unsupported entry
  /// receives delta / #unsupported.
  static CategoricalDistribution smoothed(std::span<const double> raw,
                                          double total_delta = kDefaultSmoothingMass) {
    if (raw.empty()) throw std::invalid_argument("distribution: empty support");
    if (total_delta < 0.0 || total_delta >= 1.0) {
      throw std::invalid_argument("distribution: smoothing mass must be in [0,1)");
    }
    KahanSum mass;
    std::size_t zeros = 0;
    for (double p : raw) {
      if (p < 0.0 || !std::isfinite(p)) {
        throw std::invalid_argument("distribution: negative or non-finite mass");
      }
      if (p == 0.0) ++zeros;
      mass.add(p);
    }
    const double total = mass.value();
    if (total <= 0.0) throw std::invalid_argument("distribution: zero total mass");

    std::vector<double> probs(raw.size());
    if (zeros == 0) {
      for (std::size_t i = 0; i < raw.size(); ++i) probs[i] = raw[i] / total;
      CategoricalDistribution d;
      d.probs_ = std::move(probs);
      d.smoothing_delta_ = 0.0;
      return d;
    }
    const double per_element = total_delta / static_cast<double>(zeros);
    if (per_element <= 0.0) {
      throw std::invalid_argument("distribution: unsupported elements need positive smoothing mass");
    }
    for (std::size_t i = 0; i < raw.size(); ++i) {
      probs[i] = raw[i] == 0.0 ? per_element : (1.0 - total_delta) * raw[i] / total;
    }
    CategoricalDistribution d;
    d.probs_ = std::move(probs);
    d.smoothing_delta_ = per_element;
    return d;
  }

  std::size_t size() const { return probs_.size(); }
  double operator[](std::size_t i) const { return probs_[i]; }
  std::span<const double> probs() const { return probs_; }
  double smoothing_delta() const { return smoothing_delta_; }

  /// Draws one element with a single uniform variate (inverse CDF walk).
  ElementId sample(SplitMix64& rng) const {
    return pick_element(probs_, rng.next_double());
  }

  static ElementId pick_element(std::span<const double> probs, double u) {
    double acc = 0.0;
    const std::size_t n = probs.size();
    for (std::size_t i = 0; i + 1 < n; ++i) {
      acc += probs[i];
      if (u < acc) return static_cast<ElementId>(i);
    }
    return static_cast<ElementId>(n - 1);
  }

 private:
  static void validate(std::span<const double> probs) {
    if (probs.empty()) throw std::invalid_argument("distribution: empty support");
    KahanSum sum;
    for (double p : probs) {
      if (!(p > 0.0) || !std::isfinite(p)) {
        throw std::invalid_argument("distribution: entries must be strictly positive");
      }
      sum.add(p);
    }
    if (std::abs(sum.value() - 1.0) > kProbSumTolerance) {
      throw std::invalid_argument("distribution: entries must sum to 1");
    }
  }

  std::vector<double> probs_;
  double smoothing_delta_ = 0.0;
};

namespace detail {

inline void require_same_dimension(std::span<const double> p,
                                   std::span<const double> q) {
  if (p.size() != q.size()) {
    throw std::invalid_argument("distribution: dimension mismatch");
  }
}

}  // namespace detail

/// Shannon entropy -sum p ln p, in nats. Zero entries contribute zero.
inline double entropy(std::span<const double> p) {
  KahanSum h;
  for (double pi : p) {
    if (pi > 0.0) h.add(-pi * std::log(pi));
  }
  return std::max(0.0, h.value());
}

inline double entropy(const CategoricalDistribution& p) {
  return entropy(p.probs());
}

/// KL(p || q) = sum p (ln p - ln q), in nats. Requires q > 0 wherever p > 0.
/// The term-wise (ln p - ln q) form makes the Shannon identity with entropy
/// and cross-entropy hold to machine precision.
inline double kl_divergence(std::span<const double> p, std::span<const double> q) {
  detail::require_same_dimension(p, q);
  KahanSum d;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] == 0.0) continue;
    if (!(q[i] > 0.0)) return std::numeric_limits<double>::infinity();
    d.add(p[i] * (std::log(p[i]) - std::log(q[i])));
  }
  return d.value();
}

inline double kl_divergence(const CategoricalDistribution& p,
                            const CategoricalDistribution& q) {
  return kl_divergence(p.probs(), q.probs());
}

/// Expected cross-entropy -E_p[ln model] = H(p) + KL(p || model), in nats.
inline double expected_cross_entropy(std::span<const double> p_test,
                                     std::span<const double> model) {
  detail::require_same_dimension(p_test, model);
  KahanSum x;
  for (std::size_t i = 0; i < p_test.size(); ++i) {
    if (p_test[i] == 0.0) continue;
    if (!(model[i] > 0.0)) return std::numeric_limits<double>::infinity();
    x.add(-p_test[i] * std::log(model[i]));
  }
  return x.value();
}

inline double expected_cross_entropy(const CategoricalDistribution& p_test,
                                     const CategoricalDistribution& model) {
  return expected_cross_entropy(p_test.probs(), model.probs());
}

}  // namespace driftval
