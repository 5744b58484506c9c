#pragma once

// Sampling densities lambda_t over a time window. Four kinds:
//   point      — all mass at one instant
//   uniform    — constant over [t1, t2]
//   piecewise  — piecewise-linear density through (t, weight) knots
//   flow       — piecewise-constant collection rate psi_t; lambda = psi / ∫psi,
//                so scaling the rate by any constant leaves lambda unchanged
//
// All kinds expose exact integrals, exact inverse-CDF sampling, and
// restriction to a sub-window (renormalized), which the offloading loop
// uses when it truncates the stale tail.

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "driftval/numeric.hpp"
#include "driftval/rng.hpp"

namespace driftval {

enum class DensityKind { kPoint, kUniform, kPiecewise, kFlow };

inline const char* density_kind_name(DensityKind k) {
  switch (k) {
    case DensityKind::kPoint: return "point";
    case DensityKind::kUniform: return "uniform";
    case DensityKind::kPiecewise: return "piecewise";
    case DensityKind::kFlow: return "flow";
  }
  return "?";
}

struct DensityKnot {
  double t = 0.0;
  double value = 0.0;  // weight (piecewise) or rate (flow)
};

class SamplingDensity {
 public:
  static SamplingDensity point(double t) {
    SamplingDensity d;
    d.kind_ = DensityKind::kPoint;
    d.knots_ = {{t, 1.0}};
    d.normalizer_ = 1.0;
    return d;
  }

  static SamplingDensity uniform(double t1, double t2) {
    if (!(t2 > t1)) throw std::invalid_argument("density: uniform needs t2 > t1");
    SamplingDensity d;
    d.kind_ = DensityKind::kUniform;
    d.knots_ = {{t1, 1.0}, {t2, 1.0}};
    d.normalizer_ = t2 - t1;
    return d;
  }

  /// Piecewise-linear density through the given knots; weights need not be
  /// normalized, the trapezoid area is divided out.
  static SamplingDensity piecewise(std::vector<DensityKnot> knots) {
    validate_knots(knots, /*allow_zero_width=*/false);
    for (const auto& k : knots) {
      if (k.value < 0.0) throw std::invalid_argument("density: negative weight");
    }
    SamplingDensity d;
    d.kind_ = DensityKind::kPiecewise;
    d.knots_ = std::move(knots);
    d.normalizer_ = d.raw_integral(d.support_lo(), d.support_hi());
    if (!(d.normalizer_ > 0.0)) {
      throw std::invalid_argument("density: zero total weight");
    }
    return d;
  }

  /// Piecewise-constant collection rate: rate knots[i].value holds on
  /// [knots[i].t, knots[i+1].t). The final knot only closes the support.
  static SamplingDensity flow(std::vector<DensityKnot> rate_knots) {
    validate_knots(rate_knots, /*allow_zero_width=*/false);
    for (std::size_t i = 0; i + 1 < rate_knots.size(); ++i) {
      if (rate_knots[i].value < 0.0) {
        throw std::invalid_argument("density: negative flow rate");
      }
    }
    SamplingDensity d;
    d.kind_ = DensityKind::kFlow;
    d.knots_ = std::move(rate_knots);
    d.normalizer_ = d.raw_integral(d.support_lo(), d.support_hi());
    if (!(d.normalizer_ > 0.0)) {
      throw std::invalid_argument("density: zero total flow");
    }
    return d;
  }

  DensityKind kind() const { return kind_; }
  std::span<const DensityKnot> knots() const { return knots_; }
  double support_lo() const { return knots_.front().t; }
  double support_hi() const { return knots_.back().t; }

  /// Total un-normalized mass (flow: the dataset size implied by the rate).
  double total_raw_mass() const { return normalizer_; }

  /// Normalized density value at t (point kind has no finite value).
  double value(double t) const {
    if (kind_ == DensityKind::kPoint) {
      throw std::logic_error("density: point mass has no finite density value");
    }
    if (t < support_lo() || t > support_hi()) return 0.0;
    return raw_value(t) / normalizer_;
  }

  /// ∫_a^b lambda_s ds, exact for every kind.
  double integral(double a, double b) const {
    if (b < a) return 0.0;
    if (kind_ == DensityKind::kPoint) {
      const double t = knots_.front().t;
      return (t >= a && t <= b) ? 1.0 : 0.0;
    }
    return raw_integral(a, b) / normalizer_;
  }

  /// Inverse-CDF draw. Exact: solves the piecewise CDF analytically.
  double sample(SplitMix64& rng) const {
    if (kind_ == DensityKind::kPoint) return knots_.front().t;
    return quantile(rng.next_double());
  }

  double quantile(double u) const {
    u = std::clamp(u, 0.0, 1.0);
    if (kind_ == DensityKind::kPoint) return knots_.front().t;
    double remaining = u * normalizer_;
    for (std::size_t i = 0; i + 1 < knots_.size(); ++i) {
      const double seg = segment_raw_mass(i);
      if (remaining <= seg || i + 2 == knots_.size()) {
        return invert_in_segment(i, std::min(remaining, seg));
      }
      remaining -= seg;
    }
    return support_hi();
  }

  /// Restriction to [support_lo, hi], renormalized. The shape of lambda on
  /// the kept part is unchanged; only the normalizer shrinks.
  SamplingDensity restricted_to(double hi) const {
    if (kind_ == DensityKind::kPoint) {
      if (knots_.front().t > hi) {
        throw std::invalid_argument("density: point mass outside restriction");
      }
      return *this;
    }
    if (!(hi > support_lo())) {
      throw std::invalid_argument("density: restriction window is empty");
    }
    hi = std::min(hi, support_hi());
    std::vector<DensityKnot> kept;
    for (const auto& k : knots_) {
      if (k.t < hi) kept.push_back(k);
    }
    kept.push_back({hi, kind_ == DensityKind::kFlow ? 0.0 : raw_value(hi)});
    SamplingDensity d;
    d.kind_ = kind_;
    d.knots_ = std::move(kept);
    d.normalizer_ = d.raw_integral(d.support_lo(), d.support_hi());
    if (!(d.normalizer_ > 0.0)) {
      throw std::invalid_argument("density: restriction has zero mass");
    }
    return d;
  }

  std::string describe() const {
    std::string s = density_kind_name(kind_);
    s += "[";
    s += format_double(support_lo());
    s += ",";
    s += format_double(support_hi());
    s += "]";
    return s;
  }

 private:
  static void validate_knots(const std::vector<DensityKnot>& knots,
                             bool allow_zero_width) {
    if (knots.size() < 2) {
      throw std::invalid_argument("density: need at least two knots");
    }
    for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
      if (!(knots[i + 1].t > knots[i].t) &&
          !(allow_zero_width && knots[i + 1].t == knots[i].t)) {
        throw std::invalid_argument("density: knot times must strictly increase");
      }
    }
  }

  double raw_value(double t) const {
    switch (kind_) {
      case DensityKind::kUniform:
        return 1.0;
      case DensityKind::kFlow: {
        // rate of the segment containing t (right-open segments)
        for (std::size_t i = 0; i + 1 < knots_.size(); ++i) {
          if (t < knots_[i + 1].t || i + 2 == knots_.size()) {
            return knots_[i].value;
          }
        }
        return knots_.front().value;
      }
      case DensityKind::kPiecewise: {
        for (std::size_t i = 0; i + 1 < knots_.size(); ++i) {
          if (t <= knots_[i + 1].t) {
            const double w = (t - knots_[i].t) / (knots_[i + 1].t - knots_[i].t);
            return knots_[i].value + w * (knots_[i + 1].value - knots_[i].value);
          }
        }
        return knots_.back().value;
      }
      case DensityKind::kPoint:
        break;
    }
    return 0.0;
  }

  double segment_raw_mass(std::size_t i) const {
    const double dt = knots_[i + 1].t - knots_[i].t;
    switch (kind_) {
      case DensityKind::kUniform:
        return dt;
      case DensityKind::kFlow:
        return knots_[i].value * dt;
      case DensityKind::kPiecewise:
        return 0.5 * (knots_[i].value + knots_[i + 1].value) * dt;
      case DensityKind::kPoint:
        break;
    }
    return 0.0;
  }

  /// Raw (un-normalized) integral over [a, b] clipped to the support.
  double raw_integral(double a, double b) const {
    a = std::max(a, support_lo());
    b = std::min(b, support_hi());
    if (!(b > a)) return 0.0;
    KahanSum total;
    for (std::size_t i = 0; i + 1 < knots_.size(); ++i) {
      const double lo = std::max(a, knots_[i].t);
      const double hi = std::min(b, knots_[i + 1].t);
      if (!(hi > lo)) continue;
      switch (kind_) {
        case DensityKind::kUniform:
          total.add(hi - lo);
          break;
        case DensityKind::kFlow:
          total.add(knots_[i].value * (hi - lo));
          break;
        case DensityKind::kPiecewise:
          total.add(0.5 * (raw_value(lo) + raw_value(hi)) * (hi - lo));
          break;
        case DensityKind::kPoint:
          break;
      }
    }
    return total.value();
  }

  /// Solves for t in segment i with raw mass `m` accumulated from its left
  /// edge. Linear for uniform/flow; quadratic for piecewise-linear.
  double invert_in_segment(std::size_t i, double m) const {
    const double t0 = knots_[i].t;
    const double t1 = knots_[i + 1].t;
    const double dt = t1 - t0;
    switch (kind_) {
      case DensityKind::kUniform:
        return std::min(t1, t0 + m);
      case DensityKind::kFlow: {
        const double rate = knots_[i].value;
        if (rate <= 0.0) return t1;
        return std::min(t1, t0 + m / rate);
      }
      case DensityKind::kPiecewise: {
        const double w0 = knots_[i].value;
        const double w1 = knots_[i + 1].value;
        const double slope = (w1 - w0) / dt;
        if (std::abs(slope) < 1e-300) {
          if (w0 <= 0.0) return t1;
          return std::min(t1, t0 + m / w0);
        }
        // Solve w0*x + slope*x^2/2 = m for x in [0, dt].
        const double disc = w0 * w0 + 2.0 * slope * m;
        const double x = (-w0 + std::sqrt(std::max(0.0, disc))) / slope;
        return std::min(t1, t0 + std::clamp(x, 0.0, dt));
      }
      case DensityKind::kPoint:
        break;
    }
    return t1;
  }

  DensityKind kind_ = DensityKind::kPoint;
  std::vector<DensityKnot> knots_;
  double normalizer_ = 1.0;
};

}  // namespace driftval
