#pragma once

// Timestamped datasets drawn from a drift path and the smoothed categorical
// maximum-likelihood estimator fitted on them.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <ostream>
#include <span>
#include <stdexcept>
#include <vector>

#include "driftval/density.hpp"
#include "driftval/distribution.hpp"
#include "driftval/drift_path.hpp"
#include "driftval/numeric.hpp"
#include "driftval/rng.hpp"

namespace driftval {

struct Draw {
  ElementId element = 0;
  double time = 0.0;
};

/// Multiset of (element, sample-time) pairs plus the seed it was drawn with.
struct Dataset {
  std::vector<Draw> draws;
  std::uint64_t seed = 0;
  DensityKind density_kind = DensityKind::kPoint;

  std::size_t size() const { return draws.size(); }
};

/// Draws n samples: t_i ~ lambda, then element_i ~ P_{t_i}. Deterministic
/// given (path, density, n, seed); each draw owns a derived stream index so
/// results do not depend on evaluation order.
inline Dataset sample_dataset(const DriftPath& path, const SamplingDensity& density,
                              std::size_t n, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("sample_dataset: n must be >= 1");
  if (density.support_lo() < 0.0 || density.support_hi() > path.horizon()) {
    throw std::invalid_argument("sample_dataset: density support outside path horizon");
  }
  Dataset data;
  data.seed = seed;
  data.density_kind = density.kind();
  data.draws.resize(n);

  SplitMix64 times = make_rng(seed, StreamTag::kSampleTimes);
  SplitMix64 elements = make_rng(seed, StreamTag::kSampleElements);

  if (density.kind() == DensityKind::kPoint) {
    // constant-time fast path: one distribution, cumulative table reused
    const double t = density.support_lo();
    const CategoricalDistribution dist = path.at(t);
    std::vector<double> cdf(dist.size());
    double acc = 0.0;
    for (std::size_t k = 0; k < dist.size(); ++k) {
      acc += dist[k];
      cdf[k] = acc;
    }
    for (std::size_t i = 0; i < n; ++i) {
      const double u = elements.next_double() * acc;
      const auto it = std::lower_bound(cdf.begin(), cdf.end(), u);
      data.draws[i] = {static_cast<ElementId>(it - cdf.begin()), t};
    }
    return data;
  }

  std::vector<double> buf(path.dimension());
  for (std::size_t i = 0; i < n; ++i) {
    const double t = density.sample(times);
    path.evaluate_into(t, buf);
    data.draws[i] = {CategoricalDistribution::pick_element(buf, elements.next_double()), t};
  }
  return data;
}

/// Smoothed empirical frequency vector over the universal element set.
struct CategoricalEstimator {
  std::vector<double> probs;
  std::size_t train_size = 0;

  double operator[](std::size_t i) const { return probs[i]; }
  std::size_t dimension() const { return probs.size(); }
};

inline constexpr double kDefaultPseudoCount = 0.5;

/// Additive-smoothing MLE: probs ∝ count + pseudo_count. A pseudo-count of
/// zero gives the exact MLE on the observed support (zeros allowed).
inline CategoricalEstimator fit_mle(const Dataset& data, std::size_t omega_size,
                                    double pseudo_count = kDefaultPseudoCount) {
  if (data.draws.empty()) throw std::invalid_argument("fit_mle: empty dataset");
  if (pseudo_count < 0.0) throw std::invalid_argument("fit_mle: negative pseudo-count");
  CategoricalEstimator est;
  est.train_size = data.draws.size();
  est.probs.assign(omega_size, pseudo_count);
  for (const Draw& d : data.draws) {
    if (d.element >= omega_size) throw std::invalid_argument("fit_mle: element id out of range");
    est.probs[d.element] += 1.0;
  }
  const double denom = static_cast<double>(est.train_size) +
                       pseudo_count * static_cast<double>(omega_size);
  for (double& p : est.probs) p /= denom;
  return est;
}

/// Empirical cross-entropy -(1/m) sum ln model(element_i), in nats.
inline double empirical_loss(const CategoricalEstimator& model, const Dataset& test) {
  if (test.draws.empty()) throw std::invalid_argument("empirical_loss: empty test set");
  KahanSum s;
  for (const Draw& d : test.draws) {
    if (d.element >= model.dimension()) {
      throw std::invalid_argument("empirical_loss: element id out of range");
    }
    const double p = model.probs[d.element];
    if (!(p > 0.0)) return std::numeric_limits<double>::infinity();
    s.add(-std::log(p));
  }
  return s.value() / static_cast<double>(test.draws.size());
}

/// Exact expected loss of an estimator on distribution p_test (Shannon
/// identity route: H + KL computed as one cross-entropy sum).
inline double exact_loss(std::span<const double> p_test,
                         const CategoricalEstimator& model) {
  return expected_cross_entropy(p_test, model.probs);
}

inline void write_dataset_csv(std::ostream& os, const Dataset& data) {
  os << "element_id,sample_time\n";
  for (const Draw& d : data.draws) {
    os << d.element << ',' << format_double(d.time) << '\n';
  }
}

struct LossRecord {
  int replicate = 0;
  std::size_t n = 0;
  double loss_nats = 0.0;
};

inline void write_loss_csv(std::ostream& os, std::span<const LossRecord> rows,
                           double unit_scale = 1.0) {
  os << "replicate,n,loss_nats\n";
  for (const LossRecord& r : rows) {
    os << r.replicate << ',' << r.n << ',' << format_double(r.loss_nats * unit_scale)
       << '\n';
  }
}

}  // namespace driftval
