#pragma once

// Deterministic seeded random streams.
//
// Every stochastic operation derives its own stream from a master seed plus
// integer tags (operation id, size index, replicate index, ...). Streams are
// independent of execution order, so replicates can run on any number of
// threads and still produce identical results.

#include <cmath>
#include <cstdint>
#include <initializer_list>

namespace driftval {

namespace detail {

inline constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ull;

inline constexpr std::uint64_t mix64(std::uint64_t x) {
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ull;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebull;
  x ^= x >> 31;
  return x;
}

}  // namespace detail

/// splitmix64 generator. Small state, full 64-bit output, passes BigCrush
/// as a seeding sequence; more than enough for Monte Carlo replicates here.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += detail::kGolden;
    return detail::mix64(state_);
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller (uses two uniforms, discards the pair's
  /// second value to keep the stream layout simple).
  double next_gaussian() {
    double u1 = next_double();
    double u2 = next_double();
    while (u1 <= 0.0) u1 = next_double();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
  }

 private:
  std::uint64_t state_;
};

/// Stream tags, one per stochastic operation. Keeping them in a single enum
/// guarantees two different operations never collide on the same stream.
enum class StreamTag : std::uint64_t {
  kSampleTimes = 1,
  kSampleElements = 2,
  kCurveTrain = 3,
  kCurveTest = 4,
  kEquivTrain = 5,
  kEquivTest = 6,
  kEquivReference = 7,
  kSubstitutionNum = 8,
  kSubstitutionDen = 9,
  kOffloadGain = 10,
  kWalkKnots = 11,
};

/// Counter-based stream split: a pure hash of (seed, tag, indices).
inline std::uint64_t derive_stream(std::uint64_t seed, StreamTag tag,
                                   std::initializer_list<std::uint64_t> indices = {}) {
  std::uint64_t h = detail::mix64(seed ^ detail::kGolden);
  h = detail::mix64(h ^ (static_cast<std::uint64_t>(tag) + detail::kGolden));
  for (std::uint64_t ix : indices) {
    h = detail::mix64(h ^ (ix + detail::kGolden));
  }
  return h;
}

inline SplitMix64 make_rng(std::uint64_t seed, StreamTag tag,
                           std::initializer_list<std::uint64_t> indices = {}) {
  return SplitMix64(derive_stream(seed, tag, indices));
}

}  // namespace driftval
