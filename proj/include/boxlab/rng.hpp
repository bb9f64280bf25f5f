#pragma once

#include <cmath>
#include <cstdint>

#include "boxlab/box.hpp"

namespace boxlab {

/// 64-bit linear congruential generator:
///   state' = state * 6364136223846793005 + 1442695040888963407  (mod 2^64)
/// The state is the seed itself and is advanced before every output; uniform
/// doubles take the top 53 bits of the new state. Pinned so that reports and
/// golden values are reproducible across implementations.
class Lcg64 {
 public:
  explicit Lcg64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ = state_ * 6364136223846793005ull + 1442695040888963407ull;
    return state_;
  }

  /// Uniform in [0, 1).
  double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * next_unit(); }

  double log_uniform(double lo, double hi) {
    return std::exp(uniform(std::log(lo), std::log(hi)));
  }

  /// Uniform integer in [0, n).
  std::uint64_t next_below(std::uint64_t n) { return next_u64() % n; }

 private:
  std::uint64_t state_;
};

/// Box sampler shared by the gradcheck command and the test suites: center
/// uniform in [-5,5]^2, extents log-uniform in [0.1,4]. Draw order is
/// cx, cy, w, h.
inline Box sample_box(Lcg64& rng) {
  const double cx = rng.uniform(-5.0, 5.0);
  const double cy = rng.uniform(-5.0, 5.0);
  const double w = rng.log_uniform(0.1, 4.0);
  const double h = rng.log_uniform(0.1, 4.0);
  return Box(cx, cy, w, h);
}

struct BoxPair {
  Box pred;
  Box target;
};

/// Draws pred first, then target.
inline BoxPair sample_box_pair(Lcg64& rng) {
  Box pred = sample_box(rng);
  Box target = sample_box(rng);
  return {pred, target};
}

}  // namespace boxlab
