#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>

namespace stereosr {

/// Counter-based generator keyed by (seed, stream_id). Identical keys yield
/// identical sequences on every platform, and sub-streams forked by id are
/// independent of draw order elsewhere.
class SeededRng {
 public:
  SeededRng(std::uint64_t seed, std::uint64_t stream_id)
      : seed_(seed), stream_(stream_id) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_; }

  /// Independent sub-stream; the counter of this stream is untouched.
  SeededRng fork(std::uint64_t sub_id) const {
    return SeededRng(seed_, mix(stream_ ^ mix(sub_id + 0x9e3779b97f4a7c15ull)));
  }

  std::uint64_t next_u64() {
    // SplitMix64 finalizer over (seed, stream, counter).
    std::uint64_t x = seed_;
    x = mix(x + 0x9e3779b97f4a7c15ull * (counter_++ + 1));
    x ^= mix(stream_);
    return mix(x);
  }

  /// Uniform in [0, 1).
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) {
    return lo + (hi - lo) * next_double();
  }

  /// Uniform integer in [0, n).
  std::uint64_t next_below(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("next_below: n must be positive");
    // Rejection sampling keeps the distribution exact.
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t v;
    do {
      v = next_u64();
    } while (v >= limit);
    return v % n;
  }

  bool bernoulli(double p) { return next_double() < p; }

  /// Standard normal via Box-Muller (the cosine branch only, so draw count
  /// per sample is fixed).
  double normal() {
    const double u1 = 1.0 - next_double();  // (0, 1]
    const double u2 = next_double();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  /// Poisson draw; Knuth multiplication for small means, normal
  /// approximation with rounding beyond (mean > 64).
  std::uint64_t poisson(double mean) {
    if (mean < 0) throw std::invalid_argument("poisson: negative mean");
    if (mean == 0) return 0;
    if (mean <= 64.0) {
      const double limit = std::exp(-mean);
      double prod = 1.0;
      std::uint64_t k = 0;
      do {
        prod *= next_double();
        ++k;
      } while (prod > limit);
      return k - 1;
    }
    const double v = mean + std::sqrt(mean) * normal();
    return v <= 0 ? 0 : static_cast<std::uint64_t>(std::llround(v));
  }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t counter_ = 0;
};

}  // namespace stereosr
