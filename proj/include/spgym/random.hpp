#pragma once

#include <cstdint>

namespace spgym {

/// Counter-based SplitMix64 stream.
///
/// Output k (k = 1, 2, ...) is mix(seed + k * 0x9E3779B97F4A7C15) where mix is
/// Stafford's "Mix13" finalizer:
///
///   z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
///   z = (z ^ (z >> 27)) * 0x94D049BB133111EB
///   z =  z ^ (z >> 31)
///
/// Only fixed-width unsigned arithmetic is involved, so a given seed yields the
/// same stream on every platform. Bounded integers use rejection sampling and
/// reals use the top bits, never std:: distributions (their output is
/// implementation-defined).
class RandomSource {
 public:
  static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;

  explicit RandomSource(std::uint64_t seed = 0) : seed_(seed) {}

  static constexpr std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t next() {
    ++counter_;
    return mix(seed_ + counter_ * kGamma);
  }

  /// Uniform integer in [0, bound). bound must be positive.
  std::uint64_t uniform_below(std::uint64_t bound) {
    // 2^64 - threshold is a multiple of bound.
    const std::uint64_t threshold = (std::uint64_t{0} - bound) % bound;
    std::uint64_t x = next();
    while (x < threshold) x = next();
    return x % bound;
  }

  /// Uniform integer in [lo, hi].
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    return lo + static_cast<std::int64_t>(
                    uniform_below(static_cast<std::uint64_t>(hi - lo) + 1));
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Uniform float in [0, 1) on the 2^-24 grid.
  float uniform_float() { return static_cast<float>(next() >> 40) * 0x1.0p-24f; }

  /// Independent child stream keyed by `key`; does not advance this stream.
  RandomSource derive(std::uint64_t key) const {
    return RandomSource(mix(seed_ ^ mix(key + kGamma)));
  }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t counter() const { return counter_; }

  friend bool operator==(const RandomSource&, const RandomSource&) = default;

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
};

}  // namespace spgym
