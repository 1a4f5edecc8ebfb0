#pragma once

#include <cstdint>
#include <limits>

namespace qzlora {

/// SplitMix64 used as a counter-based generator: the i-th output (0-based) is
///
///   mix(seed + (i + 1) * 0x9E3779B97F4A7C15)
///
/// with the standard SplitMix64 finalizer
///
///   z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
///   z = (z ^ (z >> 27)) * 0x94D049BB133111EB
///   z ^ (z >> 31)
///
/// so the sequence for a seed matches the reference SplitMix64 stream and any
/// element can be computed directly. bounded(n) rejects draws below
/// (2^64 - n) mod n and returns draw mod n, which keeps it unbiased and easy
/// to reproduce in other languages.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;

  explicit constexpr CounterRng(std::uint64_t seed) noexcept : seed_(seed) {}

  static constexpr std::uint64_t mix(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  constexpr std::uint64_t at(std::uint64_t index) const noexcept {
    return mix(seed_ + (index + 1) * kGamma);
  }

  constexpr std::uint64_t next() noexcept { return at(counter_++); }

  /// Uniform integer in [0, bound). bound must be nonzero.
  constexpr std::uint64_t bounded(std::uint64_t bound) noexcept {
    const std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
      const std::uint64_t x = next();
      if (x >= threshold) return x % bound;
    }
  }

  /// Uniform double in [0, 1) from the top 53 bits.
  constexpr double uniform() noexcept { return double(next() >> 11) * 0x1.0p-53; }

  constexpr std::uint64_t counter() const noexcept { return counter_; }

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }
  constexpr result_type operator()() noexcept { return next(); }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
};

}  // namespace qzlora
