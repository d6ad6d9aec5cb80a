#pragma once

#include <cstdint>
#include <limits>

namespace lbnn {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Child seed for stream `index` under `seed`. Distinct indices give decorrelated streams,
/// so a draw's randomness depends only on (seed, index) and never on scheduling.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  return mix64(seed ^ mix64(index + 0x9E3779B97F4A7C15ULL));
}

/// SplitMix64 generator; satisfies UniformRandomBitGenerator.
class Stream {
 public:
  using result_type = std::uint64_t;

  explicit constexpr Stream(std::uint64_t seed) : state_(mix64(seed)) {}
  constexpr Stream(std::uint64_t seed, std::uint64_t index) : Stream(derive_seed(seed, index)) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  constexpr result_type operator()() {
    state_ += 0x9E3779B97F4A7C15ULL;
    return mix64(state_);
  }

  /// Uniform on the open interval (0, 1).
  constexpr double uniform() { return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53; }

 private:
  std::uint64_t state_;
};

}  // namespace lbnn
