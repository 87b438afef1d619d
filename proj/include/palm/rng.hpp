#pragma once

// SplitMix64 (Steele, Lea & Flood 2014) with derived streams.
//
// Every seeded quantity in the library is drawn from this generator so that
// results do not depend on the standard library's distribution
// implementations:
//   uniform()        (next() >> 11) * 2^-53, in [0, 1)
//   normal()         Box-Muller cosine branch, one variate per two uniforms
//   below(n)         modulo with rejection of the biased low range
//   derive_seed(s,i) seed of stream i split off from seed s

#include <cmath>
#include <cstdint>
#include <numbers>

namespace palm {

inline constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline constexpr std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t stream) noexcept {
  return mix64(parent ^ mix64(stream + 0x9E3779B97F4A7C15ULL));
}

class SplitMix64 {
public:
  explicit constexpr SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

  constexpr std::uint64_t next() noexcept {
    state_ += 0x9E3779B97F4A7C15ULL;
    return mix64(state_);
  }

  double uniform() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double normal() noexcept {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  // Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n) noexcept {
    const std::uint64_t threshold = (0 - n) % n;
    for (;;) {
      const std::uint64_t r = next();
      if (r >= threshold) return r % n;
    }
  }

  bool coin() noexcept { return (next() >> 63) != 0; }

private:
  std::uint64_t state_;
};

}  // namespace palm
