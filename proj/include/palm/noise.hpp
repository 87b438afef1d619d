#pragma once

// Pixel-domain corruption models. The level parameter is the "% of error"
// fraction of a sweep cell:
//   Gaussian       additive, standard deviation = level * 255
//   SaltPepper     exactly round(level * pixels) distinct pixels forced to 0 or 255
//   Speckle        multiplicative in * (1 + n), n ~ N(0, level)
// Every output is rounded and clamped to [0, 255].

#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "palm/imageio.hpp"
#include "palm/rng.hpp"

namespace palm {

enum class NoiseKind { Gaussian, SaltPepper, Speckle };

inline std::string_view to_string(NoiseKind k) noexcept {
  switch (k) {
    case NoiseKind::Gaussian: return "gaussian";
    case NoiseKind::SaltPepper: return "salt_pepper";
    case NoiseKind::Speckle: return "speckle";
  }
  return "unknown";
}

inline NoiseKind parse_noise_kind(std::string_view s) {
  if (s == "gaussian") return NoiseKind::Gaussian;
  if (s == "salt_pepper" || s == "saltpepper" || s == "sp") return NoiseKind::SaltPepper;
  if (s == "speckle") return NoiseKind::Speckle;
  throw std::invalid_argument("unknown noise kind '" + std::string(s) + "'");
}

struct NoiseSpec {
  NoiseKind kind = NoiseKind::Gaussian;
  double level = 0.0;
  std::uint64_t seed = 0;
};

// The four sweep levels of the noise tables.
inline constexpr double kTableLevels[] = {0.02, 0.05, 0.10, 0.20};

inline GrayImage add_gaussian(const GrayImage& img, double level, std::uint64_t seed) {
  if (!(level >= 0)) throw std::invalid_argument("gaussian noise level must be nonnegative");
  GrayImage out = img;
  if (level == 0) return out;
  SplitMix64 rng(seed);
  const double sigma = level * 255.0;
  for (auto& p : out.pixels()) p = clamp_pixel(static_cast<double>(p) + sigma * rng.normal());
  return out;
}

inline GrayImage add_salt_pepper(const GrayImage& img, double level, std::uint64_t seed) {
  if (!(level >= 0 && level <= 1)) throw std::invalid_argument("salt & pepper level must lie in [0, 1]");
  GrayImage out = img;
  const std::size_t total = img.size();
  const auto count = static_cast<std::size_t>(std::llround(level * static_cast<double>(total)));
  if (count == 0) return out;
  std::vector<std::size_t> idx(total);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  SplitMix64 rng(seed);
  auto px = out.pixels();
  for (std::size_t i = 0; i < count; ++i) {
    std::swap(idx[i], idx[i + rng.below(total - i)]);
    px[idx[i]] = rng.coin() ? 255 : 0;
  }
  return out;
}

inline GrayImage add_speckle(const GrayImage& img, double level, std::uint64_t seed) {
  if (!(level >= 0)) throw std::invalid_argument("speckle level must be nonnegative");
  GrayImage out = img;
  if (level == 0) return out;
  SplitMix64 rng(seed);
  const double sd = std::sqrt(level);
  for (auto& p : out.pixels()) p = clamp_pixel(static_cast<double>(p) * (1.0 + sd * rng.normal()));
  return out;
}

inline GrayImage apply_noise(const GrayImage& img, const NoiseSpec& spec) {
  switch (spec.kind) {
    case NoiseKind::Gaussian: return add_gaussian(img, spec.level, spec.seed);
    case NoiseKind::SaltPepper: return add_salt_pepper(img, spec.level, spec.seed);
    case NoiseKind::Speckle: return add_speckle(img, spec.level, spec.seed);
  }
  throw std::invalid_argument("unknown noise kind");
}

}  // namespace palm
