#pragma once

#include <cmath>
#include <span>
#include <stdexcept>

#include "palm/linops.hpp"

namespace palm {

// Soft-thresholding: the proximal operator of alpha * ||.||_1.
//   shrink(z, alpha)_i = sign(z_i) * max(|z_i| - alpha, 0)
// Entries inside the dead zone |z_i| <= alpha come out as exactly +0.0.
inline double shrink(double z, double alpha) noexcept {
  const double m = std::abs(z) - alpha;
  if (m <= 0.0) return 0.0;
  return std::copysign(m, z);
}

inline void shrink_into(std::span<const double> z, double alpha, std::span<double> out) {
  if (!(alpha >= 0.0)) throw std::invalid_argument("shrink: threshold must be nonnegative");
  require_same_length(z, out, "shrink: output length mismatch");
  for (std::size_t i = 0; i < z.size(); ++i) out[i] = shrink(z[i], alpha);
}

inline Vec shrink(std::span<const double> z, double alpha) {
  Vec out(z.size());
  shrink_into(z, alpha, out);
  return out;
}

}  // namespace palm
