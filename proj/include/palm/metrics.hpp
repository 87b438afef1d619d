#pragma once

#include <chrono>
#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <utility>

#include "palm/error.hpp"
#include "palm/imageio.hpp"

namespace palm {

inline constexpr double kPeak = 255.0;

struct QualityReport {
  double psnr_db = 0;
  double rmse = 0;
  double elapsed_seconds = 0;
};

// candidate is a column-major float field the size of the reference, scored
// before quantization.
inline double rmse(const GrayImage& reference, std::span<const double> candidate_column_major) {
  if (candidate_column_major.size() != reference.size())
    throw DimensionError("rmse: candidate size", reference.size(), candidate_column_major.size());
  double acc = 0;
  std::size_t k = 0;
  for (std::size_t col = 0; col < reference.width(); ++col)
    for (std::size_t row = 0; row < reference.height(); ++row, ++k) {
      const double d = static_cast<double>(reference.at(row, col)) - candidate_column_major[k];
      acc += d * d;
    }
  return std::sqrt(acc / static_cast<double>(reference.size()));
}

inline double rmse(const GrayImage& reference, const GrayImage& candidate) {
  if (reference.width() != candidate.width() || reference.height() != candidate.height())
    throw DimensionError("rmse: image dimensions differ (pixels)", reference.size(), candidate.size());
  double acc = 0;
  const auto a = reference.pixels();
  const auto b = candidate.pixels();
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    acc += d * d;
  }
  return std::sqrt(acc / static_cast<double>(a.size()));
}

// 20 log10(255 / rmse); +infinity for a perfect match.
inline double psnr_from_rmse(double rmse_value) {
  if (rmse_value < 0 || std::isnan(rmse_value)) throw std::invalid_argument("rmse must be nonnegative");
  if (rmse_value == 0) return std::numeric_limits<double>::infinity();
  return 20.0 * std::log10(kPeak / rmse_value);
}

// Wall-clock seconds of work(), on the monotonic clock.
template <class F>
double time_block(F&& work) {
  const auto start = std::chrono::steady_clock::now();
  std::forward<F>(work)();
  const auto stop = std::chrono::steady_clock::now();
  return std::chrono::duration<double>(stop - start).count();
}

}  // namespace palm
