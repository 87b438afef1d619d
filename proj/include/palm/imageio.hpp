#pragma once

// 8-bit grayscale images, PGM (P2/P5, maxval 255) persistence, and
// column-block vectorization.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "palm/error.hpp"
#include "palm/linops.hpp"
#include "palm/rng.hpp"

namespace palm {

class GrayImage {
public:
  GrayImage() = default;
  GrayImage(std::size_t width, std::size_t height, std::uint8_t fill = 0)
      : width_(width), height_(height), pixels_(width * height, fill) {}
  GrayImage(std::size_t width, std::size_t height, std::vector<std::uint8_t> pixels)
      : width_(width), height_(height), pixels_(std::move(pixels)) {
    if (pixels_.size() != width_ * height_) throw DimensionError("image pixel count", width_ * height_, pixels_.size());
  }

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t size() const noexcept { return pixels_.size(); }

  std::uint8_t& at(std::size_t row, std::size_t col) noexcept { return pixels_[row * width_ + col]; }
  std::uint8_t at(std::size_t row, std::size_t col) const noexcept { return pixels_[row * width_ + col]; }

  std::span<std::uint8_t> pixels() noexcept { return pixels_; }
  std::span<const std::uint8_t> pixels() const noexcept { return pixels_; }

  friend bool operator==(const GrayImage&, const GrayImage&) = default;

private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::vector<std::uint8_t> pixels_;
};

inline std::uint8_t clamp_pixel(double v) noexcept {
  if (!(v > 0.0)) return 0;  // also maps NaN to 0
  if (v >= 255.0) return 255;
  return static_cast<std::uint8_t>(std::lround(v));
}

namespace detail {

class PgmCursor {
public:
  PgmCursor(std::span<const std::uint8_t> bytes, std::size_t start) : bytes_(bytes), pos_(start) {}

  std::size_t offset() const noexcept { return pos_; }

  // Skips whitespace and '#' comments up to the next token.
  void skip_separators() {
    while (pos_ < bytes_.size()) {
      const auto c = bytes_[pos_];
      if (c == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n' && bytes_[pos_] != '\r') ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  std::size_t read_uint(const char* what) {
    skip_separators();
    const std::size_t start = pos_;
    std::size_t value = 0;
    while (pos_ < bytes_.size() && bytes_[pos_] >= '0' && bytes_[pos_] <= '9') {
      value = value * 10 + (bytes_[pos_] - '0');
      if (value > (std::size_t{1} << 32)) throw ParseError(std::string("PGM ") + what + " too large", start);
      ++pos_;
    }
    if (pos_ == start) {
      if (pos_ >= bytes_.size()) throw ParseError(std::string("PGM truncated before ") + what, pos_);
      throw ParseError(std::string("PGM expected integer for ") + what, pos_);
    }
    return value;
  }

  // Exactly one whitespace byte separates the header from a binary raster.
  void single_whitespace() {
    if (pos_ >= bytes_.size()) throw ParseError("PGM truncated after header", pos_);
    if (!std::isspace(static_cast<unsigned char>(bytes_[pos_]))) throw ParseError("PGM header must end with whitespace", pos_);
    ++pos_;
  }

  std::span<const std::uint8_t> rest() const noexcept { return bytes_.subspan(pos_); }

private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_;
};

}  // namespace detail

inline GrayImage read_pgm(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 2) throw ParseError("PGM truncated magic", bytes.size());
  if (bytes[0] != 'P' || (bytes[1] != '2' && bytes[1] != '5')) throw ParseError("not a P2/P5 PGM (bad magic)", 0);
  const bool binary = bytes[1] == '5';

  detail::PgmCursor cur(bytes, 2);
  const std::size_t width = cur.read_uint("width");
  const std::size_t height = cur.read_uint("height");
  cur.skip_separators();
  const std::size_t maxval_at = cur.offset();
  const std::size_t maxval = cur.read_uint("maxval");
  if (width == 0 || height == 0) throw ParseError("PGM has zero dimension", 2);
  if (maxval == 0 || maxval > 255) throw ParseError("PGM maxval must be in 1..255", maxval_at);

  std::vector<std::uint8_t> pixels(width * height);
  if (binary) {
    cur.single_whitespace();
    const auto raster = cur.rest();
    if (raster.size() < pixels.size()) throw ParseError("PGM truncated payload", cur.offset() + raster.size());
    std::copy_n(raster.begin(), pixels.size(), pixels.begin());
  } else {
    for (auto& p : pixels) {
      cur.skip_separators();
      const std::size_t at = cur.offset();
      const std::size_t v = cur.read_uint("pixel");
      if (v > maxval) throw ParseError("PGM pixel exceeds maxval", at);
      p = static_cast<std::uint8_t>(v);
    }
  }
  if (maxval != 255)
    for (auto& p : pixels) p = static_cast<std::uint8_t>((p * 255 + maxval / 2) / maxval);
  return GrayImage(width, height, std::move(pixels));
}

// P5: "P5\n<w> <h>\n255\n" followed by w*h raw bytes.
// P2: same header with "P2", then decimal pixels, one image row per line.
inline std::vector<std::uint8_t> write_pgm(const GrayImage& img, bool binary = true) {
  std::string header = std::string(binary ? "P5" : "P2") + "\n" + std::to_string(img.width()) + " " +
                       std::to_string(img.height()) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  if (binary) {
    out.insert(out.end(), img.pixels().begin(), img.pixels().end());
    return out;
  }
  for (std::size_t row = 0; row < img.height(); ++row) {
    std::string line;
    for (std::size_t col = 0; col < img.width(); ++col) {
      if (col) line += ' ';
      line += std::to_string(img.at(row, col));
    }
    line += '\n';
    out.insert(out.end(), line.begin(), line.end());
  }
  return out;
}

inline std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file_bytes(const std::string& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("short write to '" + path + "'");
}

inline GrayImage load_pgm(const std::string& path) { return read_pgm(read_file_bytes(path)); }
inline void save_pgm(const std::string& path, const GrayImage& img, bool binary = true) {
  write_file_bytes(path, write_pgm(img, binary));
}

// Splits the image into vectors of block_len pixels taken in column-major
// order. With block_len == height every block is one image column.
inline std::vector<Vec> image_to_blocks(const GrayImage& img, std::size_t block_len) {
  const std::size_t total = img.size();
  if (block_len == 0 || total % block_len != 0)
    throw std::invalid_argument("block length " + std::to_string(block_len) + " does not divide " +
                                std::to_string(total) + " pixels");
  std::vector<Vec> blocks(total / block_len, Vec(block_len));
  std::size_t k = 0;
  for (std::size_t col = 0; col < img.width(); ++col)
    for (std::size_t row = 0; row < img.height(); ++row, ++k) blocks[k / block_len][k % block_len] = img.at(row, col);
  return blocks;
}

// Column-major float field (as produced by concatenating blocks).
inline std::vector<double> blocks_to_field(std::span<const Vec> blocks, std::size_t width, std::size_t height) {
  std::vector<double> field;
  field.reserve(width * height);
  for (const Vec& b : blocks) field.insert(field.end(), b.begin(), b.end());
  if (field.size() != width * height) throw DimensionError("blocks do not cover the image", width * height, field.size());
  return field;
}

inline GrayImage field_to_image(std::span<const double> column_major, std::size_t width, std::size_t height) {
  if (column_major.size() != width * height) throw DimensionError("field size", width * height, column_major.size());
  GrayImage img(width, height);
  std::size_t k = 0;
  for (std::size_t col = 0; col < width; ++col)
    for (std::size_t row = 0; row < height; ++row) img.at(row, col) = clamp_pixel(column_major[k++]);
  return img;
}

inline GrayImage blocks_to_image(std::span<const Vec> blocks, std::size_t width, std::size_t height) {
  return field_to_image(blocks_to_field(blocks, width, height), width, height);
}

// Deterministic synthetic scene for demos and tests: smooth shading, a few
// flat disks and rectangles, values within [16, 240].
inline GrayImage synthetic_scene(std::size_t width, std::size_t height, std::uint64_t seed) {
  SplitMix64 rng(seed);
  const double fx = 20.0 + 20.0 * rng.uniform();
  const double fy = 30.0 + 30.0 * rng.uniform();
  struct Disk { double cx, cy, rad, level; };
  struct Rect { double x0, y0, x1, y1, level; };
  std::vector<Disk> disks(3);
  for (auto& d : disks) {
    d.cx = rng.uniform() * static_cast<double>(width);
    d.cy = rng.uniform() * static_cast<double>(height);
    d.rad = (0.08 + 0.12 * rng.uniform()) * static_cast<double>(std::min(width, height));
    d.level = 60.0 * (rng.uniform() - 0.5);
  }
  std::vector<Rect> rects(2);
  for (auto& r : rects) {
    r.x0 = rng.uniform() * 0.6 * static_cast<double>(width);
    r.y0 = rng.uniform() * 0.6 * static_cast<double>(height);
    r.x1 = r.x0 + (0.15 + 0.25 * rng.uniform()) * static_cast<double>(width);
    r.y1 = r.y0 + (0.15 + 0.25 * rng.uniform()) * static_cast<double>(height);
    r.level = 50.0 * (rng.uniform() - 0.5);
  }

  GrayImage img(width, height);
  for (std::size_t row = 0; row < height; ++row) {
    for (std::size_t col = 0; col < width; ++col) {
      const double x = static_cast<double>(col);
      const double y = static_cast<double>(row);
      double v = 128.0 + 50.0 * std::sin(x / fx) * std::cos(y / fy) + 0.1 * (x - y);
      for (const auto& d : disks)
        if ((x - d.cx) * (x - d.cx) + (y - d.cy) * (y - d.cy) < d.rad * d.rad) v += d.level;
      for (const auto& r : rects)
        if (x >= r.x0 && x < r.x1 && y >= r.y0 && y < r.y1) v += r.level;
      img.at(row, col) = clamp_pixel(std::clamp(v, 16.0, 240.0));
    }
  }
  return img;
}

}  // namespace palm
