#pragma once

// Measurement operators, named orthonormal bases, mutual coherence, and the
// binary operator container.
//
// Operator container layout (all integers little-endian):
//   bytes  0..7   magic "PALMOP01"
//   bytes  8..15  m     (uint64)
//   bytes 16..23  N     (uint64)
//   bytes 24..31  flags (uint64, bit 0 = rows orthonormal)
//   bytes 32..    m*N IEEE-754 binary64 values, row-major, little-endian

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "palm/error.hpp"
#include "palm/linops.hpp"
#include "palm/rng.hpp"

namespace palm {

// Orthonormal DCT-II matrix; row k is the k-th cosine atom.
inline Mat dct_matrix(std::size_t n) {
  Mat d(n, n);
  const double c0 = std::sqrt(1.0 / static_cast<double>(n));
  const double ck = std::sqrt(2.0 / static_cast<double>(n));
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t j = 0; j < n; ++j)
      d(k, j) = (k == 0 ? c0 : ck) *
                std::cos(std::numbers::pi * static_cast<double>((2 * j + 1) * k) / (2.0 * static_cast<double>(n)));
  return d;
}

// Sylvester Hadamard matrix scaled by 1/sqrt(n); n must be a power of two.
inline Mat hadamard_matrix(std::size_t n) {
  if (n == 0 || !std::has_single_bit(n)) throw std::invalid_argument("hadamard size must be a power of two");
  Mat h(n, n);
  const double s = 1.0 / std::sqrt(static_cast<double>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) h(i, j) = (std::popcount(i & j) % 2 == 0) ? s : -s;
  return h;
}

namespace detail {

// Modified Gram-Schmidt over the rows with one re-orthogonalization pass.
// Returns false if some row collapses relative to its drawn norm.
inline bool orthonormalize_rows(Mat& a) {
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto row = a.row(i);
    const double original = norm2(row);
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t k = 0; k < i; ++k) {
        const auto prev = a.row(k);
        const double c = dot(row, prev);
        for (std::size_t j = 0; j < row.size(); ++j) row[j] -= c * prev[j];
      }
    }
    const double nrm = norm2(row);
    if (!(nrm > 1e-10 * original) || nrm == 0.0) return false;
    for (double& e : row) e /= nrm;
  }
  return true;
}

}  // namespace detail

// m distinct rows of the N x N orthonormal DCT-II, chosen by a seeded partial
// Fisher-Yates shuffle and stored in ascending row order.
inline SensingOperator make_partial_dct(std::size_t m, std::size_t n, std::uint64_t seed) {
  if (m < 1 || m > n) throw std::invalid_argument("partial DCT requires 1 <= m <= N");
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  SplitMix64 rng(seed);
  for (std::size_t i = 0; i < m; ++i) std::swap(idx[i], idx[i + rng.below(n - i)]);
  std::sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(m));

  const Mat d = dct_matrix(n);
  Mat a(m, n);
  for (std::size_t i = 0; i < m; ++i) std::copy(d.row(idx[i]).begin(), d.row(idx[i]).end(), a.row(i).begin());
  return SensingOperator(std::move(a), true);
}

// Seeded standard-normal m x N draw with orthonormalized rows.
inline SensingOperator make_gaussian_orthonormal(std::size_t m, std::size_t n, std::uint64_t seed) {
  if (m < 1 || m > n) throw std::invalid_argument("gaussian operator requires 1 <= m <= N");
  SplitMix64 rng(seed);
  Mat a(m, n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) a(i, j) = rng.normal();
  if (!detail::orthonormalize_rows(a))
    throw Error("gaussian draw is numerically rank deficient for seed " + std::to_string(seed) +
                "; retry with a different seed");
  return SensingOperator(std::move(a), true);
}

// Two N x N bases stored column-wise: column i of phi is phi_i.
class BasisPair {
public:
  BasisPair(Mat phi, Mat psi) : phi_(std::move(phi)), psi_(std::move(psi)) {
    if (phi_.rows() != phi_.cols()) throw DimensionError("basis phi must be square", phi_.rows(), phi_.cols());
    if (psi_.rows() != psi_.cols()) throw DimensionError("basis psi must be square", psi_.rows(), psi_.cols());
    if (phi_.rows() != psi_.rows()) throw DimensionError("basis pair dimension mismatch", phi_.rows(), psi_.rows());
    if (column_gram_deviation(phi_) > 1e-10) throw std::invalid_argument("basis phi is not orthonormal");
    if (column_gram_deviation(psi_) > 1e-10) throw std::invalid_argument("basis psi is not orthonormal");
  }

  const Mat& phi() const noexcept { return phi_; }
  const Mat& psi() const noexcept { return psi_; }
  std::size_t size() const noexcept { return phi_.rows(); }

  static double column_gram_deviation(const Mat& b) {
    const Mat t = b.transpose();
    double worst = 0;
    for (std::size_t i = 0; i < t.rows(); ++i)
      for (std::size_t k = i; k < t.rows(); ++k)
        worst = std::max(worst, std::abs(dot(t.row(i), t.row(k)) - (i == k ? 1.0 : 0.0)));
    return worst;
  }

private:
  Mat phi_;
  Mat psi_;
};

// mu = sqrt(N) * max_{i,j} |<phi_i, psi_j>|, in [1, sqrt(N)] for orthonormal bases.
inline double mutual_coherence(const BasisPair& pair) {
  const Mat phi_t = pair.phi().transpose();
  const Mat psi_t = pair.psi().transpose();
  double worst = 0;
  for (std::size_t i = 0; i < phi_t.rows(); ++i)
    for (std::size_t j = 0; j < psi_t.rows(); ++j) worst = std::max(worst, std::abs(dot(phi_t.row(i), psi_t.row(j))));
  return std::sqrt(static_cast<double>(pair.size())) * worst;
}

// Named N x N orthonormal basis (columns): "identity", "dct", "hadamard",
// or "random" (seeded Gaussian, orthonormalized).
inline Mat named_basis(std::string_view name, std::size_t n, std::uint64_t seed = 0) {
  if (name == "identity") return Mat::identity(n);
  if (name == "dct") return dct_matrix(n).transpose();
  if (name == "hadamard") return hadamard_matrix(n);
  if (name == "random") return make_gaussian_orthonormal(n, n, seed).matrix().transpose();
  throw std::invalid_argument("unknown basis '" + std::string(name) + "'");
}

// Power iteration on A^T A from a fixed pseudo-random start. The Rayleigh
// quotient of a PSD matrix never decreases along power iterates, so the
// estimate is monotone in `iterations`.
inline double spectral_norm_estimate(const SensingOperator& a, std::size_t iterations) {
  if (iterations < 1) throw std::invalid_argument("spectral_norm_estimate needs at least one iteration");
  SplitMix64 rng(0x5eed5eedULL);
  Vec v(a.cols());
  for (double& e : v) e = rng.normal();
  double nv = norm2(v);
  for (double& e : v) e /= nv;

  double estimate = 0;
  Vec av(a.rows());
  Vec atav(a.cols());
  for (std::size_t it = 0; it < iterations; ++it) {
    matvec_into(a, v, av);
    estimate = std::max(estimate, norm2(av));
    adjoint_matvec_into(a, av, atav);
    nv = norm2(atav);
    if (nv == 0.0) break;
    for (std::size_t j = 0; j < v.size(); ++j) v[j] = atav[j] / nv;
  }
  matvec_into(a, v, av);
  return std::max(estimate, norm2(av));
}

inline constexpr std::string_view kOperatorMagic = "PALMOP01";

namespace detail {

inline void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

inline std::uint64_t get_u64(std::span<const std::uint8_t> in, std::size_t offset) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(in[offset + i]) << (8 * i);
  return v;
}

}  // namespace detail

inline std::vector<std::uint8_t> serialize_operator(const SensingOperator& a) {
  std::vector<std::uint8_t> out(kOperatorMagic.begin(), kOperatorMagic.end());
  out.reserve(32 + 8 * a.rows() * a.cols());
  detail::put_u64(out, a.rows());
  detail::put_u64(out, a.cols());
  detail::put_u64(out, a.rows_orthonormal() ? 1 : 0);
  for (double e : a.matrix().data()) detail::put_u64(out, std::bit_cast<std::uint64_t>(e));
  return out;
}

inline SensingOperator deserialize_operator(std::span<const std::uint8_t> in) {
  if (in.size() < 32) throw ParseError("operator container truncated header", in.size());
  if (!std::equal(kOperatorMagic.begin(), kOperatorMagic.end(), in.begin()))
    throw ParseError("operator container has bad magic", 0);
  const std::uint64_t m = detail::get_u64(in, 8);
  const std::uint64_t n = detail::get_u64(in, 16);
  const std::uint64_t flags = detail::get_u64(in, 24);
  if (m == 0 || n == 0 || m > (1u << 20) || n > (1u << 20)) throw ParseError("operator container has bad shape", 8);
  if (flags > 1) throw ParseError("operator container has unknown flags", 24);
  const std::size_t need = 32 + 8 * m * n;
  if (in.size() < need) throw ParseError("operator container truncated payload", in.size());
  if (in.size() > need) throw ParseError("operator container has trailing bytes", need);
  std::vector<double> data(m * n);
  for (std::size_t i = 0; i < data.size(); ++i) data[i] = std::bit_cast<double>(detail::get_u64(in, 32 + 8 * i));
  return SensingOperator(Mat(m, n, std::move(data)), flags == 1);
}

}  // namespace palm
