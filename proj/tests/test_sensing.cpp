#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "oracles.hpp"
#include "palm/sensing.hpp"
#include "test_util.hpp"

using palm::Mat;
using palm::SensingOperator;

namespace {

double gram_max_deviation(const Mat& a, bool rows) {
  const oracle::Dense d = to_dense(rows ? a : a.transpose());
  double worst = 0;
  for (std::size_t i = 0; i < d.size(); ++i)
    for (std::size_t k = 0; k < d.size(); ++k) worst = std::max(worst, std::abs(oracle::naive_dot(d[i], d[k]) - (i == k)));
  return worst;
}

Mat permute_columns(const Mat& m, std::uint64_t seed) {
  std::vector<std::size_t> p(m.cols());
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = i;
  std::mt19937_64 gen(seed);
  std::shuffle(p.begin(), p.end(), gen);
  Mat out(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) out(i, j) = m(i, p[j]);
  return out;
}

}  // namespace

TEST(PartialDct, FullTransformIsOrthogonal) {
  const auto a = palm::make_partial_dct(32, 32, 5);
  EXPECT_TRUE(a.rows_orthonormal());
  EXPECT_LE(gram_max_deviation(a.matrix(), true), 1e-12);
  EXPECT_LE(gram_max_deviation(a.matrix(), false), 1e-12);
}

TEST(PartialDct, RowsOrthonormalForAnyShape) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const std::size_t n = 8 + 7 * seed;
    const std::size_t m = 1 + (seed * 13) % n;
    const auto a = palm::make_partial_dct(m, n, seed);
    EXPECT_EQ(a.rows(), m);
    EXPECT_EQ(a.cols(), n);
    EXPECT_LE(gram_max_deviation(a.matrix(), true), 1e-10);
  }
}

TEST(PartialDct, RowsAreDistinctDctRows) {
  const auto a = palm::make_partial_dct(10, 40, 9);
  const Mat d = palm::dct_matrix(40);
  std::vector<std::size_t> hit;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < d.rows(); ++k)
      if (std::equal(a.matrix().row(i).begin(), a.matrix().row(i).end(), d.row(k).begin())) hit.push_back(k);
  ASSERT_EQ(hit.size(), 10u);
  EXPECT_TRUE(std::adjacent_find(hit.begin(), hit.end()) == hit.end());
}

TEST(PartialDct, DeterministicAndSeedSensitive) {
  EXPECT_EQ(palm::make_partial_dct(16, 64, 3), palm::make_partial_dct(16, 64, 3));
  EXPECT_FALSE(palm::make_partial_dct(16, 64, 3) == palm::make_partial_dct(16, 64, 4));
  EXPECT_THROW(palm::make_partial_dct(5, 4, 0), std::invalid_argument);
  EXPECT_THROW(palm::make_partial_dct(0, 4, 0), std::invalid_argument);
}

TEST(GaussianOperator, RowsOrthonormal) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto a = palm::make_gaussian_orthonormal(3 + seed, 40, seed);
    EXPECT_LE(gram_max_deviation(a.matrix(), true), 1e-10);
  }
  const auto sq = palm::make_gaussian_orthonormal(64, 64, 1);
  EXPECT_LE(gram_max_deviation(sq.matrix(), true), 1e-10);
}

TEST(GaussianOperator, SingleRowIsUnitNorm) {
  const auto a = palm::make_gaussian_orthonormal(1, 17, 8);
  EXPECT_NEAR(palm::norm2(a.matrix().row(0)), 1.0, 1e-15);
}

TEST(GaussianOperator, Deterministic) {
  EXPECT_EQ(palm::make_gaussian_orthonormal(8, 20, 77), palm::make_gaussian_orthonormal(8, 20, 77));
  EXPECT_THROW(palm::make_gaussian_orthonormal(21, 20, 0), std::invalid_argument);
}

TEST(Coherence, IdenticalBasesGiveSqrtN) {
  const palm::BasisPair pair(Mat::identity(9), Mat::identity(9));
  EXPECT_DOUBLE_EQ(palm::mutual_coherence(pair), 3.0);
}

TEST(Coherence, SpikeHadamardIsOne) {
  // Every inner product <e_i, h_j> is +-1/2, so mu = sqrt(4) * 1/2.
  const palm::BasisPair pair(Mat::identity(4), palm::hadamard_matrix(4));
  EXPECT_NEAR(palm::mutual_coherence(pair), 1.0, 1e-15);
}

TEST(Coherence, RandomPairsWithinBounds) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const std::size_t n = 4 + seed % 12;
    const palm::BasisPair pair(palm::named_basis("random", n, seed), palm::named_basis("random", n, seed + 1000));
    const double mu = palm::mutual_coherence(pair);
    EXPECT_GE(mu, 1.0 - 1e-12);
    EXPECT_LE(mu, std::sqrt(static_cast<double>(n)) + 1e-12);
  }
}

TEST(Coherence, SymmetricAndPermutationInvariant) {
  const Mat phi = palm::named_basis("random", 12, 1);
  const Mat psi = palm::named_basis("dct", 12);
  const double mu = palm::mutual_coherence(palm::BasisPair(phi, psi));
  EXPECT_NEAR(mu, palm::mutual_coherence(palm::BasisPair(psi, phi)), 1e-15);
  EXPECT_NEAR(mu, palm::mutual_coherence(palm::BasisPair(permute_columns(phi, 4), permute_columns(psi, 5))), 1e-15);
}

TEST(Coherence, RejectsBadPairs) {
  EXPECT_THROW(palm::BasisPair(Mat::identity(4), Mat::identity(5)), palm::DimensionError);
  Mat skew = Mat::identity(3);
  skew(0, 1) = 0.5;
  EXPECT_THROW(palm::BasisPair(Mat::identity(3), skew), std::invalid_argument);
  EXPECT_THROW(palm::named_basis("wavelet", 4), std::invalid_argument);
  EXPECT_THROW(palm::hadamard_matrix(6), std::invalid_argument);
}

TEST(SpectralNorm, OrthonormalRowsGiveOne) {
  const auto a = palm::make_partial_dct(20, 50, 2);
  EXPECT_NEAR(palm::spectral_norm_estimate(a, 50), 1.0, 1e-6);
  const auto g = palm::make_gaussian_orthonormal(20, 50, 2);
  EXPECT_NEAR(palm::spectral_norm_estimate(g, 50), 1.0, 1e-6);
}

TEST(SpectralNorm, ScalarCase) {
  const SensingOperator a(Mat(1, 1, {3.0}));
  EXPECT_NEAR(palm::spectral_norm_estimate(a, 1), 3.0, 1e-15);
}

TEST(SpectralNorm, MatchesJacobiSvd) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto dense = oracle::random_dense(4, 6, seed);
    const double sigma = oracle::jacobi_singular_values(dense).front();
    const double est = palm::spectral_norm_estimate(SensingOperator(to_mat(dense)), 500);
    EXPECT_NEAR(est, sigma, 1e-8 * sigma) << "seed " << seed;
    EXPECT_LE(est, sigma * (1 + 1e-14));
  }
}

TEST(SpectralNorm, MonotoneInIterations) {
  const SensingOperator a(to_mat(oracle::random_dense(7, 9, 3)));
  double prev = 0;
  for (std::size_t it = 1; it <= 40; ++it) {
    const double est = palm::spectral_norm_estimate(a, it);
    EXPECT_GE(est, prev);
    prev = est;
  }
  EXPECT_THROW(palm::spectral_norm_estimate(a, 0), std::invalid_argument);
}

TEST(OperatorContainer, LayoutAndRoundTrip) {
  const auto a = palm::make_partial_dct(3, 5, 1);
  const auto bytes = palm::serialize_operator(a);
  ASSERT_EQ(bytes.size(), 32u + 8u * 15u);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 8), "PALMOP01");
  EXPECT_EQ(bytes[8], 3);
  EXPECT_EQ(bytes[16], 5);
  EXPECT_EQ(bytes[24], 1);
  // First element, little-endian binary64.
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(bytes[32 + i]) << (8 * i);
  EXPECT_EQ(std::bit_cast<double>(bits), a.matrix()(0, 0));
  EXPECT_EQ(palm::deserialize_operator(bytes), a);

  const SensingOperator general(to_mat(oracle::random_dense(2, 4, 1)));
  EXPECT_EQ(palm::deserialize_operator(palm::serialize_operator(general)), general);
}

TEST(OperatorContainer, RejectsCorruptInput) {
  auto bytes = palm::serialize_operator(palm::make_partial_dct(2, 4, 1));
  auto truncated = bytes;
  truncated.pop_back();
  EXPECT_THROW(palm::deserialize_operator(truncated), palm::ParseError);
  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  EXPECT_THROW(palm::deserialize_operator(bad_magic), palm::ParseError);
  EXPECT_THROW(palm::deserialize_operator(std::span<const std::uint8_t>(bytes.data(), 10)), palm::ParseError);
}
