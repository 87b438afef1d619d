#pragma once

// Dense real vectors, row-major matrices and the sensing-operator wrapper.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "palm/error.hpp"

namespace palm {

using Vec = std::vector<double>;

inline bool all_finite(std::span<const double> v) noexcept {
  return std::all_of(v.begin(), v.end(), [](double e) { return std::isfinite(e); });
}

inline void require_same_length(std::span<const double> a, std::span<const double> b, const char* what) {
  if (a.size() != b.size()) throw DimensionError(what, a.size(), b.size());
}

class Mat {
public:
  Mat() = default;
  Mat(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}
  Mat(std::size_t rows, std::size_t cols, std::vector<double> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) throw DimensionError("matrix element count", rows_ * cols_, data_.size());
    if (!all_finite(data_)) throw std::invalid_argument("matrix contains non-finite elements");
  }

  static Mat identity(std::size_t n) {
    Mat m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  double& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * cols_ + j]; }

  std::span<double> row(std::size_t i) noexcept { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const noexcept { return {data_.data() + i * cols_, cols_}; }

  std::span<const double> data() const noexcept { return data_; }

  Mat transpose() const {
    Mat t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
  }

  friend bool operator==(const Mat&, const Mat&) = default;

private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

inline double dot(std::span<const double> a, std::span<const double> b) {
  require_same_length(a, b, "dot: length mismatch");
  // Four independent partial sums keep the loop from serializing on one
  // accumulator.
  double s0 = 0, s1 = 0, s2 = 0, s3 = 0;
  const std::size_t n = a.size();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 += a[i] * b[i];
    s1 += a[i + 1] * b[i + 1];
    s2 += a[i + 2] * b[i + 2];
    s3 += a[i + 3] * b[i + 3];
  }
  for (; i < n; ++i) s0 += a[i] * b[i];
  return (s0 + s1) + (s2 + s3);
}

inline double norm1(std::span<const double> v) noexcept {
  double s = 0;
  for (double e : v) s += std::abs(e);
  return s;
}

inline double norm2(std::span<const double> v) noexcept {
  double s = 0;
  for (double e : v) s += e * e;
  return std::sqrt(s);
}

inline double norm_inf(std::span<const double> v) noexcept {
  double s = 0;
  for (double e : v) s = std::max(s, std::abs(e));
  return s;
}

// out = a - b
inline Vec sub(std::span<const double> a, std::span<const double> b) {
  require_same_length(a, b, "sub: length mismatch");
  Vec out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return out;
}

inline Vec add(std::span<const double> a, std::span<const double> b) {
  require_same_length(a, b, "add: length mismatch");
  Vec out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return out;
}

inline Vec scaled(std::span<const double> v, double s) {
  Vec out(v.begin(), v.end());
  for (double& e : out) e *= s;
  return out;
}

// The measurement matrix A (m x N, m <= N).
class SensingOperator {
public:
  // Orthonormality of the rows is verified when claimed.
  explicit SensingOperator(Mat matrix, bool rows_orthonormal = false)
      : matrix_(std::move(matrix)), rows_orthonormal_(rows_orthonormal) {
    if (matrix_.rows() == 0 || matrix_.cols() == 0)
      throw std::invalid_argument("sensing operator must be non-empty");
    if (matrix_.rows() > matrix_.cols())
      throw std::invalid_argument("sensing operator must have m <= N (got m=" + std::to_string(matrix_.rows()) +
                                  ", N=" + std::to_string(matrix_.cols()) + ")");
    if (rows_orthonormal_ && gram_deviation() > 1e-10)
      throw std::invalid_argument("sensing operator rows are not orthonormal");
  }

  std::size_t rows() const noexcept { return matrix_.rows(); }
  std::size_t cols() const noexcept { return matrix_.cols(); }
  bool rows_orthonormal() const noexcept { return rows_orthonormal_; }
  const Mat& matrix() const noexcept { return matrix_; }

  // max |(A A^T - I)_ij|
  double gram_deviation() const {
    double worst = 0;
    for (std::size_t i = 0; i < rows(); ++i)
      for (std::size_t k = i; k < rows(); ++k) {
        const double g = dot(matrix_.row(i), matrix_.row(k)) - (i == k ? 1.0 : 0.0);
        worst = std::max(worst, std::abs(g));
      }
    return worst;
  }

  friend bool operator==(const SensingOperator&, const SensingOperator&) = default;

private:
  Mat matrix_;
  bool rows_orthonormal_;
};

inline void matvec_into(const SensingOperator& a, std::span<const double> v, std::span<double> out) {
  if (v.size() != a.cols()) throw DimensionError("matvec: input length must equal operator columns", a.cols(), v.size());
  if (out.size() != a.rows()) throw DimensionError("matvec: output length must equal operator rows", a.rows(), out.size());
  for (std::size_t i = 0; i < a.rows(); ++i) out[i] = dot(a.matrix().row(i), v);
}

inline Vec matvec(const SensingOperator& a, std::span<const double> v) {
  Vec out(a.rows());
  matvec_into(a, v, out);
  return out;
}

inline void adjoint_matvec_into(const SensingOperator& a, std::span<const double> w, std::span<double> out) {
  if (w.size() != a.rows()) throw DimensionError("adjoint_matvec: input length must equal operator rows", a.rows(), w.size());
  if (out.size() != a.cols()) throw DimensionError("adjoint_matvec: output length must equal operator columns", a.cols(), out.size());
  std::fill(out.begin(), out.end(), 0.0);
  const std::size_t n = a.cols();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double wi = w[i];
    const double* row = a.matrix().row(i).data();
    double* o = out.data();
    for (std::size_t j = 0; j < n; ++j) o[j] += wi * row[j];
  }
}

inline Vec adjoint_matvec(const SensingOperator& a, std::span<const double> w) {
  Vec out(a.cols());
  adjoint_matvec_into(a, w, out);
  return out;
}

// Dense product, used to form A = Phi * Psi.
inline Mat multiply(const Mat& a, const Mat& b) {
  if (a.cols() != b.rows()) throw DimensionError("multiply: inner dimensions", a.cols(), b.rows());
  Mat c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto out = c.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      const auto brow = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) out[j] += aik * brow[j];
    }
  }
  return c;
}

}  // namespace palm
