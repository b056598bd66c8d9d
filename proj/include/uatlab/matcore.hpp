// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <initializer_list>
#include <iosfwd>
#include <span>
#include <vector>

namespace uatlab {

/// Dense row-major matrix of doubles.
///
/// A default-constructed Mat is empty (0 x 0) and exists only so the type can
/// live in containers; every constructor taking a shape requires both extents
/// to be positive and every entry to be finite.
class Mat {
 public:
  Mat() = default;
  Mat(std::size_t rows, std::size_t cols, double fill = 0.0);
  Mat(std::size_t rows, std::size_t cols, std::vector<double> data);

  static Mat from_rows(std::initializer_list<std::initializer_list<double>> rows);
  static Mat identity(std::size_t n);
  static Mat column(std::span<const double> values);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  // Entrywise (bitwise for finite values) equality.
  friend bool operator==(const Mat& a, const Mat& b) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

std::ostream& operator<<(std::ostream& os, const Mat& m);

Mat matmul(const Mat& a, const Mat& b);
std::vector<double> matvec(const Mat& a, std::span<const double> x);
Mat transpose(const Mat& a);
Mat add(const Mat& a, const Mat& b);
Mat sub(const Mat& a, const Mat& b);
Mat scale(const Mat& a, double s);

/// Kronecker product; for row-major flattening vec(A X B) = (A kron B^T) vec(X).
Mat kron(const Mat& a, const Mat& b);

/// Row-wise softmax with per-row max subtraction.
Mat softmax_rows(const Mat& a);

/// Logistic function 1 / (1 + e^-t).
double sigmoid(double t);

/// max_ij |a_ij - b_ij|.
double sup_norm_diff(const Mat& a, const Mat& b);

/// sup|a - ref| / sup|ref|; 0 when both are identically equal, and the
/// absolute difference when ref is all zeros.
double relative_sup_diff(const Mat& a, const Mat& ref);

double max_abs(const Mat& a);
double frobenius_norm(const Mat& a);

/// Induced infinity norm: max_i sum_j |a_ij|.
double max_row_abs_sum(const Mat& a);

bool all_finite(std::span<const double> values);

/// Throws ShapeError unless a and b have the same shape.
void require_same_shape(const Mat& a, const Mat& b, const char* what);

}  // namespace uatlab
