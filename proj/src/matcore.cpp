// SPDX-License-Identifier: Apache-2.0

#include "uatlab/matcore.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>

#include "uatlab/errors.hpp"
#include "uatlab/kernels.hpp"

namespace uatlab {

std::string shape_str(std::size_t rows, std::size_t cols) {
  return "(" + std::to_string(rows) + "x" + std::to_string(cols) + ")";
}

namespace {

void require_positive(std::size_t rows, std::size_t cols) {
  if (rows == 0 || cols == 0) {
    throw ShapeError("matrix extents must be positive, got " + shape_str(rows, cols));
  }
}

// Results of arithmetic on finite inputs can still overflow.
const Mat& checked(const Mat& m, const char* op) {
  if (!all_finite(m.data())) {
    throw MathError(std::string(op) + ": result contains non-finite entries");
  }
  return m;
}

}  // namespace

Mat::Mat(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {
  require_positive(rows, cols);
  if (!std::isfinite(fill)) throw MathError("Mat: fill value is not finite");
}

Mat::Mat(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  require_positive(rows, cols);
  if (data_.size() != rows * cols) {
    throw ShapeError("Mat: data length " + std::to_string(data_.size()) + " does not match " +
                     shape_str(rows, cols));
  }
  if (!all_finite(data_)) throw MathError("Mat: data contains non-finite entries");
}

Mat Mat::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  std::vector<double> data;
  data.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw ShapeError("Mat::from_rows: ragged rows");
    data.insert(data.end(), row.begin(), row.end());
  }
  return Mat(r, c, std::move(data));
}

Mat Mat::identity(std::size_t n) {
  Mat m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Mat Mat::column(std::span<const double> values) {
  return Mat(values.size(), 1, std::vector<double>(values.begin(), values.end()));
}

std::ostream& operator<<(std::ostream& os, const Mat& m) {
  os << "Mat" << shape_str(m.rows(), m.cols()) << "[";
  for (std::size_t r = 0; r < m.rows(); ++r) {
    os << (r == 0 ? "[" : ", [");
    for (std::size_t c = 0; c < m.cols(); ++c) os << (c == 0 ? "" : ", ") << m(r, c);
    os << "]";
  }
  return os << "]";
}

Mat matmul(const Mat& a, const Mat& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: cannot multiply " + shape_str(a.rows(), a.cols()) + " by " +
                     shape_str(b.rows(), b.cols()));
  }
  Mat c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto out = c.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik != 0.0) kernels::axpy(aik, b.row(k), out);
    }
  }
  return checked(c, "matmul");
}

std::vector<double> matvec(const Mat& a, std::span<const double> x) {
  if (a.cols() != x.size()) {
    throw ShapeError("matvec: cannot multiply " + shape_str(a.rows(), a.cols()) +
                     " by vector of length " + std::to_string(x.size()));
  }
  std::vector<double> y(a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) y[i] = kernels::dot(a.row(i), x);
  if (!all_finite(y)) throw MathError("matvec: result contains non-finite entries");
  return y;
}

Mat transpose(const Mat& a) {
  Mat t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  return t;
}

void require_same_shape(const Mat& a, const Mat& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError(std::string(what) + ": shape mismatch " + shape_str(a.rows(), a.cols()) +
                     " vs " + shape_str(b.rows(), b.cols()));
  }
}

Mat add(const Mat& a, const Mat& b) {
  require_same_shape(a, b, "add");
  Mat c = a;
  auto out = c.data();
  auto in = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += in[i];
  return checked(c, "add");
}

Mat sub(const Mat& a, const Mat& b) {
  require_same_shape(a, b, "sub");
  Mat c = a;
  auto out = c.data();
  auto in = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= in[i];
  return checked(c, "sub");
}

Mat scale(const Mat& a, double s) {
  Mat c = a;
  for (double& v : c.data()) v *= s;
  return checked(c, "scale");
}

Mat kron(const Mat& a, const Mat& b) {
  Mat k(a.rows() * b.rows(), a.cols() * b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) {
      const double aij = a(i, j);
      if (aij == 0.0) continue;
      for (std::size_t p = 0; p < b.rows(); ++p)
        for (std::size_t q = 0; q < b.cols(); ++q)
          k(i * b.rows() + p, j * b.cols() + q) = aij * b(p, q);
    }
  return checked(k, "kron");
}

Mat softmax_rows(const Mat& a) {
  Mat s(a.rows(), a.cols());
  for (std::size_t r = 0; r < a.rows(); ++r) {
    const auto in = a.row(r);
    auto out = s.row(r);
    const double m = *std::max_element(in.begin(), in.end());
    double total = 0.0;
    for (std::size_t c = 0; c < in.size(); ++c) {
      out[c] = std::exp(in[c] - m);
      total += out[c];
    }
    for (double& v : out) v /= total;
  }
  return s;
}

double sigmoid(double t) {
  // Branches keep exp() from overflowing for large |t|.
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

double sup_norm_diff(const Mat& a, const Mat& b) {
  require_same_shape(a, b, "sup_norm_diff");
  return kernels::max_abs_diff(a.data(), b.data());
}

double relative_sup_diff(const Mat& a, const Mat& ref) {
  const double diff = sup_norm_diff(a, ref);
  if (diff == 0.0) return 0.0;
  const double denom = max_abs(ref);
  return denom == 0.0 ? diff : diff / denom;
}

double max_abs(const Mat& a) { return kernels::max_abs(a.data()); }

double frobenius_norm(const Mat& a) { return std::sqrt(kernels::dot(a.data(), a.data())); }

double max_row_abs_sum(const Mat& a) {
  double best = 0.0;
  for (std::size_t r = 0; r < a.rows(); ++r) {
    double s = 0.0;
    for (double v : a.row(r)) s += std::fabs(v);
    best = std::max(best, s);
  }
  return best;
}

bool all_finite(std::span<const double> values) {
  return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

}  // namespace uatlab
