// SPDX-License-Identifier: Apache-2.0

#include "uatlab/lowering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "uatlab/errors.hpp"

namespace uatlab {
namespace {

void require_lowerable(std::size_t n_rows, std::size_t n_cols) {
  if (n_rows == 0 || n_cols == 0) throw ShapeError("lowering: empty activation shape");
  if (n_rows * n_cols > kMaxLoweredSize) {
    throw ShapeError("lowering: N*M = " + std::to_string(n_rows * n_cols) +
                     " exceeds the materialization cap of " + std::to_string(kMaxLoweredSize));
  }
}

std::size_t count_nonzero(const Mat& m) {
  return static_cast<std::size_t>(
      std::count_if(m.data().begin(), m.data().end(), [](double v) { return v != 0.0; }));
}

// Attention matrix of every head for input x.
std::vector<Mat> head_attention(const Mat& x, const MhaParams& p) {
  std::vector<Mat> h;
  h.reserve(p.n_heads);
  for (std::size_t i = 0; i < p.n_heads; ++i) {
    h.push_back(attention_rows(split_head(x, i, p.n_heads), p.w_q[i], p.w_k[i], p.logit_scale(),
                               p.options.causal));
  }
  return h;
}

void require_mha_input(const Mat& x, const MhaParams& p) {
  p.validate();
  if (x.cols() != p.d_model) {
    throw ShapeError("lower_mha: input " + shape_str(x.rows(), x.cols()) +
                     " does not match d_model " + std::to_string(p.d_model));
  }
  require_lowerable(x.rows(), x.cols());
}

}  // namespace

FlatVec flatten(const Mat& x) {
  return FlatVec{x.rows(), x.cols(), std::vector<double>(x.data().begin(), x.data().end())};
}

Mat unflatten(const FlatVec& v) {
  if (v.data.size() != v.n_rows * v.n_cols) {
    throw ShapeError("unflatten: length " + std::to_string(v.data.size()) +
                     " does not match " + shape_str(v.n_rows, v.n_cols));
  }
  return Mat(v.n_rows, v.n_cols, v.data);
}

std::string_view kind_name(LoweredKind k) {
  switch (k) {
    case LoweredKind::linear:
      return "linear";
    case LoweredKind::mha:
      return "mha";
    case LoweredKind::composed:
      return "composed";
  }
  return "unknown";
}

LoweredKind parse_kind(std::string_view s) {
  if (s == "linear") return LoweredKind::linear;
  if (s == "mha") return LoweredKind::mha;
  if (s == "composed") return LoweredKind::composed;
  throw SchemaError("unknown lowered operator kind \"" + std::string(s) + "\"");
}

LoweredOp::LoweredOp(Mat matrix, std::size_t n_rows, std::size_t n_cols, LoweredKind kind)
    : matrix_(std::move(matrix)), n_rows_(n_rows), n_cols_(n_cols), kind_(kind) {
  const std::size_t n = n_rows * n_cols;
  if (n == 0 || matrix_.rows() != n || matrix_.cols() != n) {
    throw ShapeError("LoweredOp: matrix " + shape_str(matrix_.rows(), matrix_.cols()) +
                     " does not match activation shape " + shape_str(n_rows, n_cols));
  }
  nnz_ = count_nonzero(matrix_);
}

double LoweredOp::density() const {
  const double n = static_cast<double>(size());
  return static_cast<double>(nnz_) / (n * n);
}

FlatVec LoweredOp::apply(const FlatVec& x) const {
  if (x.size() != size()) {
    throw ShapeError("LoweredOp::apply: operator size " + std::to_string(size()) +
                     " vs input length " + std::to_string(x.size()));
  }
  return FlatVec{n_rows_, n_cols_, matvec(matrix_, x.data)};
}

LoweredOp identity_op(std::size_t n_rows, std::size_t n_cols) {
  require_lowerable(n_rows, n_cols);
  return LoweredOp(Mat::identity(n_rows * n_cols), n_rows, n_cols, LoweredKind::linear);
}

LoweredOp lower_linear(const Mat& w, std::size_t n_cols) {
  if (w.rows() != w.cols()) {
    throw ShapeError("lower_linear: weight must be square, got " + shape_str(w.rows(), w.cols()));
  }
  const std::size_t n = w.rows();
  require_lowerable(n, n_cols);
  // Written directly instead of kron() so that each entry is a copy of w.
  Mat a(n * n_cols, n * n_cols);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t k = 0; k < n_cols; ++k) a(i * n_cols + k, j * n_cols + k) = w(i, j);
  return LoweredOp(std::move(a), n, n_cols, LoweredKind::linear);
}

std::vector<std::size_t> head_slice(std::size_t head, std::size_t n_rows, std::size_t n_cols,
                                    std::size_t n_heads) {
  if (n_heads == 0 || n_cols % n_heads != 0) {
    throw ShapeError("head_slice: M = " + std::to_string(n_cols) +
                     " is not divisible by h = " + std::to_string(n_heads));
  }
  if (head >= n_heads) {
    throw ShapeError("head_slice: head index " + std::to_string(head) + " out of range [0, " +
                     std::to_string(n_heads) + ")");
  }
  const std::size_t d = n_cols / n_heads;
  std::vector<std::size_t> idx;
  idx.reserve(n_rows * d);
  for (std::size_t r = 0; r < n_rows; ++r)
    for (std::size_t c = 0; c < d; ++c) idx.push_back(r * n_cols + head * d + c);
  return idx;
}

Mat head_selection(std::size_t head, std::size_t n_rows, std::size_t n_cols,
                   std::size_t n_heads) {
  const auto idx = head_slice(head, n_rows, n_cols, n_heads);
  Mat s(idx.size(), n_rows * n_cols);
  for (std::size_t r = 0; r < idx.size(); ++r) s(r, idx[r]) = 1.0;
  return s;
}

Mat split_head(const Mat& x, std::size_t head, std::size_t n_heads) {
  if (n_heads == 0 || x.cols() % n_heads != 0 || head >= n_heads) {
    throw ShapeError("split_head: cannot take head " + std::to_string(head) + " of " +
                     std::to_string(n_heads) + " from " + shape_str(x.rows(), x.cols()));
  }
  const std::size_t d = x.cols() / n_heads;
  Mat out(x.rows(), d);
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t c = 0; c < d; ++c) out(r, c) = x(r, head * d + c);
  return out;
}

Mat attention_rows(const Mat& x_head, const Mat& wq, const Mat& wk, double logit_scale,
                   bool causal) {
  const std::size_t d = x_head.cols();
  if (wq.rows() != d || wq.cols() != d || wk.rows() != d || wk.cols() != d) {
    throw ShapeError("attention_rows: head input " + shape_str(x_head.rows(), d) +
                     " with projections " + shape_str(wq.rows(), wq.cols()) + " and " +
                     shape_str(wk.rows(), wk.cols()));
  }
  if (!(logit_scale > 0.0)) throw MathError("attention_rows: logit scale must be positive");
  const Mat q = matmul(x_head, wq);
  const Mat k = matmul(x_head, wk);
  Mat logits = scale(matmul(q, transpose(k)), 1.0 / logit_scale);
  if (!causal) return softmax_rows(logits);

  const std::size_t n = logits.rows();
  Mat h(n, n);
  for (std::size_t r = 0; r < n; ++r) {
    const Mat prefix(1, r + 1, std::vector<double>(logits.row(r).begin(),
                                                   logits.row(r).begin() + r + 1));
    const Mat s = softmax_rows(prefix);
    std::copy(s.data().begin(), s.data().end(), h.row(r).begin());
  }
  return h;
}

LoweredOp mha_value_stage(const Mat& x, const MhaParams& p) {
  require_mha_input(x, p);
  const std::size_t n = x.rows();
  const std::size_t m = p.d_model;
  const std::size_t d = p.d_head();
  const auto h = head_attention(x, p);
  Mat a(n * m, n * m);
  for (std::size_t i = 0; i < p.n_heads; ++i) {
    const Mat& wv = p.w_v[i];
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t s = 0; s < n; ++s) {
        const double hrs = h[i](r, s);
        for (std::size_t b = 0; b < d; ++b)
          for (std::size_t c = 0; c < d; ++c)
            a(r * m + i * d + b, s * m + i * d + c) = hrs * wv(c, b);
      }
  }
  return LoweredOp(std::move(a), n, m, LoweredKind::mha);
}

LoweredOp mha_output_stage(std::size_t n_rows, const MhaParams& p) {
  p.validate();
  require_lowerable(n_rows, p.d_model);
  return LoweredOp(kron(Mat::identity(n_rows), transpose(p.w_o)), n_rows, p.d_model,
                   LoweredKind::mha);
}

LoweredOp lower_mha(const Mat& x, const MhaParams& p) {
  require_mha_input(x, p);
  const std::size_t n = x.rows();
  const std::size_t m = p.d_model;
  const std::size_t d = p.d_head();
  const auto h = head_attention(x, p);

  // Block (r, s) restricted to head i's input columns is H_i[r,s] * (W_Vi W_O_i)^T,
  // where W_O_i holds rows i*d .. i*d+d-1 of W_O.
  Mat a(n * m, n * m);
  for (std::size_t i = 0; i < p.n_heads; ++i) {
    Mat wo_rows(d, m);
    for (std::size_t b = 0; b < d; ++b)
      std::copy(p.w_o.row(i * d + b).begin(), p.w_o.row(i * d + b).end(),
                wo_rows.row(b).begin());
    const Mat vo = matmul(p.w_v[i], wo_rows);  // d x M
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t s = 0; s < n; ++s) {
        const double hrs = h[i](r, s);
        for (std::size_t out = 0; out < m; ++out)
          for (std::size_t c = 0; c < d; ++c)
            a(r * m + out, s * m + i * d + c) = hrs * vo(c, out);
      }
  }
  return LoweredOp(std::move(a), n, m, LoweredKind::mha);
}

LoweredOp compose(const LoweredOp& a, const LoweredOp& b) {
  if (a.n_rows() != b.n_rows() || a.n_cols() != b.n_cols()) {
    throw ShapeError("compose: operator shapes differ, " + shape_str(a.n_rows(), a.n_cols()) +
                     " vs " + shape_str(b.n_rows(), b.n_cols()));
  }
  return LoweredOp(matmul(a.matrix(), b.matrix()), a.n_rows(), a.n_cols(),
                   LoweredKind::composed);
}

DensityReport density_report(const LoweredOp& op, double threshold) {
  if (!(threshold >= 0.0)) throw MathError("density_report: threshold must be >= 0");
  const Mat& a = op.matrix();
  const std::size_t n = op.size();
  DensityReport rep;
  rep.threshold = threshold;
  rep.size = n;
  rep.row_counts.assign(n, 0);
  rep.col_counts.assign(n, 0);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c)
      if (std::fabs(a(r, c)) > threshold) {
        ++rep.row_counts[r];
        ++rep.col_counts[c];
        ++rep.above;
      }
  rep.density = static_cast<double>(rep.above) / (static_cast<double>(n) * static_cast<double>(n));
  rep.row_histogram.assign(n + 1, 0);
  rep.col_histogram.assign(n + 1, 0);
  for (std::size_t k : rep.row_counts) ++rep.row_histogram[k];
  for (std::size_t k : rep.col_counts) ++rep.col_histogram[k];
  return rep;
}

}  // namespace uatlab
