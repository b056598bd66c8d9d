// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "uatlab/matcore.hpp"
#include "uatlab/mha_params.hpp"

// Lowering of network sublayers to explicit matrix-vector form.
//
// An N x M activation is flattened row-major into a column vector x' of length
// N*M (entry (i, k) lands at i*M + k). A sublayer y = T(x) is then represented
// by one NM x NM matrix A with y' = A x'. Matrices are stored in this standard
// orientation; the diamond orientation W' (with W' <> x' = y') is transpose(A).

namespace uatlab {

/// Upper bound on N*M for materialized operators (4096^2 doubles = 128 MiB).
inline constexpr std::size_t kMaxLoweredSize = 4096;

struct FlatVec {
  std::size_t n_rows = 0;
  std::size_t n_cols = 0;
  std::vector<double> data;

  std::size_t index(std::size_t row, std::size_t col) const { return row * n_cols + col; }
  std::size_t size() const { return data.size(); }
};

FlatVec flatten(const Mat& x);
Mat unflatten(const FlatVec& v);

enum class LoweredKind { linear, mha, composed };

std::string_view kind_name(LoweredKind k);
LoweredKind parse_kind(std::string_view s);

class LoweredOp {
 public:
  /// `matrix` must be (n_rows*n_cols) square.
  LoweredOp(Mat matrix, std::size_t n_rows, std::size_t n_cols, LoweredKind kind);

  std::size_t size() const { return matrix_.rows(); }
  std::size_t n_rows() const { return n_rows_; }
  std::size_t n_cols() const { return n_cols_; }
  LoweredKind kind() const { return kind_; }
  const Mat& matrix() const { return matrix_; }

  /// Count of entries with nonzero magnitude.
  std::size_t nnz() const { return nnz_; }
  double density() const;

  FlatVec apply(const FlatVec& x) const;

  /// The transpose, i.e. the matrix W' for which W' <> x' reproduces apply().
  Mat diamond_orientation() const { return transpose(matrix_); }

 private:
  Mat matrix_;
  std::size_t n_rows_;
  std::size_t n_cols_;
  LoweredKind kind_;
  std::size_t nnz_;
};

LoweredOp identity_op(std::size_t n_rows, std::size_t n_cols);

/// Lowers y = W x for W (N x N) acting on x (N x M): A = W kron I_M.
LoweredOp lower_linear(const Mat& w, std::size_t n_cols);

/// Full-flattening indices of head `head` (0-based) in per-head row-major
/// order: columns head*d .. head*d + d - 1 of every row, d = M / n_heads.
std::vector<std::size_t> head_slice(std::size_t head, std::size_t n_rows, std::size_t n_cols,
                                    std::size_t n_heads);

/// 0/1 selection matrix S with S x' == flatten(x_head); shape (N*d) x (N*M).
Mat head_selection(std::size_t head, std::size_t n_rows, std::size_t n_cols,
                   std::size_t n_heads);

/// softmax((x_i wq)(x_i wk)^T / logit_scale), row-wise. With `causal`, entries
/// above the diagonal are masked to zero before normalization.
Mat attention_rows(const Mat& x_head, const Mat& wq, const Mat& wk, double logit_scale,
                   bool causal = false);

/// Columns head*d .. head*d + d - 1 of x.
Mat split_head(const Mat& x, std::size_t head, std::size_t n_heads);

/// Input-conditioned effective matrix of a whole MHA layer,
///   M_eff = (I_N kron W_O^T) * sum_i S_i^T (H_i kron W_Vi^T) S_i,
/// with the attention matrices H_i computed from x and then held fixed.
/// M_eff * flatten(x) == flatten(MultiHead(x)) for this x only.
LoweredOp lower_mha(const Mat& x, const MhaParams& p);

/// The value stage sum_i S_i^T (H_i kron W_Vi^T) S_i of lower_mha.
LoweredOp mha_value_stage(const Mat& x, const MhaParams& p);

/// The output projection stage I_N kron W_O^T.
LoweredOp mha_output_stage(std::size_t n_rows, const MhaParams& p);

/// a after b: the matrix product a.matrix * b.matrix.
LoweredOp compose(const LoweredOp& a, const LoweredOp& b);

struct DensityReport {
  double threshold = 0.0;
  std::size_t size = 0;
  std::size_t above = 0;  // entries with |a_ij| > threshold
  double density = 0.0;
  std::vector<std::size_t> row_counts;
  std::vector<std::size_t> col_counts;
  // histogram[k] = number of rows with exactly k entries above threshold
  std::vector<std::size_t> row_histogram;
  std::vector<std::size_t> col_histogram;
};

DensityReport density_report(const LoweredOp& op, double threshold = 0.0);

}  // namespace uatlab
