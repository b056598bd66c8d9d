// SPDX-License-Identifier: Apache-2.0

#include "uatlab/lora.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "uatlab/errors.hpp"
#include "uatlab/kernels.hpp"
#include "uatlab/linsolve.hpp"
#include "uatlab/lowering.hpp"

namespace uatlab {
namespace {

double squared_norm(const Mat& m) { return kernels::dot(m.data(), m.data()); }

double objective(const Mat& w_base, const LowRankUpdate& u, const Mat& x, const Mat& y) {
  return squared_norm(sub(matmul(merge(w_base, u), x), y));
}

}  // namespace

void LowRankUpdate::validate() const {
  const std::size_t n = b.rows();
  const std::size_t r = b.cols();
  if (a.rows() != r || a.cols() != n) {
    throw ShapeError("lora update: B is " + shape_str(b.rows(), b.cols()) + " but A is " +
                     shape_str(a.rows(), a.cols()) + ", expected " + shape_str(r, n));
  }
  if (r > n) {
    throw ShapeError("lora update: rank " + std::to_string(r) + " exceeds N = " +
                     std::to_string(n));
  }
  if (!std::isfinite(scale)) throw MathError("lora update: scale is not finite");
}

LowRankUpdate LowRankUpdate::zero_init(std::size_t n, std::size_t rank, Rng& rng, double stddev) {
  LowRankUpdate u{Mat(n, rank), rng.normal_mat(rank, n, stddev), 1.0};
  u.validate();
  return u;
}

Mat merge(const Mat& w, const LowRankUpdate& u) {
  u.validate();
  if (w.rows() != w.cols() || w.rows() != u.b.rows()) {
    throw ShapeError("merge: weight " + shape_str(w.rows(), w.cols()) +
                     " does not match update of size " + std::to_string(u.b.rows()));
  }
  return add(w, scale(matmul(u.b, u.a), u.scale));
}

double lowered_amendment(const Mat& w, const LowRankUpdate& u, std::size_t n_cols) {
  const Mat merged_then_lowered = lower_linear(merge(w, u), n_cols).matrix();
  const Mat lowered_then_added =
      add(lower_linear(w, n_cols).matrix(),
          scale(lower_linear(matmul(u.b, u.a), n_cols).matrix(), u.scale));
  return sup_norm_diff(merged_then_lowered, lowered_then_added);
}

AlsResult fit_als(const Mat& w_base, const Mat& x, const Mat& y, std::size_t rank,
                  std::size_t iters, Rng& rng, double rel_tol) {
  const std::size_t n = w_base.rows();
  if (w_base.cols() != n) {
    throw ShapeError("fit_als: base weight must be square, got " +
                     shape_str(w_base.rows(), w_base.cols()));
  }
  if (x.rows() != n || y.rows() != n || x.cols() != y.cols()) {
    throw ShapeError("fit_als: samples X " + shape_str(x.rows(), x.cols()) + " and Y " +
                     shape_str(y.rows(), y.cols()) + " do not match N = " + std::to_string(n));
  }
  if (rank == 0 || rank > n) {
    throw ShapeError("fit_als: rank must lie in [1, " + std::to_string(n) + "]");
  }
  if (numerical_rank(x) < n) {
    throw MathError("fit_als: sample inputs span only " + std::to_string(numerical_rank(x)) +
                    " of " + std::to_string(n) + " dimensions; the update is not identifiable");
  }

  const Mat residual = sub(y, matmul(w_base, x));  // target for B A X
  const Mat xt = transpose(x);
  const Mat gram_x = matmul(x, xt);
  const double scale_ref = std::max(squared_norm(y), 1e-300);

  AlsResult res{LowRankUpdate::zero_init(n, rank, rng), {}, 0};
  LowRankUpdate& u = res.update;
  res.objective.push_back(objective(w_base, u, x, y));

  for (std::size_t it = 0; it < iters; ++it) {
    const double before = res.objective.back();

    // B-step: min_B ||B Z - R||, Z = A X.
    const Mat z = matmul(u.a, x);
    u.b = transpose(least_squares(transpose(z), transpose(residual)));
    res.objective.push_back(objective(w_base, u, x, y));

    // A-step: normal equations (B^T B) A (X X^T) = B^T R X^T.
    const Mat btb = matmul(transpose(u.b), u.b);
    const Mat rhs = matmul(matmul(transpose(u.b), residual), xt);
    try {
      const Mat left = solve_spd(btb, rhs);                        // (B^T B)^-1 B^T R X^T
      u.a = transpose(solve_spd(gram_x, transpose(left)));         // ... (X X^T)^-1
    } catch (const MathError&) {
      // B lost rank (e.g. the residual is already zero); keep A.
    }
    res.objective.push_back(objective(w_base, u, x, y));
    res.iterations = it + 1;

    if (before - res.objective.back() <= rel_tol * scale_ref) break;
  }
  return res;
}

}  // namespace uatlab
