// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <vector>

#include "uatlab/matcore.hpp"
#include "uatlab/rng.hpp"

namespace uatlab {

/// Low-rank delta scale * B * A for an N x N weight; B is N x r, A is r x N.
struct LowRankUpdate {
  Mat b;
  Mat a;
  double scale = 1.0;

  std::size_t rank() const { return a.rows(); }
  void validate() const;

  /// B = 0, A ~ Gaussian(0, stddev): the merged weights equal the base exactly.
  static LowRankUpdate zero_init(std::size_t n, std::size_t rank, Rng& rng, double stddev = 1.0);
};

/// w + scale * (B A).
Mat merge(const Mat& w, const LowRankUpdate& u);

/// Max entry discrepancy between lower_linear(merge(w, u), M) and
/// lower_linear(w, M) + scale * lower_linear(B A, M). Zero up to rounding,
/// since the Kronecker lowering is linear in the weight.
double lowered_amendment(const Mat& w, const LowRankUpdate& u, std::size_t n_cols);

struct AlsResult {
  LowRankUpdate update;
  /// ||(w + BA) X - Y||_F^2 after each half-step (B-step, A-step, ...),
  /// preceded by the initial objective.
  std::vector<double> objective;
  std::size_t iterations = 0;
};

/// Fits w_base + B A to samples Y = W* X by alternating least squares.
/// X and Y are N x S with samples in columns; X must have full row rank.
/// Starts from B = 0 with Gaussian A and stops early once the objective
/// stops decreasing by more than `rel_tol` relative to ||Y||_F^2.
AlsResult fit_als(const Mat& w_base, const Mat& x, const Mat& y, std::size_t rank,
                  std::size_t iters, Rng& rng, double rel_tol = 1e-28);

}  // namespace uatlab
