// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>

#include "uatlab/matcore.hpp"

namespace uatlab {

/// Solves min_X ||A X - B||_F^2 + ridge ||X||_F^2 by column-pivoted QR on the
/// augmented system [A; sqrt(ridge) I] X = [B; 0].
///
/// With ridge == 0 a rank-deficient A raises MathError advising ridge > 0.
Mat least_squares(const Mat& a, const Mat& b, double ridge = 0.0);

/// Solves S X = B for symmetric positive definite S. Throws MathError when S
/// is not numerically positive definite.
Mat solve_spd(const Mat& s, const Mat& b);

/// Numerical rank from a column-pivoted QR with the default threshold.
std::size_t numerical_rank(const Mat& a);

}  // namespace uatlab
