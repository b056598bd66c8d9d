// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "uatlab/matcore.hpp"

namespace uatlab {

/// Diamond product of a matrix and a column vector.
///
/// Entry i of the result is the dot product of column i of `w` with `x`, so
/// w <> x == transpose(w) * x. The product is symmetric in its operands:
/// whichever argument is the single column is treated as the vector.
/// Throws ShapeError when neither operand is a column or the row counts differ.
Mat diamond(const Mat& w, const Mat& x);

/// Diamond product of two square matrices of equal size, read as
/// transpose(w1) * w2. A single-column operand delegates to diamond().
/// Rectangular matrix pairs are rejected.
Mat diamond_general(const Mat& w1, const Mat& w2);

}  // namespace uatlab
