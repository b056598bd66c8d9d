// SPDX-License-Identifier: Apache-2.0

#include "uatlab/diamond.hpp"

#include "uatlab/errors.hpp"

namespace uatlab {

Mat diamond(const Mat& w, const Mat& x) {
  // x <> w is evaluated as w <> x.
  if (x.cols() != 1 && w.cols() == 1) return diamond(x, w);
  if (x.cols() != 1) {
    throw ShapeError("diamond: one operand must be a column vector, got " +
                     shape_str(w.rows(), w.cols()) + " and " + shape_str(x.rows(), x.cols()));
  }
  if (w.rows() != x.rows()) {
    throw ShapeError("diamond: row counts differ, " + shape_str(w.rows(), w.cols()) + " <> " +
                     shape_str(x.rows(), x.cols()));
  }
  return matmul(transpose(w), x);
}

Mat diamond_general(const Mat& w1, const Mat& w2) {
  if (w1.cols() == 1 || w2.cols() == 1) return diamond(w1, w2);
  if (w1.rows() != w1.cols() || w2.rows() != w2.cols() || w1.rows() != w2.rows()) {
    throw ShapeError("diamond_general: operands must be square and of equal size, got " +
                     shape_str(w1.rows(), w1.cols()) + " and " + shape_str(w2.rows(), w2.cols()));
  }
  return matmul(transpose(w1), w2);
}

}  // namespace uatlab
