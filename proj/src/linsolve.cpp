// SPDX-License-Identifier: Apache-2.0

#include "uatlab/linsolve.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <string>

#include "uatlab/errors.hpp"

namespace uatlab {
namespace {

using EMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

EMat to_eigen(const Mat& m) {
  return Eigen::Map<const EMat>(m.data().data(), static_cast<Eigen::Index>(m.rows()),
                                static_cast<Eigen::Index>(m.cols()));
}

Mat from_eigen(const EMat& e) {
  std::vector<double> data(e.data(), e.data() + e.size());
  return Mat(static_cast<std::size_t>(e.rows()), static_cast<std::size_t>(e.cols()),
             std::move(data));
}

}  // namespace

Mat least_squares(const Mat& a, const Mat& b, double ridge) {
  if (a.rows() != b.rows()) {
    throw ShapeError("least_squares: system " + shape_str(a.rows(), a.cols()) +
                     " has incompatible right-hand side " + shape_str(b.rows(), b.cols()));
  }
  if (!(ridge >= 0.0) || !std::isfinite(ridge)) {
    throw MathError("least_squares: ridge must be finite and >= 0");
  }
  const auto n = static_cast<Eigen::Index>(a.cols());
  const auto m = static_cast<Eigen::Index>(a.rows());
  EMat lhs;
  EMat rhs;
  if (ridge > 0.0) {
    lhs = EMat::Zero(m + n, n);
    lhs.topRows(m) = to_eigen(a);
    lhs.bottomRows(n).diagonal().setConstant(std::sqrt(ridge));
    rhs = EMat::Zero(m + n, b.cols());
    rhs.topRows(m) = to_eigen(b);
  } else {
    lhs = to_eigen(a);
    rhs = to_eigen(b);
  }
  Eigen::ColPivHouseholderQR<EMat> qr(lhs);
  if (qr.rank() < n) {
    throw MathError("least_squares: normal equations are singular (rank " +
                    std::to_string(qr.rank()) + " < " + std::to_string(n) +
                    "); set ridge > 0");
  }
  return from_eigen(qr.solve(rhs));
}

Mat solve_spd(const Mat& s, const Mat& b) {
  if (s.rows() != s.cols() || s.rows() != b.rows()) {
    throw ShapeError("solve_spd: system " + shape_str(s.rows(), s.cols()) +
                     " with right-hand side " + shape_str(b.rows(), b.cols()));
  }
  Eigen::LLT<EMat> llt(to_eigen(s));
  if (llt.info() != Eigen::Success) {
    throw MathError("solve_spd: matrix is not positive definite");
  }
  return from_eigen(llt.solve(to_eigen(b)));
}

std::size_t numerical_rank(const Mat& a) {
  Eigen::ColPivHouseholderQR<EMat> qr(to_eigen(a));
  return static_cast<std::size_t>(qr.rank());
}

}  // namespace uatlab
