// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include "uatlab/diamond.hpp"
#include "uatlab/errors.hpp"
#include "uatlab/rng.hpp"

using namespace uatlab;

TEST_CASE("diamond examples") {
  const Mat x = Mat::from_rows({{5}, {6}});
  CHECK(diamond(Mat::identity(2), x) == x);
  CHECK(diamond(Mat::from_rows({{1, 2}, {3, 4}}), x) == Mat::from_rows({{23}, {34}}));
}

TEST_CASE("diamond is symmetric in its operands") {
  Rng rng(11);
  for (int t = 0; t < 50; ++t) {
    const std::size_t n = 1 + rng.index(8), m = 1 + rng.index(8);
    const Mat w = rng.normal_mat(n, m);
    const Mat x = rng.normal_mat(n, 1);
    CHECK(diamond(w, x) == diamond(x, w));
  }
}

TEST_CASE("diamond equals transpose product exactly") {
  Rng rng(12);
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 1 + rng.index(8), m = 1 + rng.index(8);
    const Mat w = rng.normal_mat(n, m);
    const Mat x = rng.normal_mat(n, 1);
    CHECK(diamond(w, x) == matmul(transpose(w), x));
  }
}

TEST_CASE("diamond shape errors") {
  CHECK_THROWS_AS(diamond(Mat(3, 2), Mat(2, 1)), ShapeError);
  CHECK_THROWS_AS(diamond(Mat(3, 2), Mat(3, 2)), ShapeError);
  CHECK_THROWS_AS(diamond_general(Mat(3, 2), Mat(3, 2)), ShapeError);
  CHECK_THROWS_AS(diamond_general(Mat(3, 3), Mat(2, 2)), ShapeError);
}

TEST_CASE("diamond_general examples") {
  Rng rng(13);
  const Mat w = rng.normal_mat(4, 4);
  CHECK(diamond_general(Mat::identity(4), w) == w);
  const Mat x = rng.normal_mat(4, 1);
  CHECK(diamond_general(w, x) == diamond(w, x));
}

TEST_CASE("bracket identities on square matrices") {
  Rng rng(14);
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 1 + rng.index(8);
    const Mat w1 = rng.normal_mat(n, n);
    const Mat w2 = rng.normal_mat(n, n);
    const Mat x = rng.normal_mat(n, 1);
    // Chains evaluate left to right.
    const Mat lhs12 = diamond(w1, diamond(x, w2));
    const Mat rhs12 = diamond(diamond_general(transpose(w2), w1), x);
    CHECK(sup_norm_diff(lhs12, rhs12) <= 1e-12 * std::max(1.0, max_abs(lhs12)));
    const Mat lhs13 = diamond(diamond(w1, x), w2);
    const Mat rhs13 = diamond(diamond_general(transpose(w1), w2), x);
    CHECK(sup_norm_diff(lhs13, rhs13) <= 1e-12 * std::max(1.0, max_abs(lhs13)));
  }
}

TEST_CASE("diamond is not associative") {
  Rng rng(15);
  bool found = false;
  for (int t = 0; t < 1000 && !found; ++t) {
    const Mat a = rng.normal_mat(2, 2), b = rng.normal_mat(2, 2), c = rng.normal_mat(2, 2);
    const Mat left = diamond_general(diamond_general(a, b), c);
    const Mat right = diamond_general(a, diamond_general(b, c));
    found = sup_norm_diff(left, right) > 1e-6;
  }
  CHECK(found);
}
