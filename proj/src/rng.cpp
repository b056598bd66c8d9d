// SPDX-License-Identifier: Apache-2.0

#include "uatlab/rng.hpp"

#include <cmath>
#include <numbers>

#include "uatlab/errors.hpp"

namespace uatlab {

Rng::Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

std::uint64_t Rng::next_u64() { return engine_(); }

double Rng::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  // 1 - u lies in (0, 1], so the log is finite.
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

std::size_t Rng::index(std::size_t n) {
  if (n == 0) throw std::invalid_argument("Rng::index: empty range");
  // Rejection sampling removes modulo bias.
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t v;
  do {
    v = next_u64();
  } while (v >= limit);
  return static_cast<std::size_t>(v % n);
}

Mat Rng::normal_mat(std::size_t rows, std::size_t cols, double stddev) {
  Mat m(rows, cols);
  for (double& v : m.data()) v = stddev * normal();
  return m;
}

Mat Rng::uniform_mat(std::size_t rows, std::size_t cols, double lo, double hi) {
  Mat m(rows, cols);
  for (double& v : m.data()) v = uniform(lo, hi);
  return m;
}

}  // namespace uatlab
