// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

#include "uatlab/matcore.hpp"

namespace uatlab {

/// Seeded generator with a platform-independent draw sequence.
///
/// The engine is mt19937_64 (fixed by the standard), and the uniform and
/// normal transforms are implemented here rather than through <random>
/// distributions, whose algorithms vary between standard libraries.
/// One generator per thread of work.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64();
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi);
  /// Standard normal (Box-Muller).
  double normal();
  /// Uniform integer on [0, n).
  std::size_t index(std::size_t n);

  Mat normal_mat(std::size_t rows, std::size_t cols, double stddev = 1.0);
  Mat uniform_mat(std::size_t rows, std::size_t cols, double lo, double hi);

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace uatlab
