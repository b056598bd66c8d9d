// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <string_view>

// Inner-loop kernels shared by every dense operation. Each kernel has a scalar
// reference and vector variants; the best variant the CPU supports is chosen
// on first use. The environment variable UATLAB_KERNELS=scalar|avx2|neon
// overrides the choice.

namespace uatlab::kernels {

enum class Backend { scalar, avx2, neon };

std::string_view backend_name(Backend b);
Backend parse_backend(std::string_view name);

bool backend_available(Backend b);
Backend active_backend();

/// Throws std::invalid_argument when the backend is not available on this CPU.
void set_backend(Backend b);

/// Switches backend for the lifetime of the guard. Not thread-safe; tests only.
class ScopedBackend {
 public:
  explicit ScopedBackend(Backend b);
  ~ScopedBackend();
  ScopedBackend(const ScopedBackend&) = delete;
  ScopedBackend& operator=(const ScopedBackend&) = delete;

 private:
  Backend previous_;
};

double dot(std::span<const double> a, std::span<const double> b);

// y += alpha * x
void axpy(double alpha, std::span<const double> x, std::span<double> y);

double max_abs_diff(std::span<const double> a, std::span<const double> b);

// max |a_i|
double max_abs(std::span<const double> a);

}  // namespace uatlab::kernels
