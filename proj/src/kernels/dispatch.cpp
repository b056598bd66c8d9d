// SPDX-License-Identifier: Apache-2.0

#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "kernels/kernel_table.hpp"
#include "uatlab/errors.hpp"
#include "uatlab/kernels.hpp"

namespace uatlab::kernels {
namespace {

const detail::KernelTable* table_for(Backend b) {
  switch (b) {
    case Backend::scalar:
      return &detail::scalar_table();
    case Backend::avx2:
      return detail::avx2_table();
    case Backend::neon:
      return detail::neon_table();
  }
  return nullptr;
}

bool cpu_supports(Backend b) {
  switch (b) {
    case Backend::scalar:
      return true;
    case Backend::avx2:
#if defined(__x86_64__) || defined(_M_X64)
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
    case Backend::neon:
#if defined(__aarch64__) || defined(_M_ARM64)
      return true;
#else
      return false;
#endif
  }
  return false;
}

Backend detect() {
  if (const char* env = std::getenv("UATLAB_KERNELS"); env != nullptr && *env != '\0') {
    try {
      const Backend requested = parse_backend(env);
      if (backend_available(requested)) return requested;
    } catch (const std::invalid_argument&) {
    }
  }
  if (backend_available(Backend::avx2)) return Backend::avx2;
  if (backend_available(Backend::neon)) return Backend::neon;
  return Backend::scalar;
}

struct State {
  std::atomic<Backend> backend{detect()};
  std::atomic<const detail::KernelTable*> table{table_for(backend.load())};
};

State& state() {
  static State s;
  return s;
}

const detail::KernelTable& active() { return *state().table.load(std::memory_order_relaxed); }

void check_same_length(std::size_t a, std::size_t b) {
  if (a != b) {
    throw ShapeError("kernel operands differ in length: " + std::to_string(a) + " vs " +
                     std::to_string(b));
  }
}

}  // namespace

std::string_view backend_name(Backend b) {
  switch (b) {
    case Backend::scalar:
      return "scalar";
    case Backend::avx2:
      return "avx2";
    case Backend::neon:
      return "neon";
  }
  return "unknown";
}

Backend parse_backend(std::string_view name) {
  if (name == "scalar") return Backend::scalar;
  if (name == "avx2") return Backend::avx2;
  if (name == "neon") return Backend::neon;
  throw std::invalid_argument("unknown kernel backend '" + std::string(name) + "'");
}

bool backend_available(Backend b) { return table_for(b) != nullptr && cpu_supports(b); }

Backend active_backend() { return state().backend.load(); }

void set_backend(Backend b) {
  if (!backend_available(b)) {
    throw std::invalid_argument("kernel backend '" + std::string(backend_name(b)) +
                                "' is not available on this CPU");
  }
  state().backend.store(b);
  state().table.store(table_for(b));
}

ScopedBackend::ScopedBackend(Backend b) : previous_(active_backend()) { set_backend(b); }

ScopedBackend::~ScopedBackend() { set_backend(previous_); }

double dot(std::span<const double> a, std::span<const double> b) {
  check_same_length(a.size(), b.size());
  return active().dot(a.data(), b.data(), a.size());
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  check_same_length(x.size(), y.size());
  active().axpy(alpha, x.data(), y.data(), x.size());
}

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  check_same_length(a.size(), b.size());
  return active().max_abs_diff(a.data(), b.data(), a.size());
}

double max_abs(std::span<const double> a) { return active().max_abs(a.data(), a.size()); }

}  // namespace uatlab::kernels
