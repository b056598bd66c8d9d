// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>

namespace uatlab::kernels::detail {

struct KernelTable {
  double (*dot)(const double* a, const double* b, std::size_t n);
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  double (*max_abs_diff)(const double* a, const double* b, std::size_t n);
  double (*max_abs)(const double* a, std::size_t n);
};

const KernelTable& scalar_table();
// Return nullptr when the variant was not compiled for this architecture.
const KernelTable* avx2_table();
const KernelTable* neon_table();

}  // namespace uatlab::kernels::detail
