// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "uatlab/matcore.hpp"
#include "uatlab/mha_params.hpp"

// Direct forward passes used as the oracle for every lowering. They share only
// the matcore substrate with the lowering code.

namespace uatlab {

struct LinearLayer {
  Mat w;  // N x N
};

struct MhaLayer {
  MhaParams params;
};

/// W x for x of shape N x M.
Mat linear_forward(const LinearLayer& layer, const Mat& x);

/// Concat(H_1 V_1, ..., H_h V_h) W_O with
/// H_i = softmax((x_i W_Qi)(x_i W_Ki)^T / scale) and V_i = x_i W_Vi.
/// No residual, normalization or dropout.
Mat mha_forward(const MhaLayer& layer, const Mat& x);

}  // namespace uatlab
