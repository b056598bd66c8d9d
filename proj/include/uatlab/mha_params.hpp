// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

#include "uatlab/matcore.hpp"
#include "uatlab/rng.hpp"

namespace uatlab {

/// Which width the attention logits are scaled by: sqrt(d_model) (the
/// default) or sqrt(d_head) as in most library implementations.
enum class ScaleRoot { model_width, head_width };

std::string_view scale_root_name(ScaleRoot r);
ScaleRoot parse_scale_root(std::string_view s);  // "M" or "d"

struct AttentionOptions {
  ScaleRoot scale_root = ScaleRoot::model_width;
  bool causal = false;
};

/// Parameters of one multi-head attention layer. The input (N x d_model) is
/// split by columns into n_heads blocks of d_head = d_model / n_heads
/// columns; head i owns square d_head x d_head projections.
struct MhaParams {
  std::size_t n_heads = 0;
  std::size_t d_model = 0;
  std::vector<Mat> w_q;
  std::vector<Mat> w_k;
  std::vector<Mat> w_v;
  Mat w_o;
  AttentionOptions options;

  std::size_t d_head() const { return n_heads == 0 ? 0 : d_model / n_heads; }

  /// Logit divisor: sqrt(d_model) or sqrt(d_head).
  double logit_scale() const;

  /// Throws ShapeError describing the first inconsistency.
  void validate() const;

  static MhaParams random(std::size_t n_heads, std::size_t d_model, Rng& rng,
                          double stddev = 1.0);
};

}  // namespace uatlab
