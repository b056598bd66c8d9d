// SPDX-License-Identifier: Apache-2.0

#include "uatlab/transformer_ref.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "uatlab/errors.hpp"

namespace uatlab {

Mat linear_forward(const LinearLayer& layer, const Mat& x) {
  if (layer.w.rows() != layer.w.cols()) {
    throw ShapeError("linear_forward: weight must be square, got " +
                     shape_str(layer.w.rows(), layer.w.cols()));
  }
  if (layer.w.cols() != x.rows()) {
    throw ShapeError("linear_forward: weight " + shape_str(layer.w.rows(), layer.w.cols()) +
                     " does not conform to input " + shape_str(x.rows(), x.cols()));
  }
  return matmul(layer.w, x);
}

Mat mha_forward(const MhaLayer& layer, const Mat& x) {
  const MhaParams& p = layer.params;
  p.validate();
  if (x.cols() != p.d_model) {
    throw ShapeError("mha_forward: input " + shape_str(x.rows(), x.cols()) +
                     " does not match d_model " + std::to_string(p.d_model));
  }
  const std::size_t n = x.rows();
  const std::size_t d = p.d_head();
  const double inv_scale = 1.0 / p.logit_scale();

  Mat concat(n, p.d_model);
  for (std::size_t i = 0; i < p.n_heads; ++i) {
    Mat xi(n, d);
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < d; ++c) xi(r, c) = x(r, i * d + c);

    const Mat q = matmul(xi, p.w_q[i]);
    const Mat k = matmul(xi, p.w_k[i]);
    const Mat v = matmul(xi, p.w_v[i]);

    Mat scores(n, n);
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t s = 0; s < n; ++s) {
        double acc = 0.0;
        for (std::size_t c = 0; c < d; ++c) acc += q(r, c) * k(s, c);
        scores(r, s) = acc * inv_scale;
      }

    Mat attn(n, n);
    for (std::size_t r = 0; r < n; ++r) {
      const std::size_t visible = p.options.causal ? r + 1 : n;
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t s = 0; s < visible; ++s) mx = std::max(mx, scores(r, s));
      double total = 0.0;
      for (std::size_t s = 0; s < visible; ++s) {
        attn(r, s) = std::exp(scores(r, s) - mx);
        total += attn(r, s);
      }
      for (std::size_t s = 0; s < visible; ++s) attn(r, s) /= total;
    }

    const Mat head_out = matmul(attn, v);
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < d; ++c) concat(r, i * d + c) = head_out(r, c);
  }
  return matmul(concat, p.w_o);
}

}  // namespace uatlab
