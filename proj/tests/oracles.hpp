// SPDX-License-Identifier: Apache-2.0

#pragma once

// Independent reference computations for the unit and acceptance suites.
// Everything here uses plain loops in long double and touches the library
// only through Mat's accessors.

#include <algorithm>
#include <cmath>
#include <vector>

#include "uatlab/matcore.hpp"
#include "uatlab/mha_params.hpp"
#include "uatlab/uat.hpp"

namespace uatlab::oracle {

using LMat = std::vector<std::vector<long double>>;

inline LMat to_l(const Mat& m) {
  LMat out(m.rows(), std::vector<long double>(m.cols()));
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) out[i][j] = m(i, j);
  return out;
}

inline Mat to_mat(const LMat& m) {
  Mat out(m.size(), m.front().size());
  for (std::size_t i = 0; i < m.size(); ++i)
    for (std::size_t j = 0; j < m[i].size(); ++j) out(i, j) = static_cast<double>(m[i][j]);
  return out;
}

inline LMat mul(const LMat& a, const LMat& b) {
  LMat c(a.size(), std::vector<long double>(b.front().size(), 0.0L));
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.front().size(); ++j)
      for (std::size_t k = 0; k < b.size(); ++k) c[i][j] += a[i][k] * b[k][j];
  return c;
}

inline LMat tr(const LMat& a) {
  LMat t(a.front().size(), std::vector<long double>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a[i].size(); ++j) t[j][i] = a[i][j];
  return t;
}

inline LMat kron(const LMat& a, const LMat& b) {
  const std::size_t p = b.size();
  const std::size_t q = b.front().size();
  LMat k(a.size() * p, std::vector<long double>(a.front().size() * q, 0.0L));
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a[i].size(); ++j)
      for (std::size_t r = 0; r < p; ++r)
        for (std::size_t s = 0; s < q; ++s) k[i * p + r][j * q + s] = a[i][j] * b[r][s];
  return k;
}

inline LMat eye(std::size_t n) {
  LMat m(n, std::vector<long double>(n, 0.0L));
  for (std::size_t i = 0; i < n; ++i) m[i][i] = 1.0L;
  return m;
}

inline LMat add(const LMat& a, const LMat& b) {
  LMat c = a;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a[i].size(); ++j) c[i][j] += b[i][j];
  return c;
}

inline Mat naive_matmul(const Mat& a, const Mat& b) { return to_mat(mul(to_l(a), to_l(b))); }

// Row-major flattening x[i][k] -> i*M + k.
inline std::vector<long double> flat(const LMat& x) {
  std::vector<long double> v;
  for (const auto& row : x) v.insert(v.end(), row.begin(), row.end());
  return v;
}

// Attention matrix of head `head` computed from scratch.
inline LMat attention(const Mat& x, const MhaParams& p, std::size_t head) {
  const std::size_t n = x.rows();
  const std::size_t d = p.d_head();
  LMat xi(n, std::vector<long double>(d));
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < d; ++c) xi[r][c] = x(r, head * d + c);
  const LMat q = mul(xi, to_l(p.w_q[head]));
  const LMat k = mul(xi, to_l(p.w_k[head]));
  const long double sc = std::sqrt(static_cast<long double>(
      p.options.scale_root == ScaleRoot::model_width ? p.d_model : d));
  LMat h(n, std::vector<long double>(n, 0.0L));
  for (std::size_t r = 0; r < n; ++r) {
    const std::size_t visible = p.options.causal ? r + 1 : n;
    std::vector<long double> logits(visible);
    for (std::size_t s = 0; s < visible; ++s) {
      long double acc = 0.0L;
      for (std::size_t c = 0; c < d; ++c) acc += q[r][c] * k[s][c];
      logits[s] = acc / sc;
    }
    const long double mx = *std::max_element(logits.begin(), logits.end());
    long double total = 0.0L;
    for (std::size_t s = 0; s < visible; ++s) total += std::exp(logits[s] - mx);
    for (std::size_t s = 0; s < visible; ++s) h[r][s] = std::exp(logits[s] - mx) / total;
  }
  return h;
}

// 0/1 matrix selecting head `head` columns out of the row-major flattening.
inline LMat selection(std::size_t head, std::size_t n, std::size_t m, std::size_t heads) {
  const std::size_t d = m / heads;
  LMat s(n * d, std::vector<long double>(n * m, 0.0L));
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < d; ++c) s[r * d + c][r * m + head * d + c] = 1.0L;
  return s;
}

// M_eff = (I_N kron W_O^T) * sum_i S_i^T (H_i kron W_Vi^T) S_i, term by term.
inline Mat mha_effective_matrix(const Mat& x, const MhaParams& p) {
  const std::size_t n = x.rows();
  const std::size_t m = p.d_model;
  LMat sum(n * m, std::vector<long double>(n * m, 0.0L));
  for (std::size_t i = 0; i < p.n_heads; ++i) {
    const LMat s = selection(i, n, m, p.n_heads);
    const LMat block = kron(attention(x, p, i), tr(to_l(p.w_v[i])));
    sum = add(sum, mul(mul(tr(s), block), s));
  }
  return to_mat(mul(kron(eye(n), tr(to_l(p.w_o))), sum));
}

inline long double sigmoid_l(long double t) { return 1.0L / (1.0L + std::exp(-t)); }

inline std::vector<long double> eval_sum(const SigmoidalSum& g, const std::vector<double>& x) {
  std::vector<long double> out(g.output_dim, 0.0L);
  for (const auto& t : g.terms)
    for (std::size_t k = 0; k < g.output_dim; ++k) {
      long double pre = t.bias[k];
      for (std::size_t i = 0; i < x.size(); ++i) pre += static_cast<long double>(t.weights(i, k)) * x[i];
      out[k] += t.alpha[k] * sigmoid_l(pre);
    }
  return out;
}

// Grid points enumerated with nested loops, first dimension outermost.
inline std::vector<std::vector<double>> grid(const DomainBox& box) {
  std::vector<std::vector<double>> pts{{}};
  for (std::size_t d = 0; d < box.dims(); ++d) {
    std::vector<std::vector<double>> next;
    for (const auto& p : pts)
      for (std::size_t i = 0; i < box.resolution[d]; ++i) {
        auto q = p;
        q.push_back(box.lower[d] + (box.upper[d] - box.lower[d]) * static_cast<double>(i) /
                                       static_cast<double>(box.resolution[d] - 1));
        next.push_back(std::move(q));
      }
    pts = std::move(next);
  }
  return pts;
}

inline double max_rel(const Mat& a, const Mat& ref) {
  double diff = 0.0;
  double scale = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff = std::max(diff, std::fabs(a.data()[i] - ref.data()[i]));
    scale = std::max(scale, std::fabs(ref.data()[i]));
  }
  return scale == 0.0 ? diff : diff / scale;
}

}  // namespace uatlab::oracle
