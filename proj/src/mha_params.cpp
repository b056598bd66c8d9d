// SPDX-License-Identifier: Apache-2.0

#include "uatlab/mha_params.hpp"

#include <cmath>
#include <string>

#include "uatlab/errors.hpp"

namespace uatlab {

std::string_view scale_root_name(ScaleRoot r) {
  return r == ScaleRoot::model_width ? "M" : "d";
}

ScaleRoot parse_scale_root(std::string_view s) {
  if (s == "M") return ScaleRoot::model_width;
  if (s == "d") return ScaleRoot::head_width;
  throw SchemaError("scale root must be \"M\" or \"d\", got \"" + std::string(s) + "\"");
}

double MhaParams::logit_scale() const {
  const auto width = options.scale_root == ScaleRoot::model_width ? d_model : d_head();
  return std::sqrt(static_cast<double>(width));
}

void MhaParams::validate() const {
  if (n_heads == 0) throw ShapeError("mha: n_heads must be positive");
  if (d_model == 0) throw ShapeError("mha: d_model must be positive");
  if (d_model % n_heads != 0) {
    throw ShapeError("mha: d_model " + std::to_string(d_model) + " is not divisible by n_heads " +
                     std::to_string(n_heads));
  }
  const std::size_t d = d_head();
  auto check_list = [&](const std::vector<Mat>& list, const char* name) {
    if (list.size() != n_heads) {
      throw ShapeError(std::string("mha: ") + name + " has " + std::to_string(list.size()) +
                       " matrices, expected " + std::to_string(n_heads));
    }
    for (std::size_t i = 0; i < list.size(); ++i) {
      if (list[i].rows() != d || list[i].cols() != d) {
        throw ShapeError(std::string("mha: ") + name + "[" + std::to_string(i) + "] is " +
                         shape_str(list[i].rows(), list[i].cols()) + ", expected " +
                         shape_str(d, d));
      }
    }
  };
  check_list(w_q, "w_q");
  check_list(w_k, "w_k");
  check_list(w_v, "w_v");
  if (w_o.rows() != d_model || w_o.cols() != d_model) {
    throw ShapeError("mha: w_o is " + shape_str(w_o.rows(), w_o.cols()) + ", expected " +
                     shape_str(d_model, d_model));
  }
}

MhaParams MhaParams::random(std::size_t n_heads, std::size_t d_model, Rng& rng, double stddev) {
  MhaParams p;
  p.n_heads = n_heads;
  p.d_model = d_model;
  if (n_heads == 0 || d_model % n_heads != 0) p.validate();
  const std::size_t d = p.d_head();
  for (std::size_t i = 0; i < n_heads; ++i) {
    p.w_q.push_back(rng.normal_mat(d, d, stddev));
    p.w_k.push_back(rng.normal_mat(d, d, stddev));
    p.w_v.push_back(rng.normal_mat(d, d, stddev));
  }
  p.w_o = rng.normal_mat(d_model, d_model, stddev);
  return p;
}

}  // namespace uatlab
