// SPDX-License-Identifier: Apache-2.0

#include "uatlab/io.hpp"

#include <sodium.h>

#include <bit>
#include <cstdint>
#include <fstream>
#include <sstream>

#include "uatlab/errors.hpp"

namespace uatlab::io {
namespace {

constexpr const char* kModelFormat = "uatlab-model";
constexpr const char* kLoweredFormat = "uatlab-lowered";
constexpr const char* kSumFormat = "uatlab-sigmoidal-sum";
constexpr const char* kUpdateFormat = "uatlab-lora-update";
constexpr const char* kBase64Encoding = "base64-f64le";

const json& field(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object()) throw SchemaError(where + ": expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) throw SchemaError(where + "." + key + ": missing field");
  return *it;
}

std::size_t count_field(const json& obj, const char* key, const std::string& where) {
  const json& v = field(obj, key, where);
  if (!v.is_number_integer() || v.get<std::int64_t>() <= 0) {
    throw SchemaError(where + "." + key + ": expected a positive integer");
  }
  return v.get<std::size_t>();
}

std::string string_field(const json& obj, const char* key, const std::string& where) {
  const json& v = field(obj, key, where);
  if (!v.is_string()) throw SchemaError(where + "." + key + ": expected a string");
  return v.get<std::string>();
}

double number_field(const json& obj, const char* key, const std::string& where) {
  const json& v = field(obj, key, where);
  if (!v.is_number()) throw SchemaError(where + "." + key + ": expected a number");
  return v.get<double>();
}

std::vector<double> number_array(const json& v, const std::string& where) {
  if (!v.is_array()) throw SchemaError(where + ": expected an array of numbers");
  std::vector<double> out;
  out.reserve(v.size());
  for (const auto& e : v) {
    if (!e.is_number()) throw SchemaError(where + ": expected an array of numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

void require_format(const json& j, const char* format, const std::string& where) {
  if (string_field(j, "format", where) != format) {
    throw SchemaError(where + ".format: expected \"" + format + "\"");
  }
  const json& v = field(j, "schema_version", where);
  if (!v.is_number_integer() || v.get<int>() != kSchemaVersion) {
    throw SchemaError(where + ".schema_version: unsupported version (expected " +
                      std::to_string(kSchemaVersion) + ")");
  }
}

json header(const char* format) {
  return json{{"format", format}, {"schema_version", kSchemaVersion}};
}

std::string encode_base64(std::span<const double> values) {
  std::vector<unsigned char> bytes(values.size() * 8);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto bits = std::bit_cast<std::uint64_t>(values[i]);
    for (int b = 0; b < 8; ++b) bytes[i * 8 + b] = static_cast<unsigned char>(bits >> (8 * b));
  }
  std::string out(sodium_base64_ENCODED_LEN(bytes.size(), sodium_base64_VARIANT_ORIGINAL), '\0');
  sodium_bin2base64(out.data(), out.size(), bytes.data(), bytes.size(),
                    sodium_base64_VARIANT_ORIGINAL);
  out.resize(out.size() - 1);  // drop terminator
  return out;
}

std::vector<double> decode_base64(const std::string& text, std::size_t count,
                                  const std::string& where) {
  std::vector<unsigned char> bytes(count * 8 + 8);
  std::size_t len = 0;
  if (sodium_base642bin(bytes.data(), bytes.size(), text.data(), text.size(), nullptr, &len,
                        nullptr, sodium_base64_VARIANT_ORIGINAL) != 0 ||
      len != count * 8) {
    throw SchemaError(where + ".data: invalid base64 payload for " + std::to_string(count) +
                      " doubles");
  }
  std::vector<double> out(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) bits |= std::uint64_t{bytes[i * 8 + b]} << (8 * b);
    out[i] = std::bit_cast<double>(bits);
  }
  return out;
}

std::string layer_where(std::size_t i) { return "layers[" + std::to_string(i) + "]"; }

MhaLayer mha_from_json(const json& j, const std::string& where) {
  MhaParams p;
  p.n_heads = count_field(j, "n_heads", where);
  p.d_model = count_field(j, "d_model", where);
  if (j.contains("scale_root")) {
    try {
      p.options.scale_root = parse_scale_root(string_field(j, "scale_root", where));
    } catch (const SchemaError& e) {
      throw SchemaError(where + ".scale_root: " + e.what());
    }
  }
  if (j.contains("causal")) {
    if (!j["causal"].is_boolean()) throw SchemaError(where + ".causal: expected a boolean");
    p.options.causal = j["causal"].get<bool>();
  }
  if (p.d_model % p.n_heads != 0) {
    throw ShapeError(where + ": d_model " + std::to_string(p.d_model) +
                     " is not divisible by n_heads " + std::to_string(p.n_heads));
  }
  const json& heads = field(j, "heads", where);
  if (!heads.is_array()) throw SchemaError(where + ".heads: expected an array");
  if (heads.size() != p.n_heads) {
    throw ShapeError(where + ".heads: " + std::to_string(heads.size()) + " entries for n_heads " +
                     std::to_string(p.n_heads));
  }
  const std::size_t d = p.d_head();
  for (std::size_t i = 0; i < heads.size(); ++i) {
    const std::string hw = where + ".heads[" + std::to_string(i) + "]";
    for (auto [key, list] : {std::pair{"w_q", &p.w_q}, {"w_k", &p.w_k}, {"w_v", &p.w_v}}) {
      Mat m = mat_from_json(field(heads[i], key, hw), hw + "." + key);
      if (m.rows() != d || m.cols() != d) {
        throw ShapeError(hw + "." + key + ": expected " + shape_str(d, d) + ", got " +
                         shape_str(m.rows(), m.cols()));
      }
      list->push_back(std::move(m));
    }
  }
  p.w_o = mat_from_json(field(j, "w_o", where), where + ".w_o");
  if (p.w_o.rows() != p.d_model || p.w_o.cols() != p.d_model) {
    throw ShapeError(where + ".w_o: expected " + shape_str(p.d_model, p.d_model) + ", got " +
                     shape_str(p.w_o.rows(), p.w_o.cols()));
  }
  return MhaLayer{std::move(p)};
}

json vec_json(std::span<const std::size_t> v) { return json(std::vector<std::size_t>(v.begin(), v.end())); }

json calibration_json(std::span<const CalibrationDeviation> devs) {
  json arr = json::array();
  for (const auto& d : devs) arr.push_back({{"observed", d.observed}, {"bound", d.bound}, {"rounding", d.rounding}});
  return arr;
}

}  // namespace

json mat_to_json(const Mat& m, Payload payload) {
  json j{{"rows", m.rows()}, {"cols", m.cols()}};
  const bool use_base64 =
      payload == Payload::base64 || (payload == Payload::automatic && m.size() > kPlainArrayLimit);
  if (use_base64) {
    j["encoding"] = kBase64Encoding;
    j["data"] = encode_base64(m.data());
  } else {
    j["data"] = std::vector<double>(m.data().begin(), m.data().end());
  }
  return j;
}

Mat mat_from_json(const json& j, const std::string& where) {
  const std::size_t rows = count_field(j, "rows", where);
  const std::size_t cols = count_field(j, "cols", where);
  const json& data = field(j, "data", where);
  std::vector<double> values;
  if (j.contains("encoding")) {
    if (string_field(j, "encoding", where) != kBase64Encoding) {
      throw SchemaError(where + ".encoding: expected \"" + kBase64Encoding + "\"");
    }
    if (!data.is_string()) throw SchemaError(where + ".data: expected a base64 string");
    values = decode_base64(data.get<std::string>(), rows * cols, where);
  } else {
    values = number_array(data, where + ".data");
  }
  if (values.size() != rows * cols) {
    throw SchemaError(where + ".data: " + std::to_string(values.size()) + " entries for " +
                      shape_str(rows, cols));
  }
  if (!all_finite(values)) throw SchemaError(where + ".data: non-finite entry");
  return Mat(rows, cols, std::move(values));
}

ModelFile model_from_json(const json& j) {
  const std::string where = "model";
  require_format(j, kModelFormat, where);
  ModelFile m;
  m.n_rows = count_field(j, "n_rows", where);
  m.n_cols = count_field(j, "n_cols", where);
  if (j.contains("metadata")) {
    if (!j["metadata"].is_object()) throw SchemaError("model.metadata: expected an object");
    m.metadata = j["metadata"];
  }
  const json& layers = field(j, "layers", where);
  if (!layers.is_array()) throw SchemaError("model.layers: expected an array");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const std::string lw = layer_where(i);
    const json& lj = layers[i];
    ModelLayer layer;
    layer.name = lj.contains("name") ? string_field(lj, "name", lw) : lw;
    const std::string kind = string_field(lj, "kind", lw);
    if (kind == "linear") {
      const std::size_t n = count_field(lj, "n", lw);
      Mat w = mat_from_json(field(lj, "weight", lw), lw + ".weight");
      if (w.rows() != n || w.cols() != n) {
        throw ShapeError(lw + ".weight: expected " + shape_str(n, n) + ", got " +
                         shape_str(w.rows(), w.cols()));
      }
      if (n != m.n_rows) {
        throw ShapeError(lw + ".n: " + std::to_string(n) + " does not match model n_rows " +
                         std::to_string(m.n_rows));
      }
      layer.body = LinearLayer{std::move(w)};
    } else if (kind == "mha") {
      MhaLayer mha = mha_from_json(lj, lw);
      if (mha.params.d_model != m.n_cols) {
        throw ShapeError(lw + ".d_model: " + std::to_string(mha.params.d_model) +
                         " does not match model n_cols " + std::to_string(m.n_cols));
      }
      layer.body = std::move(mha);
    } else {
      throw SchemaError(lw + ".kind: expected \"linear\" or \"mha\", got \"" + kind + "\"");
    }
    if (lj.contains("lowering_cache")) {
      Mat cache = mat_from_json(lj["lowering_cache"], lw + ".lowering_cache");
      const std::size_t size = m.n_rows * m.n_cols;
      if (cache.rows() != size || cache.cols() != size) {
        throw ShapeError(lw + ".lowering_cache: expected " + shape_str(size, size) + ", got " +
                         shape_str(cache.rows(), cache.cols()));
      }
      layer.lowering_cache = std::move(cache);
    }
    m.layers.push_back(std::move(layer));
  }
  return m;
}

json model_to_json(const ModelFile& m, Payload payload) {
  json j = header(kModelFormat);
  j["n_rows"] = m.n_rows;
  j["n_cols"] = m.n_cols;
  json layers = json::array();
  for (const auto& layer : m.layers) {
    json lj{{"name", layer.name}};
    if (const auto* lin = std::get_if<LinearLayer>(&layer.body)) {
      lj["kind"] = "linear";
      lj["n"] = lin->w.rows();
      lj["weight"] = mat_to_json(lin->w, payload);
    } else {
      const MhaParams& p = std::get<MhaLayer>(layer.body).params;
      lj["kind"] = "mha";
      lj["n_heads"] = p.n_heads;
      lj["d_model"] = p.d_model;
      lj["scale_root"] = std::string(scale_root_name(p.options.scale_root));
      lj["causal"] = p.options.causal;
      json heads = json::array();
      for (std::size_t i = 0; i < p.n_heads; ++i) {
        heads.push_back({{"w_q", mat_to_json(p.w_q[i], payload)},
                         {"w_k", mat_to_json(p.w_k[i], payload)},
                         {"w_v", mat_to_json(p.w_v[i], payload)}});
      }
      lj["heads"] = std::move(heads);
      lj["w_o"] = mat_to_json(p.w_o, payload);
    }
    if (layer.lowering_cache) lj["lowering_cache"] = mat_to_json(*layer.lowering_cache, payload);
    layers.push_back(std::move(lj));
  }
  j["layers"] = std::move(layers);
  j["metadata"] = m.metadata;
  return j;
}

json density_to_json(const DensityReport& r) {
  return json{{"threshold", r.threshold},         {"size", r.size},
              {"above_threshold", r.above},       {"density", r.density},
              {"row_counts", r.row_counts},       {"col_counts", r.col_counts},
              {"row_histogram", r.row_histogram}, {"col_histogram", r.col_histogram}};
}

json lowered_to_json(const LoweredOp& op, const DensityReport& density) {
  json j = header(kLoweredFormat);
  j["kind"] = std::string(kind_name(op.kind()));
  j["orientation"] = "standard";
  j["note"] = "y' = matrix * x'; the diamond-orientation matrix is the transpose";
  j["n_rows"] = op.n_rows();
  j["n_cols"] = op.n_cols();
  j["size"] = op.size();
  j["nnz"] = op.nnz();
  j["density"] = op.density();
  j["matrix"] = mat_to_json(op.matrix());
  j["density_report"] = density_to_json(density);
  return j;
}

LoweredOp lowered_from_json(const json& j) {
  const std::string where = "lowered";
  require_format(j, kLoweredFormat, where);
  const std::size_t n_rows = count_field(j, "n_rows", where);
  const std::size_t n_cols = count_field(j, "n_cols", where);
  const LoweredKind kind = parse_kind(string_field(j, "kind", where));
  Mat matrix = mat_from_json(field(j, "matrix", where), where + ".matrix");
  return LoweredOp(std::move(matrix), n_rows, n_cols, kind);
}

json sum_to_json(const SigmoidalSum& g) {
  json j = header(kSumFormat);
  j["input_dim"] = g.input_dim;
  j["output_dim"] = g.output_dim;
  json terms = json::array();
  for (const auto& t : g.terms) {
    terms.push_back({{"weights", mat_to_json(t.weights, Payload::plain)},
                     {"bias", t.bias},
                     {"alpha", t.alpha}});
  }
  j["terms"] = std::move(terms);
  return j;
}

SigmoidalSum sum_from_json(const json& j) {
  const std::string where = "sum";
  require_format(j, kSumFormat, where);
  SigmoidalSum g;
  g.input_dim = count_field(j, "input_dim", where);
  g.output_dim = count_field(j, "output_dim", where);
  const json& terms = field(j, "terms", where);
  if (!terms.is_array()) throw SchemaError("sum.terms: expected an array");
  for (std::size_t i = 0; i < terms.size(); ++i) {
    const std::string tw = "sum.terms[" + std::to_string(i) + "]";
    SigmoidTerm t{mat_from_json(field(terms[i], "weights", tw), tw + ".weights"),
                  number_array(field(terms[i], "bias", tw), tw + ".bias"),
                  number_array(field(terms[i], "alpha", tw), tw + ".alpha")};
    g.terms.push_back(std::move(t));
  }
  try {
    g.validate();
  } catch (const MathError& e) {
    throw SchemaError(std::string("sum: ") + e.what());
  }
  return g;
}

json update_to_json(const LowRankUpdate& u) {
  json j = header(kUpdateFormat);
  j["scale"] = u.scale;
  j["b"] = mat_to_json(u.b);
  j["a"] = mat_to_json(u.a);
  return j;
}

LowRankUpdate update_from_json(const json& j) {
  const std::string where = "update";
  require_format(j, kUpdateFormat, where);
  LowRankUpdate u{mat_from_json(field(j, "b", where), "update.b"),
                  mat_from_json(field(j, "a", where), "update.a"),
                  number_field(j, "scale", where)};
  u.validate();
  return u;
}

json prune_report_to_json(const PruneReport& r) {
  return json{{"threshold", r.threshold},   {"n_kept", r.kept.size()},
              {"n_pruned", r.pruned.size()}, {"kept", vec_json(r.kept)},
              {"pruned", vec_json(r.pruned)}, {"scores", r.scores},
              {"pruned_mass", r.pruned_mass}, {"pre_error", r.pre_error},
              {"post_error", r.post_error},   {"bound_satisfied", r.bound_satisfied}};
}

json entry_prune_report_to_json(const EntryPruneReport& r) {
  return json{{"threshold", r.threshold},
              {"zeroed", r.zeroed},
              {"nnz_before", r.nnz_before},
              {"nnz_after", r.nnz_after},
              {"diff_norm_inf", r.diff_norm},
              {"calibration", calibration_json(r.calibration)},
              {"max_observed", r.max_observed},
              {"max_bound", r.max_bound},
              {"bound_satisfied", r.bound_satisfied}};
}

json layer_prune_report_to_json(const LayerPruneReport& r) {
  return json{{"threshold", r.threshold},
              {"identity_distance", r.scores},
              {"kept", vec_json(r.kept)},
              {"removed", vec_json(r.removed)},
              {"diff_norm_inf", r.diff_norm},
              {"calibration", calibration_json(r.calibration)},
              {"max_observed", r.max_observed},
              {"bound_satisfied", r.bound_satisfied}};
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError(path.string() + ": cannot open file");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(path.string() + ": cannot open for writing");
  out << text;
  if (!out) throw Error(path.string() + ": write failed");
}

void write_json(const std::filesystem::path& path, const json& j) {
  write_text(path, j.dump(2) + "\n");
}

ModelFile load_model(const std::filesystem::path& path) {
  return model_from_json(read_json(path));
}

void save_model(const std::filesystem::path& path, const ModelFile& m) {
  write_json(path, model_to_json(m));
}

Mat load_matrix(const std::filesystem::path& path) {
  return mat_from_json(read_json(path), path.filename().string());
}

}  // namespace uatlab::io
