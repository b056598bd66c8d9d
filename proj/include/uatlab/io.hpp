// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "uatlab/lora.hpp"
#include "uatlab/lowering.hpp"
#include "uatlab/matcore.hpp"
#include "uatlab/pruning.hpp"
#include "uatlab/transformer_ref.hpp"
#include "uatlab/uat.hpp"

// JSON documents exchanged by the command-line tool.
//
// Matrices are objects {"rows": r, "cols": c, "data": ...}. `data` is either a
// plain array of numbers in row-major order, written with the shortest
// representation that round-trips to the same double, or, with
// "encoding": "base64-f64le", a base64 string of little-endian IEEE-754
// doubles. Writers pick base64 once a matrix exceeds kPlainArrayLimit entries.

namespace uatlab::io {

using json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;
inline constexpr std::size_t kPlainArrayLimit = 256;

enum class Payload { automatic, plain, base64 };

json mat_to_json(const Mat& m, Payload payload = Payload::automatic);
/// `where` names the field in error messages, e.g. "layers[0].weight".
Mat mat_from_json(const json& j, const std::string& where);

struct ModelLayer {
  std::string name;
  std::variant<LinearLayer, MhaLayer> body;
  /// Optional precomputed lowering in standard orientation. When present the
  /// verifier uses it instead of lowering the layer itself.
  std::optional<Mat> lowering_cache;

  bool is_linear() const { return std::holds_alternative<LinearLayer>(body); }
};

/// A stack of sublayers acting on N x M activations.
struct ModelFile {
  int schema_version = kSchemaVersion;
  std::size_t n_rows = 0;  // N
  std::size_t n_cols = 0;  // M
  std::vector<ModelLayer> layers;
  json metadata = json::object();
};

/// Throws SchemaError for structural problems and ShapeError for
/// inconsistent dimensions, naming the offending field.
ModelFile model_from_json(const json& j);
json model_to_json(const ModelFile& m, Payload payload = Payload::automatic);

json lowered_to_json(const LoweredOp& op, const DensityReport& density);
LoweredOp lowered_from_json(const json& j);

json density_to_json(const DensityReport& r);

json sum_to_json(const SigmoidalSum& g);
SigmoidalSum sum_from_json(const json& j);

json update_to_json(const LowRankUpdate& u);
LowRankUpdate update_from_json(const json& j);

json prune_report_to_json(const PruneReport& r);
json entry_prune_report_to_json(const EntryPruneReport& r);
json layer_prune_report_to_json(const LayerPruneReport& r);

/// Reads and parses a JSON file; SchemaError on I/O or syntax failure.
json read_json(const std::filesystem::path& path);
/// Writes `j` pretty-printed with a trailing newline.
void write_json(const std::filesystem::path& path, const json& j);
void write_text(const std::filesystem::path& path, const std::string& text);

ModelFile load_model(const std::filesystem::path& path);
void save_model(const std::filesystem::path& path, const ModelFile& m);

/// An activation file is a bare matrix object.
Mat load_matrix(const std::filesystem::path& path);

}  // namespace uatlab::io
