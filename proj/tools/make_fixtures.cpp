// SPDX-License-Identifier: Apache-2.0

// Regenerates the example files under data/fixtures. Output is deterministic.

#include <filesystem>
#include <iostream>

#include "uatlab/io.hpp"
#include "uatlab/lowering.hpp"
#include "uatlab/rng.hpp"

using namespace uatlab;

namespace {

io::ModelLayer linear(const std::string& name, Mat w) {
  return io::ModelLayer{name, LinearLayer{std::move(w)}, std::nullopt};
}

io::ModelLayer mha(const std::string& name, MhaParams p) {
  return io::ModelLayer{name, MhaLayer{std::move(p)}, std::nullopt};
}

}  // namespace

int main(int argc, char** argv) {
  const std::filesystem::path dir = argc > 1 ? argv[1] : "data/fixtures";
  std::filesystem::create_directories(dir);
  Rng rng(20240601);
  constexpr std::size_t n = 4;
  constexpr std::size_t m = 8;

  io::ModelFile small;
  small.n_rows = n;
  small.n_cols = m;
  small.metadata = {{"description", "two linear and two attention layers on 4x8 activations"}};
  small.layers.push_back(linear("fc0", rng.normal_mat(n, n, 0.5)));
  small.layers.push_back(mha("attn0", MhaParams::random(2, m, rng, 0.5)));
  small.layers.push_back(linear("fc1", rng.normal_mat(n, n, 0.5)));
  small.layers.push_back(mha("attn1", MhaParams::random(4, m, rng, 0.5)));
  io::save_model(dir / "model_small.json", small);
  io::write_json(dir / "input_small.json", io::mat_to_json(rng.normal_mat(n, m)));

  // Same model with a stored lowering for fc0 whose entry (0, 0) is off by 0.25.
  io::ModelFile corrupted = small;
  Mat cache = lower_linear(std::get<LinearLayer>(small.layers[0].body).w, m).matrix();
  cache(0, 0) += 0.25;
  corrupted.layers[0].lowering_cache = cache;
  io::save_model(dir / "model_corrupted_cache.json", corrupted);

  // Same model with a correct stored lowering for fc0.
  io::ModelFile cached = small;
  cached.layers[0].lowering_cache = lower_linear(std::get<LinearLayer>(small.layers[0].body).w, m).matrix();
  io::save_model(dir / "model_cached.json", cached);

  // Schema-broken: layer 1 has an unknown kind and no weights.
  auto broken = io::model_to_json(small);
  broken["layers"][1] = {{"name", "attn0"}, {"kind", "convolution"}};
  io::write_json(dir / "model_broken_schema.json", broken);

  io::ModelFile uniform;
  uniform.n_rows = 3;
  uniform.n_cols = 4;
  MhaParams p = MhaParams::random(2, 4, rng, 0.5);
  for (auto& w : p.w_q) w = Mat(2, 2);
  for (auto& w : p.w_k) w = Mat(2, 2);
  uniform.layers.push_back(mha("attn_uniform", std::move(p)));
  io::save_model(dir / "model_zero_qk.json", uniform);

  io::ModelFile empty;
  empty.n_rows = 2;
  empty.n_cols = 2;
  io::save_model(dir / "model_empty.json", empty);

  // LoRA: base model, tuned model differing by a rank-2 delta, and updates.
  io::ModelFile base;
  base.n_rows = 6;
  base.n_cols = 3;
  base.layers.push_back(linear("proj", rng.normal_mat(6, 6)));
  io::save_model(dir / "lora_base.json", base);
  io::ModelFile tuned = base;
  const Mat delta = matmul(rng.normal_mat(6, 2), rng.normal_mat(2, 6));
  auto& w = std::get<LinearLayer>(tuned.layers[0].body).w;
  w = add(w, delta);
  io::save_model(dir / "lora_tuned.json", tuned);
  io::write_json(dir / "update_zero.json",
                 io::update_to_json(LowRankUpdate::zero_init(6, 2, rng)));
  io::write_json(dir / "update_rank2.json",
                 io::update_to_json(LowRankUpdate{rng.normal_mat(6, 2), rng.normal_mat(2, 6), 0.5}));

  std::cout << "fixtures written to " << dir << "\n";
  return 0;
}
