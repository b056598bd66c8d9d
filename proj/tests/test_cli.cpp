// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "uatlab/io.hpp"

using namespace uatlab;
namespace fs = std::filesystem;

namespace {

const fs::path kFixtures = UATLAB_FIXTURE_DIR;

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "uatlab");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string fixture(const char* name) { return (kFixtures / name).string(); }

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "uatlab_cli_test";
  fs::create_directories(dir);
  const fs::path p = dir / name;
  fs::remove(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool has_line(const std::string& text, const std::string& line) {
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);)
    if (l == line) return true;
  return false;
}

}  // namespace

TEST_CASE("verify exit codes on fixtures") {
  const std::string input = fixture("input_small.json");
  CHECK(run({"verify", "--model", fixture("model_small.json"), "--input", input, "--tol", "1e-9"}).code == 0);
  CHECK(run({"verify", "--model", fixture("model_cached.json"), "--input", input}).code == 0);
  const Result bad = run({"verify", "--model", fixture("model_corrupted_cache.json"), "--input", input});
  CHECK(bad.code == 1);
  CHECK(bad.out.find("fc0") != std::string::npos);
  const Result broken = run({"verify", "--model", fixture("model_broken_schema.json")});
  CHECK(broken.code == 2);
  CHECK(broken.err.find("layers[1].kind") != std::string::npos);
}

TEST_CASE("verify on an empty model is vacuous") {
  const Result r = run({"verify", "--model", fixture("model_empty.json")});
  CHECK(r.code == 0);
  CHECK(r.out.find("vacuous") != std::string::npos);
}

TEST_CASE("verify with generated input and head-width scaling") {
  CHECK(run({"verify", "--model", fixture("model_small.json"), "--seed", "3"}).code == 0);
  CHECK(run({"verify", "--model", fixture("model_small.json"), "--scale-root", "d"}).code == 0);
  CHECK(run({"verify", "--model", fixture("model_small.json"), "--scale-root", "x"}).code == 2);
}

TEST_CASE("lower dumps the linear operator") {
  const fs::path out = scratch("fc0.json");
  const Result r = run({"lower", "--model", fixture("model_small.json"), "--layer", "fc0", "--out", out.string()});
  REQUIRE(r.code == 0);
  const io::json j = io::read_json(out);
  const LoweredOp op = io::lowered_from_json(j);
  CHECK(op.kind() == LoweredKind::linear);
  CHECK(op.density() == 1.0 / 8.0);
  CHECK(j.at("nnz") == 4 * 4 * 8);
  const io::ModelFile m = io::load_model(fixture("model_small.json"));
  CHECK(op.matrix() == lower_linear(std::get<LinearLayer>(m.layers[0].body).w, 8).matrix());
}

TEST_CASE("lower of zero query and key matches the uniform-attention closed form") {
  const fs::path out = scratch("zero_qk.json");
  REQUIRE(run({"lower", "--model", fixture("model_zero_qk.json"), "--layer", "0", "--out", out.string()}).code == 0);
  const Mat got = io::lowered_from_json(io::read_json(out)).matrix();
  const io::ModelFile m = io::load_model(fixture("model_zero_qk.json"));
  const MhaParams& p = std::get<MhaLayer>(m.layers[0].body).params;
  const std::size_t n = m.n_rows, dm = m.n_cols, d = p.d_head();
  Mat expect(n * dm, n * dm);
  for (std::size_t i = 0; i < p.n_heads; ++i)
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t s = 0; s < n; ++s)
        for (std::size_t c = 0; c < d; ++c)
          for (std::size_t o = 0; o < dm; ++o) {
            double vo = 0.0;
            for (std::size_t e = 0; e < d; ++e) vo += p.w_v[i](c, e) * p.w_o(i * d + e, o);
            expect(r * dm + o, s * dm + i * d + c) = vo / static_cast<double>(n);
          }
  CHECK(sup_norm_diff(got, expect) <= 1e-14);
}

TEST_CASE("malformed input exits 2 without output") {
  const fs::path bad = scratch("bad.json");
  io::write_text(bad, "{\"rows\": 2, ");
  const fs::path out = scratch("never.json");
  const Result r = run({"lower", "--model", fixture("model_small.json"), "--layer", "1", "--input",
                        bad.string(), "--out", out.string()});
  CHECK(r.code == 2);
  CHECK_FALSE(fs::exists(out));
  CHECK(run({"verify"}).code == 2);
  CHECK(run({"frobnicate"}).code == 2);
}

TEST_CASE("uat-fit is reproducible") {
  const fs::path a = scratch("a.json"), b = scratch("b.json");
  const fs::path ra = scratch("a.txt"), rb = scratch("b.txt");
  REQUIRE(run({"uat-fit", "--target", "sin", "--terms", "32", "--seed", "4", "--out", a.string(), "--report", ra.string()}).code == 0);
  REQUIRE(run({"uat-fit", "--target", "sin", "--terms", "32", "--seed", "4", "--out", b.string(), "--report", rb.string()}).code == 0);
  CHECK(slurp(a) == slurp(b));
  CHECK(slurp(ra) == slurp(rb));
  CHECK_FALSE(slurp(ra).empty());
  const Result e = run({"uat-error", "--sum", a.string(), "--target", "sin"});
  CHECK(e.code == 0);
}

TEST_CASE("prune-terms at the lower quartile satisfies the bound") {
  const fs::path sum = scratch("sum.json");
  const fs::path plot = scratch("plot.tsv");
  REQUIRE(run({"uat-fit", "--target", "sin", "--terms", "128", "--seed", "7", "--out", sum.string()}).code == 0);
  const Result r = run({"prune-terms", "--sum", sum.string(), "--target", "sin", "--percentile", "25", "--plot", plot.string()});
  CHECK(r.code == 0);
  CHECK(has_line(r.out, "bound_satisfied: true"));
  CHECK(has_line(r.out, "terms_pruned: 32"));
  CHECK(fs::file_size(plot) > 0);
}

TEST_CASE("prune-entries modes") {
  const Result e = run({"prune-entries", "--model", fixture("model_small.json"), "--layer", "attn0", "--percentile", "10"});
  CHECK(e.code == 0);
  CHECK(has_line(e.out, "bound_satisfied: true"));
  const Result l = run({"prune-entries", "--model", fixture("model_small.json"), "--mode", "layers", "--threshold", "0.5"});
  CHECK(l.code == 0);
  CHECK(run({"prune-entries", "--model", fixture("model_small.json"), "--mode", "rows"}).code == 2);
}

TEST_CASE("lora-merge with a zero update leaves weights identical") {
  const fs::path out = scratch("merged.json");
  const Result r = run({"lora-merge", "--model", fixture("lora_base.json"), "--update", fixture("update_zero.json"),
                        "--layer", "0", "--out", out.string()});
  REQUIRE(r.code == 0);
  const io::ModelFile base = io::load_model(fixture("lora_base.json"));
  const io::ModelFile merged = io::load_model(out);
  CHECK(std::get<LinearLayer>(merged.layers[0].body).w == std::get<LinearLayer>(base.layers[0].body).w);
  const Result r2 = run({"lora-merge", "--model", fixture("lora_base.json"), "--update", fixture("update_rank2.json"),
                         "--layer", "0", "--out", scratch("merged2.json").string()});
  CHECK(r2.code == 0);
  CHECK(has_line(r2.out, "lowered_amendment_discrepancy: 0"));
}

TEST_CASE("lora-fit recovers the tuned layer") {
  const fs::path out = scratch("fit.json");
  const Result r = run({"lora-fit", "--model", fixture("lora_base.json"), "--target-model", fixture("lora_tuned.json"),
                        "--rank", "2", "--out", out.string()});
  REQUIRE(r.code == 0);
  const LowRankUpdate u = io::update_from_json(io::read_json(out));
  const io::ModelFile base = io::load_model(fixture("lora_base.json"));
  const io::ModelFile tuned = io::load_model(fixture("lora_tuned.json"));
  const Mat& w0 = std::get<LinearLayer>(base.layers[0].body).w;
  const Mat& w1 = std::get<LinearLayer>(tuned.layers[0].body).w;
  CHECK(relative_sup_diff(merge(w0, u), w1) <= 1e-6);
}

TEST_CASE("shape mismatch exits 3") {
  CHECK(run({"verify", "--model", fixture("model_small.json"), "--input", fixture("lora_base.json")}).code == 2);
  const fs::path x = scratch("wrong_shape.json");
  io::write_json(x, io::mat_to_json(Mat(3, 3, 1.0)));
  CHECK(run({"verify", "--model", fixture("model_small.json"), "--input", x.string()}).code == 3);
  CHECK(run({"lora-merge", "--model", fixture("model_small.json"), "--update", fixture("update_rank2.json"),
             "--layer", "fc0", "--out", scratch("m3.json").string()}).code == 3);
}
