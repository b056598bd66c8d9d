// SPDX-License-Identifier: Apache-2.0

#include "cli.hpp"

#include <fmt/format.h>

#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "uatlab/errors.hpp"
#include "uatlab/io.hpp"
#include "uatlab/kernels.hpp"
#include "uatlab/lora.hpp"
#include "uatlab/lowering.hpp"
#include "uatlab/pruning.hpp"
#include "uatlab/rng.hpp"
#include "uatlab/transformer_ref.hpp"
#include "uatlab/uat.hpp"

namespace uatlab::cli {
namespace {

using io::json;

struct VerificationFailure : Error {
  using Error::Error;
};

// Ordered "key: value" report. Doubles are printed with the shortest
// representation that round-trips.
class Report {
 public:
  explicit Report(std::string command) { add("command", std::move(command)); }

  void add(const std::string& key, const std::string& value) { lines_.push_back(key + ": " + value); }
  void add(const std::string& key, const char* value) { add(key, std::string(value)); }
  void add(const std::string& key, double value) { add(key, fmt::format("{}", value)); }
  void add(const std::string& key, std::size_t value) { add(key, std::to_string(value)); }
  void add(const std::string& key, bool value) { add(key, value ? "true" : "false"); }

  std::string str() const {
    std::string s;
    for (const auto& l : lines_) s += l + "\n";
    return s;
  }

 private:
  std::vector<std::string> lines_;
};

struct Common {
  std::string model;
  std::string input;
  std::string out;
  std::string report;
  std::string plot;
  std::uint64_t seed = 0;
  std::string scale_root;
};

std::size_t resolve_layer(const io::ModelFile& m, const std::string& ref) {
  for (std::size_t i = 0; i < m.layers.size(); ++i)
    if (m.layers[i].name == ref) return i;
  std::size_t idx = 0;
  try {
    std::size_t used = 0;
    idx = std::stoul(ref, &used);
    if (used != ref.size()) throw std::invalid_argument(ref);
  } catch (const std::exception&) {
    throw ShapeError("layer '" + ref + "' not found by name or index");
  }
  if (idx >= m.layers.size()) {
    throw ShapeError("layer index " + ref + " out of range (model has " +
                     std::to_string(m.layers.size()) + " layers)");
  }
  return idx;
}

void apply_scale_root(io::ModelFile& m, const std::string& root) {
  if (root.empty()) return;
  const ScaleRoot r = parse_scale_root(root);
  for (auto& layer : m.layers)
    if (auto* mha = std::get_if<MhaLayer>(&layer.body)) mha->params.options.scale_root = r;
}

// The activation fed to the first layer: the --input file, or a seeded
// standard-normal draw of the model's activation shape.
Mat model_input(const io::ModelFile& m, const Common& c) {
  if (!c.input.empty()) {
    Mat x = io::load_matrix(c.input);
    if (x.rows() != m.n_rows || x.cols() != m.n_cols) {
      throw ShapeError("input " + shape_str(x.rows(), x.cols()) + " does not match model " +
                       shape_str(m.n_rows, m.n_cols));
    }
    return x;
  }
  Rng rng(c.seed);
  return rng.normal_mat(m.n_rows, m.n_cols);
}

Mat forward(const io::ModelLayer& layer, const Mat& x) {
  if (const auto* lin = std::get_if<LinearLayer>(&layer.body)) return linear_forward(*lin, x);
  return mha_forward(std::get<MhaLayer>(layer.body), x);
}

LoweredOp lower(const io::ModelLayer& layer, const Mat& x, bool use_cache) {
  if (use_cache && layer.lowering_cache) {
    return LoweredOp(*layer.lowering_cache, x.rows(), x.cols(),
                     layer.is_linear() ? LoweredKind::linear : LoweredKind::mha);
  }
  if (const auto* lin = std::get_if<LinearLayer>(&layer.body)) return lower_linear(lin->w, x.cols());
  return lower_mha(x, std::get<MhaLayer>(layer.body).params);
}

// Activation entering layer `idx` when the model is run on x.
Mat activation_before(const io::ModelFile& m, std::size_t idx, Mat x) {
  for (std::size_t i = 0; i < idx; ++i) x = forward(m.layers[i], x);
  return x;
}

double resolve_threshold(const std::optional<double>& threshold,
                         const std::optional<double>& pct, std::span<const double> values) {
  if (threshold && pct) throw MathError("use either --threshold or --percentile, not both");
  if (pct) return percentile(values, *pct);
  return threshold.value_or(0.0);
}

std::string plot_table(const SigmoidalSum& g, const TargetFn& target, const DomainBox& box) {
  std::string s;
  for (std::size_t d = 0; d < g.input_dim; ++d) s += (d ? "\t" : "") + fmt::format("x{}", d);
  if (g.input_dim == 1) s = "x";
  for (std::size_t k = 0; k < g.output_dim; ++k) {
    if (g.output_dim == 1) {
      s += "\ttarget\tfit\tabs_error";
    } else {
      s += fmt::format("\ttarget{0}\tfit{0}\tabs_error{0}", k);
    }
  }
  s += "\n";
  for (std::size_t p = 0; p < box.point_count(); ++p) {
    const auto x = box.point(p);
    const auto f = target(x);
    const auto y = eval_sum(g, x);
    for (std::size_t d = 0; d < x.size(); ++d) s += (d ? "\t" : "") + fmt::format("{}", x[d]);
    for (std::size_t k = 0; k < g.output_dim; ++k)
      s += fmt::format("\t{}\t{}\t{}", f[k], y[k], std::fabs(y[k] - f[k]));
    s += "\n";
  }
  return s;
}

DomainBox target_box(const Target& t, std::size_t resolution) {
  DomainBox box = t.box;
  if (resolution > 0) std::fill(box.resolution.begin(), box.resolution.end(), resolution);
  box.validate();
  return box;
}

void emit(std::ostream& out, const Report& r, const std::string& path) {
  out << r.str();
  if (!path.empty()) io::write_text(path, r.str());
}

// ---- lower / density -------------------------------------------------------

int cmd_lower(const Common& c, const std::string& layer_ref, double threshold, bool density_only,
              std::ostream& out) {
  io::ModelFile m = io::load_model(c.model);
  apply_scale_root(m, c.scale_root);
  const std::size_t idx = resolve_layer(m, layer_ref);
  const Mat x = activation_before(m, idx, model_input(m, c));
  const LoweredOp op = lower(m.layers[idx], x, /*use_cache=*/false);
  const DensityReport dens = density_report(op, threshold);

  Report r(density_only ? "density" : "lower");
  r.add("layer", m.layers[idx].name);
  r.add("kind", std::string(kind_name(op.kind())));
  r.add("n_rows", op.n_rows());
  r.add("n_cols", op.n_cols());
  r.add("size", op.size());
  r.add("nnz", op.nnz());
  r.add("density", op.density());
  r.add("threshold", threshold);
  r.add("above_threshold", dens.above);
  r.add("density_above_threshold", dens.density);
  r.add("min_row_count", *std::min_element(dens.row_counts.begin(), dens.row_counts.end()));
  r.add("max_row_count", *std::max_element(dens.row_counts.begin(), dens.row_counts.end()));
  r.add("number_format", "shortest round-trip decimal");

  if (density_only) {
    if (!c.out.empty()) io::write_json(c.out, io::density_to_json(dens));
  } else {
    if (c.out.empty()) throw SchemaError("--out is required");
    io::write_json(c.out, io::lowered_to_json(op, dens));
    r.add("out", c.out);
  }
  emit(out, r, c.report);
  return kOk;
}

// ---- verify ----------------------------------------------------------------

int cmd_verify(const Common& c, double tol, std::ostream& out) {
  io::ModelFile m = io::load_model(c.model);
  apply_scale_root(m, c.scale_root);
  Mat x = model_input(m, c);
  const Mat x0 = x;

  out << fmt::format("verify: {} layer(s), tolerance {} (relative sup norm)\n", m.layers.size(),
                     tol);
  if (m.layers.empty()) {
    out << "verify: vacuous (no layers)\nresult: pass\n";
    return kOk;
  }

  std::vector<std::string> failed;
  std::optional<LoweredOp> stack;
  for (std::size_t i = 0; i < m.layers.size(); ++i) {
    const auto& layer = m.layers[i];
    const LoweredOp op = lower(layer, x, /*use_cache=*/true);
    const Mat expected = forward(layer, x);
    const Mat lowered = unflatten(op.apply(flatten(x)));
    const double abs_dev = sup_norm_diff(lowered, expected);
    const double rel_dev = relative_sup_diff(lowered, expected);
    const bool ok = rel_dev <= tol;
    out << fmt::format("layer {} ({}, {}{}): max_abs_dev={} rel_dev={} {}\n", i, layer.name,
                       layer.is_linear() ? "linear" : "mha",
                       layer.lowering_cache ? ", cached" : "", abs_dev, rel_dev,
                       ok ? "ok" : "FAIL");
    if (!ok) failed.push_back(layer.name);
    stack = stack ? compose(op, *stack) : op;
    x = expected;
  }
  const Mat whole = unflatten(stack->apply(flatten(x0)));
  const double stack_dev = relative_sup_diff(whole, x);
  const bool stack_ok = stack_dev <= tol;
  out << fmt::format("stack (composed operator): rel_dev={} {}\n", stack_dev,
                     stack_ok ? "ok" : "FAIL");
  if (!stack_ok) failed.push_back("<composed stack>");

  if (!failed.empty()) {
    std::string names;
    for (const auto& f : failed) names += (names.empty() ? "" : ", ") + f;
    throw VerificationFailure("deviation above tolerance in: " + names);
  }
  out << "result: pass\n";
  return kOk;
}

// ---- uat -------------------------------------------------------------------

int cmd_uat_fit(const Common& c, const std::string& target_name, std::size_t terms, double ridge,
                std::size_t resolution, std::optional<double> weight_scale, std::ostream& out) {
  const Target& t = find_target(target_name);
  const DomainBox box = target_box(t, resolution);
  if (c.out.empty()) throw SchemaError("--out is required");
  Rng rng(c.seed);
  FitOptions opts;
  opts.weight_scale = weight_scale;
  const SigmoidalSum g = fit_random_features(t.fn, t.output_dim, box, terms, ridge, rng, opts);

  json doc = io::sum_to_json(g);
  doc["fit"] = {{"target", t.name}, {"seed", c.seed}, {"ridge", ridge},
                {"weight_scale", weight_scale.value_or(default_weight_scale(terms, t.input_dim))}};
  io::write_json(c.out, doc);
  if (!c.plot.empty()) io::write_text(c.plot, plot_table(g, t.fn, box));

  Report r("uat-fit");
  r.add("target", t.name);
  r.add("terms", terms);
  r.add("seed", std::to_string(c.seed));
  r.add("ridge", ridge);
  r.add("weight_scale", weight_scale.value_or(default_weight_scale(terms, t.input_dim)));
  r.add("grid_points", box.point_count());
  r.add("sup_error", sup_error(g, t.fn, box));
  r.add("rmse", grid_rmse(g, t.fn, box));
  r.add("sup_error_note", "measured on the grid; a lower bound on the true sup over the box");
  emit(out, r, c.report);
  return kOk;
}

int cmd_uat_error(const Common& c, const std::string& sum_path, const std::string& target_name,
                  std::size_t resolution, std::ostream& out) {
  const SigmoidalSum g = io::sum_from_json(io::read_json(sum_path));
  const Target& t = find_target(target_name);
  if (t.input_dim != g.input_dim || t.output_dim != g.output_dim) {
    throw ShapeError("sum dimensions do not match target '" + t.name + "'");
  }
  const DomainBox box = target_box(t, resolution);
  if (!c.plot.empty()) io::write_text(c.plot, plot_table(g, t.fn, box));
  Report r("uat-error");
  r.add("target", t.name);
  r.add("terms", g.n_terms());
  r.add("grid_points", box.point_count());
  r.add("sup_error", sup_error(g, t.fn, box));
  r.add("rmse", grid_rmse(g, t.fn, box));
  emit(out, r, c.report);
  return kOk;
}

// ---- pruning ---------------------------------------------------------------

int cmd_prune_terms(const Common& c, const std::string& sum_path, const std::string& target_name,
                    std::optional<double> threshold, std::optional<double> pct,
                    std::size_t resolution, std::ostream& out) {
  const SigmoidalSum g = io::sum_from_json(io::read_json(sum_path));
  const Target& t = find_target(target_name);
  if (t.input_dim != g.input_dim || t.output_dim != g.output_dim) {
    throw ShapeError("sum dimensions do not match target '" + t.name + "'");
  }
  const DomainBox box = target_box(t, resolution);
  const auto scores = score_terms(g, box);
  const double tau = resolve_threshold(threshold, pct, scores);
  const PruneResult res = prune_terms(g, scores, tau, t.fn, box);
  if (!c.out.empty()) io::write_json(c.out, io::sum_to_json(res.pruned));

  Report r("prune-terms");
  r.add("target", t.name);
  if (pct) r.add("percentile", *pct);
  r.add("threshold", tau);
  r.add("terms_before", g.n_terms());
  r.add("terms_kept", res.report.kept.size());
  r.add("terms_pruned", res.report.pruned.size());
  r.add("pruned_mass", res.report.pruned_mass);
  r.add("pre_error", res.report.pre_error);
  r.add("post_error", res.report.post_error);
  r.add("bound", res.report.pre_error + res.report.pruned_mass);
  r.add("bound_satisfied", res.report.bound_satisfied);
  emit(out, r, c.report);
  if (!c.plot.empty()) io::write_text(c.plot, plot_table(res.pruned, t.fn, box));
  if (!res.report.bound_satisfied) throw VerificationFailure("pruning bound violated");
  return kOk;
}

std::vector<FlatVec> calibration_set(const Mat& x, std::size_t count, std::uint64_t seed) {
  std::vector<FlatVec> calib{flatten(x)};
  Rng rng(seed ^ 0x9e3779b97f4a7c15ULL);
  for (std::size_t i = 1; i < count; ++i) calib.push_back(flatten(rng.normal_mat(x.rows(), x.cols())));
  return calib;
}

int cmd_prune_entries(const Common& c, const std::string& layer_ref, const std::string& mode,
                      std::optional<double> threshold, std::optional<double> pct,
                      std::size_t calib_count, std::ostream& out) {
  io::ModelFile m = io::load_model(c.model);
  apply_scale_root(m, c.scale_root);
  const Mat x0 = model_input(m, c);
  const auto calib = calibration_set(x0, std::max<std::size_t>(calib_count, 1), c.seed);

  Report r("prune-entries");
  r.add("mode", mode);
  bool ok = true;
  if (mode == "entries") {
    const std::size_t idx = resolve_layer(m, layer_ref);
    const Mat x = activation_before(m, idx, x0);
    const LoweredOp op = lower(m.layers[idx], x, false);
    std::vector<double> mags;
    for (double v : op.matrix().data())
      if (v != 0.0) mags.push_back(std::fabs(v));
    const double tau = resolve_threshold(threshold, pct, mags.empty() ? std::vector<double>{0.0} : mags);
    const EntryPruneResult res = prune_entries(op, tau, calib);
    if (!c.out.empty()) io::write_json(c.out, io::lowered_to_json(res.pruned, density_report(res.pruned)));
    r.add("layer", m.layers[idx].name);
    if (pct) r.add("percentile", *pct);
    r.add("threshold", tau);
    r.add("zeroed", res.report.zeroed);
    r.add("nnz_before", res.report.nnz_before);
    r.add("nnz_after", res.report.nnz_after);
    r.add("diff_norm_inf", res.report.diff_norm);
    r.add("calibration_vectors", calib.size());
    r.add("max_observed_deviation", res.report.max_observed);
    r.add("max_norm_bound", res.report.max_bound);
    r.add("bound_satisfied", res.report.bound_satisfied);
    ok = res.report.bound_satisfied;
  } else if (mode == "layers") {
    // Factors are lowered along the model's own trajectory from x0.
    std::vector<LoweredOp> factors;
    Mat x = x0;
    for (const auto& layer : m.layers) {
      factors.push_back(lower(layer, x, false));
      x = forward(layer, x);
    }
    if (factors.empty()) throw MathError("model has no layers");
    std::vector<double> dists;
    for (const auto& f : factors) dists.push_back(identity_distance(f));
    const double tau = resolve_threshold(threshold, pct, dists);
    const LayerPruneResult res = prune_near_identity(factors, tau, calib);
    if (!c.out.empty()) io::write_json(c.out, io::lowered_to_json(res.composed, density_report(res.composed)));
    r.add("threshold", tau);
    std::string removed;
    for (std::size_t i : res.report.removed) removed += (removed.empty() ? "" : ",") + m.layers[i].name;
    r.add("layers_removed", removed.empty() ? std::string("-") : removed);
    r.add("layers_kept", res.report.kept.size());
    r.add("diff_norm_inf", res.report.diff_norm);
    r.add("max_observed_deviation", res.report.max_observed);
    r.add("bound_satisfied", res.report.bound_satisfied);
    ok = res.report.bound_satisfied;
  } else {
    throw SchemaError("--mode must be 'entries' or 'layers'");
  }
  emit(out, r, c.report);
  if (!ok) throw VerificationFailure("entry pruning bound violated");
  return kOk;
}

// ---- lora ------------------------------------------------------------------

int cmd_lora_merge(const Common& c, const std::vector<std::string>& layers,
                   const std::string& update_path, std::ostream& out) {
  io::ModelFile m = io::load_model(c.model);
  const LowRankUpdate u = io::update_from_json(io::read_json(update_path));
  if (layers.empty()) throw SchemaError("at least one --layer is required");
  if (c.out.empty()) throw SchemaError("--out is required");
  Report r("lora-merge");
  for (const auto& ref : layers) {
    const std::size_t idx = resolve_layer(m, ref);
    auto* lin = std::get_if<LinearLayer>(&m.layers[idx].body);
    if (lin == nullptr) throw ShapeError("layer '" + ref + "' is not a linear layer");
    const Mat before = lin->w;
    lin->w = merge(lin->w, u);
    m.layers[idx].lowering_cache.reset();
    r.add("merged_layer", m.layers[idx].name);
    r.add("max_weight_change", sup_norm_diff(lin->w, before));
    r.add("lowered_amendment_discrepancy", lowered_amendment(before, u, m.n_cols));
  }
  r.add("rank", u.rank());
  r.add("scale", u.scale);
  io::save_model(c.out, m);
  r.add("out", c.out);
  emit(out, r, c.report);
  return kOk;
}

int cmd_lora_fit(const Common& c, const std::string& layer_ref, const std::string& target_model,
                 std::size_t rank, std::size_t iters, std::size_t samples, std::ostream& out) {
  const io::ModelFile base = io::load_model(c.model);
  const io::ModelFile tuned = io::load_model(target_model);
  const std::size_t idx = resolve_layer(base, layer_ref);
  const auto* lin = std::get_if<LinearLayer>(&base.layers[idx].body);
  if (lin == nullptr) throw ShapeError("layer '" + layer_ref + "' is not a linear layer");
  const std::size_t tidx = resolve_layer(tuned, base.layers[idx].name);
  const auto* tlin = std::get_if<LinearLayer>(&tuned.layers[tidx].body);
  if (tlin == nullptr || tlin->w.rows() != lin->w.rows()) {
    throw ShapeError("target model layer '" + base.layers[idx].name + "' is not a matching linear layer");
  }
  if (c.out.empty()) throw SchemaError("--out is required");

  const std::size_t n = lin->w.rows();
  const std::size_t s = samples == 0 ? 4 * n : samples;
  Rng rng(c.seed);
  const Mat x = rng.normal_mat(n, s);
  const Mat y = matmul(tlin->w, x);
  const AlsResult res = fit_als(lin->w, x, y, rank, iters, rng);
  io::write_json(c.out, io::update_to_json(res.update));

  Report r("lora-fit");
  r.add("layer", base.layers[idx].name);
  r.add("rank", rank);
  r.add("samples", s);
  r.add("iterations", res.iterations);
  r.add("initial_objective", res.objective.front());
  r.add("final_objective", res.objective.back());
  r.add("relative_weight_residual",
        frobenius_norm(sub(merge(lin->w, res.update), tlin->w)) / frobenius_norm(tlin->w));
  r.add("out", c.out);
  emit(out, r, c.report);
  if (!c.plot.empty()) {
    std::string table = "half_step\tobjective\n";
    for (std::size_t i = 0; i < res.objective.size(); ++i)
      table += fmt::format("{}\t{}\n", i, res.objective[i]);
    io::write_text(c.plot, table);
  }
  return kOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"uatlab: lower Transformer sublayers to matrix-vector form and analyse them"};
  app.require_subcommand(1);
  std::string kernels = "auto";
  app.add_option("--kernels", kernels, "Kernel backend: auto, scalar, avx2, neon");

  Common c;
  std::string layer = "0";
  std::vector<std::string> layers;
  std::string target = "sin";
  std::string sum_path;
  std::string update_path;
  std::string target_model;
  std::string mode = "entries";
  double tol = 1e-9;
  double ridge = 1e-10;
  std::optional<double> threshold;
  std::optional<double> pct;
  std::optional<double> weight_scale;
  std::size_t terms = 32;
  std::size_t resolution = 0;
  std::size_t rank = 1;
  std::size_t iters = 50;
  std::size_t samples = 0;
  std::size_t calib = 20;

  auto add_model_opts = [&](CLI::App* sub, bool with_layer) {
    sub->add_option("--model", c.model, "Model file (JSON)")->required();
    sub->add_option("--input", c.input, "Input activation file; random from --seed if omitted");
    sub->add_option("--seed", c.seed, "Seed for generated inputs");
    sub->add_option("--scale-root", c.scale_root, "Attention logit scale: M or d")
        ->check(CLI::IsMember({"M", "d"}));
    if (with_layer) sub->add_option("--layer", layer, "Layer name or index");
  };
  auto add_out = [&](CLI::App* sub) {
    sub->add_option("--out", c.out, "Output file");
    sub->add_option("--report", c.report, "Also write the text report here");
  };

  auto* lower_cmd = app.add_subcommand("lower", "Dump a layer's lowered operator and density report");
  add_model_opts(lower_cmd, true);
  add_out(lower_cmd);
  lower_cmd->add_option("--threshold", threshold, "Density threshold (default 0)");

  auto* density_cmd = app.add_subcommand("density", "Density report of a layer's lowered operator");
  add_model_opts(density_cmd, true);
  add_out(density_cmd);
  density_cmd->add_option("--threshold", threshold, "Density threshold (default 0)");

  auto* verify_cmd = app.add_subcommand("verify", "Check every lowered layer against its forward pass");
  add_model_opts(verify_cmd, false);
  verify_cmd->add_option("--tol", tol, "Relative sup-norm tolerance");

  auto* fit_cmd = app.add_subcommand("uat-fit", "Fit a random-feature sigmoidal sum to a target");
  fit_cmd->add_option("--target", target, "Target name");
  fit_cmd->add_option("--terms", terms, "Number of sigmoid terms N")->check(CLI::PositiveNumber);
  fit_cmd->add_option("--seed", c.seed, "Feature seed");
  fit_cmd->add_option("--ridge", ridge, "Ridge penalty");
  fit_cmd->add_option("--resolution", resolution, "Grid points per dimension");
  fit_cmd->add_option("--weight-scale", weight_scale, "Weight half-width on a unit box");
  fit_cmd->add_option("--plot", c.plot, "Write plot data (TSV)");
  add_out(fit_cmd);

  auto* err_cmd = app.add_subcommand("uat-error", "Grid sup error of a saved sum against a target");
  err_cmd->add_option("--sum", sum_path, "Sigmoidal sum file")->required();
  err_cmd->add_option("--target", target, "Target name");
  err_cmd->add_option("--resolution", resolution, "Grid points per dimension");
  err_cmd->add_option("--plot", c.plot, "Write plot data (TSV)");
  err_cmd->add_option("--report", c.report, "Also write the text report here");

  auto* pt_cmd = app.add_subcommand("prune-terms", "Prune low-contribution terms of a saved sum");
  pt_cmd->add_option("--sum", sum_path, "Sigmoidal sum file")->required();
  pt_cmd->add_option("--target", target, "Target name");
  pt_cmd->add_option("--threshold", threshold, "Absolute score threshold");
  pt_cmd->add_option("--percentile", pct, "Threshold at this percentile of scores")
      ->check(CLI::Range(0.0, 100.0));
  pt_cmd->add_option("--resolution", resolution, "Grid points per dimension");
  pt_cmd->add_option("--plot", c.plot, "Write plot data (TSV)");
  add_out(pt_cmd);

  auto* pe_cmd = app.add_subcommand("prune-entries", "Prune small entries of a lowered layer");
  add_model_opts(pe_cmd, true);
  add_out(pe_cmd);
  pe_cmd->add_option("--threshold", threshold, "Absolute magnitude threshold");
  pe_cmd->add_option("--percentile", pct, "Threshold at this percentile of |entries|")
      ->check(CLI::Range(0.0, 100.0));
  pe_cmd->add_option("--calib", calib, "Number of calibration vectors");
  pe_cmd->add_option("--mode", mode, "entries, or layers (drop near-identity factors)")
      ->check(CLI::IsMember({"entries", "layers"}));

  auto* merge_cmd = app.add_subcommand("lora-merge", "Merge a low-rank update into linear layers");
  merge_cmd->add_option("--model", c.model, "Model file")->required();
  merge_cmd->add_option("--update", update_path, "Update file")->required();
  merge_cmd->add_option("--layer", layers, "Target layer (repeatable)")->required();
  add_out(merge_cmd);

  auto* lfit_cmd = app.add_subcommand("lora-fit", "Fit a low-rank update by alternating least squares");
  lfit_cmd->add_option("--model", c.model, "Base model file")->required();
  lfit_cmd->add_option("--target-model", target_model, "Model holding the tuned weights")->required();
  lfit_cmd->add_option("--layer", layer, "Layer name or index");
  lfit_cmd->add_option("--rank", rank, "Update rank r");
  lfit_cmd->add_option("--iters", iters, "Maximum ALS iterations");
  lfit_cmd->add_option("--samples", samples, "Sample count (default 4N)");
  lfit_cmd->add_option("--seed", c.seed, "Seed for samples and initialization");
  lfit_cmd->add_option("--plot", c.plot, "Write the objective trace (TSV)");
  add_out(lfit_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kSchemaError;
  }

  try {
    if (kernels != "auto") kernels::set_backend(kernels::parse_backend(kernels));
    if (*lower_cmd) return cmd_lower(c, layer, threshold.value_or(0.0), false, out);
    if (*density_cmd) return cmd_lower(c, layer, threshold.value_or(0.0), true, out);
    if (*verify_cmd) return cmd_verify(c, tol, out);
    if (*fit_cmd) return cmd_uat_fit(c, target, terms, ridge, resolution, weight_scale, out);
    if (*err_cmd) return cmd_uat_error(c, sum_path, target, resolution, out);
    if (*pt_cmd) return cmd_prune_terms(c, sum_path, target, threshold, pct, resolution, out);
    if (*pe_cmd) return cmd_prune_entries(c, layer, mode, threshold, pct, calib, out);
    if (*merge_cmd) return cmd_lora_merge(c, layers, update_path, out);
    if (*lfit_cmd) return cmd_lora_fit(c, layer, target_model, rank, iters, samples, out);
  } catch (const VerificationFailure& e) {
    err << "verification failed: " << e.what() << "\n";
    return kVerificationFailed;
  } catch (const SchemaError& e) {
    err << "schema error: " << e.what() << "\n";
    return kSchemaError;
  } catch (const ShapeError& e) {
    err << "shape error: " << e.what() << "\n";
    return kShapeError;
  } catch (const MathError& e) {
    err << "precondition failed: " << e.what() << "\n";
    return kShapeError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kSchemaError;
  }
  return kOk;
}

}  // namespace uatlab::cli
