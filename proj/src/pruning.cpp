// SPDX-License-Identifier: Apache-2.0

#include "uatlab/pruning.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "uatlab/errors.hpp"
#include "uatlab/kernels.hpp"

namespace uatlab {
namespace {

void require_threshold(double threshold) {
  if (!(threshold >= 0.0) || std::isnan(threshold)) {
    throw MathError("pruning threshold must be >= 0");
  }
}

// Both outputs carry up to gamma_n ||A||_inf ||x||_inf of rounding error, so
// the comparison with the exact bound allows for it.
CalibrationDeviation deviation(const LoweredOp& full, const LoweredOp& reduced, double diff_norm,
                               const FlatVec& x) {
  const auto y_full = full.apply(x);
  const auto y_reduced = reduced.apply(x);
  const double x_norm = kernels::max_abs(x.data);
  const double gamma = static_cast<double>(x.size() + 2) * std::numeric_limits<double>::epsilon();
  const double norms = max_row_abs_sum(full.matrix()) + max_row_abs_sum(reduced.matrix()) + diff_norm;
  return {kernels::max_abs_diff(y_full.data, y_reduced.data), diff_norm * x_norm,
          gamma * norms * x_norm};
}

LoweredOp product(std::span<const LoweredOp> factors, std::span<const std::size_t> which,
                  std::size_t n_rows, std::size_t n_cols) {
  LoweredOp acc = identity_op(n_rows, n_cols);
  bool first = true;
  for (std::size_t i : which) {
    if (first) {
      acc = factors[i];
      first = false;
    } else {
      acc = compose(factors[i], acc);
    }
  }
  return acc;
}

}  // namespace

std::vector<double> score_terms(const SigmoidalSum& g, const DomainBox& box) {
  g.validate();
  box.validate();
  if (box.dims() != g.input_dim) throw ShapeError("score_terms: box dimension mismatch");
  std::vector<double> scores(g.n_terms(), 0.0);
  for (std::size_t p = 0; p < box.point_count(); ++p) {
    const auto x = box.point(p);
    for (std::size_t j = 0; j < g.n_terms(); ++j) {
      const auto& t = g.terms[j];
      for (std::size_t k = 0; k < g.output_dim; ++k) {
        scores[j] = std::max(scores[j], std::fabs(t.alpha[k] * term_activation(t, k, x)));
      }
    }
  }
  return scores;
}

double percentile(std::span<const double> values, double pct) {
  if (values.empty()) throw MathError("percentile of an empty set");
  if (!(pct >= 0.0 && pct <= 100.0)) throw MathError("percentile must lie in [0, 100]");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double pos = pct / 100.0 * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

PruneResult prune_terms(const SigmoidalSum& g, std::span<const double> scores, double threshold,
                        const TargetFn& target, const DomainBox& box) {
  require_threshold(threshold);
  g.validate();
  if (scores.size() != g.n_terms()) {
    throw ShapeError("prune_terms: " + std::to_string(scores.size()) + " scores for " +
                     std::to_string(g.n_terms()) + " terms");
  }
  PruneReport rep;
  rep.threshold = threshold;
  rep.scores.assign(scores.begin(), scores.end());
  SigmoidalSum pruned{g.input_dim, g.output_dim, {}};
  for (std::size_t j = 0; j < g.n_terms(); ++j) {
    if (scores[j] <= threshold) {
      rep.pruned.push_back(j);
      rep.pruned_mass += scores[j];
    } else {
      rep.kept.push_back(j);
      pruned.terms.push_back(g.terms[j]);
    }
  }
  if (pruned.terms.empty()) {
    throw MathError("prune_terms: threshold " + std::to_string(threshold) +
                    " removes every term, leaving an empty model");
  }
  rep.pre_error = sup_error(g, target, box);
  rep.post_error = sup_error(pruned, target, box);
  rep.bound_satisfied = rep.post_error <= rep.pre_error + rep.pruned_mass;
  return {std::move(pruned), std::move(rep)};
}

EntryPruneResult prune_entries(const LoweredOp& op, double threshold,
                               std::span<const FlatVec> calib) {
  require_threshold(threshold);
  Mat reduced = op.matrix();
  EntryPruneReport rep;
  rep.threshold = threshold;
  rep.nnz_before = op.nnz();
  for (double& v : reduced.data()) {
    if (v != 0.0 && std::fabs(v) <= threshold) {
      v = 0.0;
      ++rep.zeroed;
    }
  }
  LoweredOp pruned(std::move(reduced), op.n_rows(), op.n_cols(), op.kind());
  rep.nnz_after = pruned.nnz();
  rep.diff_norm = max_row_abs_sum(sub(op.matrix(), pruned.matrix()));
  for (const FlatVec& x : calib) {
    const auto dev = deviation(op, pruned, rep.diff_norm, x);
    rep.calibration.push_back(dev);
    rep.max_observed = std::max(rep.max_observed, dev.observed);
    rep.max_bound = std::max(rep.max_bound, dev.bound);
    rep.bound_satisfied = rep.bound_satisfied && dev.within_bound();
  }
  return {std::move(pruned), std::move(rep)};
}

double identity_distance(const LoweredOp& op) {
  return max_row_abs_sum(sub(op.matrix(), Mat::identity(op.size())));
}

LayerPruneResult prune_near_identity(std::span<const LoweredOp> factors, double threshold,
                                     std::span<const FlatVec> calib) {
  require_threshold(threshold);
  if (factors.empty()) throw MathError("prune_near_identity: no factors");
  const std::size_t n_rows = factors.front().n_rows();
  const std::size_t n_cols = factors.front().n_cols();
  LayerPruneReport rep;
  rep.threshold = threshold;
  std::vector<std::size_t> all;
  for (std::size_t i = 0; i < factors.size(); ++i) {
    all.push_back(i);
    rep.scores.push_back(identity_distance(factors[i]));
    (rep.scores.back() <= threshold ? rep.removed : rep.kept).push_back(i);
  }
  const LoweredOp full = product(factors, all, n_rows, n_cols);
  LoweredOp reduced = product(factors, rep.kept, n_rows, n_cols);
  rep.diff_norm = max_row_abs_sum(sub(full.matrix(), reduced.matrix()));
  for (const FlatVec& x : calib) {
    const auto dev = deviation(full, reduced, rep.diff_norm, x);
    rep.calibration.push_back(dev);
    rep.max_observed = std::max(rep.max_observed, dev.observed);
    rep.bound_satisfied = rep.bound_satisfied && dev.within_bound();
  }
  return {std::move(reduced), std::move(rep)};
}

}  // namespace uatlab
