// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "uatlab/matcore.hpp"
#include "uatlab/rng.hpp"

namespace uatlab {

/// One term alpha_j (.) sigma(W_j^T x + theta_j) of a sigmoidal sum.
/// `weights` is n x m: column k feeds output k. bias and alpha have length m.
struct SigmoidTerm {
  Mat weights;
  std::vector<double> bias;
  std::vector<double> alpha;
};

/// G(x) = sum_j alpha_j (.) sigma(W_j^T x + theta_j), mapping R^n to R^m.
/// Output k only uses column k of each W_j, bias[k] and alpha[k]; with m = 1
/// this is the classic single-output form.
struct SigmoidalSum {
  std::size_t input_dim = 0;
  std::size_t output_dim = 0;
  std::vector<SigmoidTerm> terms;

  std::size_t n_terms() const { return terms.size(); }
  void validate() const;
};

/// Axis-aligned box with an evaluation grid of `resolution[d]` evenly spaced
/// points per dimension (endpoints included).
struct DomainBox {
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<std::size_t> resolution;

  static DomainBox unit(std::size_t dims, std::size_t resolution);

  std::size_t dims() const { return lower.size(); }
  std::size_t point_count() const;
  /// Grid point `index` (first dimension varies slowest).
  std::vector<double> point(std::size_t index) const;
  void validate() const;
};

/// Vector-valued target on a box.
using TargetFn = std::function<std::vector<double>(std::span<const double>)>;

struct Target {
  std::string name;
  std::size_t input_dim = 1;
  std::size_t output_dim = 1;
  DomainBox box;
  TargetFn fn;
};

/// Built-in targets: sin, step-smooth, gaussian-bump, piecewise-linear,
/// product-sin-2d, product-bump-2d. Throws SchemaError for unknown names.
const Target& find_target(const std::string& name);
std::vector<std::string> target_names();

std::vector<double> eval_sum(const SigmoidalSum& g, std::span<const double> x);

/// Output k of term j at x (no alpha).
double term_activation(const SigmoidTerm& t, std::size_t k, std::span<const double> x);

struct FitOptions {
  /// Half-width s of the uniform weight distribution on a unit-width box.
  /// Defaults to 4 * N^(1/n).
  std::optional<double> weight_scale;
};

/// Weight scale used when FitOptions::weight_scale is unset.
double default_weight_scale(std::size_t n_terms, std::size_t input_dim);

/// Samples n_terms random features with zero alpha. W entries are uniform on
/// [-s, s] / width_d; theta is uniform over minus the range of W^T x on the
/// box, so every sigmoid transition lies inside the box. Draws are made term
/// by term, so with a fixed scale the features for N are a prefix of those
/// for any larger N under the same seed.
SigmoidalSum sample_features(std::size_t n_terms, std::size_t output_dim, const DomainBox& box,
                             Rng& rng, const FitOptions& options = {});

/// Solves alpha for fixed features by ridge least squares on the grid.
SigmoidalSum fit_output_weights(SigmoidalSum features, const TargetFn& target,
                                const DomainBox& box, double ridge);

SigmoidalSum fit_random_features(const TargetFn& target, std::size_t output_dim,
                                 const DomainBox& box, std::size_t n_terms, double ridge,
                                 Rng& rng, const FitOptions& options = {});

/// max over grid points and outputs of |G - f|. A lower bound on the true sup.
double sup_error(const SigmoidalSum& g, const TargetFn& target, const DomainBox& box);

/// Root mean square of G - f over grid points and outputs.
double grid_rmse(const SigmoidalSum& g, const TargetFn& target, const DomainBox& box);

/// G evaluated at every grid point: point_count x m.
Mat eval_grid(const SigmoidalSum& g, const DomainBox& box);

}  // namespace uatlab
