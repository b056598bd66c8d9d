// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "uatlab/lowering.hpp"
#include "uatlab/uat.hpp"

namespace uatlab {

/// c_j = max over grid points and outputs of |alpha_j[k] sigma(W_j[:,k]^T x + theta_j[k])|.
std::vector<double> score_terms(const SigmoidalSum& g, const DomainBox& box);

/// Linear-interpolated percentile (0..100) of `values`, as in numpy's default.
double percentile(std::span<const double> values, double pct);

struct PruneReport {
  std::vector<std::size_t> kept;    // indices into the original sum
  std::vector<std::size_t> pruned;  // c_j <= threshold
  std::vector<double> scores;
  double threshold = 0.0;
  double pruned_mass = 0.0;  // sum of pruned scores
  double pre_error = 0.0;    // sup error before pruning
  double post_error = 0.0;   // sup error after pruning
  // post_error <= pre_error + pruned_mass (triangle inequality)
  bool bound_satisfied = false;
};

struct PruneResult {
  SigmoidalSum pruned;
  PruneReport report;
};

/// Removes every term with score <= threshold and re-measures the sup error
/// against `target` on `box`. Throws MathError if every term would be removed.
PruneResult prune_terms(const SigmoidalSum& g, std::span<const double> scores, double threshold,
                        const TargetFn& target, const DomainBox& box);

struct CalibrationDeviation {
  double observed = 0.0;  // ||(A - A~) x'||_inf
  double bound = 0.0;     // ||A - A~||_inf * ||x'||_inf
  double rounding = 0.0;  // allowance for floating-point error in observed
  bool within_bound() const { return observed <= bound + rounding; }
};

struct EntryPruneReport {
  double threshold = 0.0;
  std::size_t zeroed = 0;  // nonzero entries set to zero
  std::size_t nnz_before = 0;
  std::size_t nnz_after = 0;
  double diff_norm = 0.0;  // induced infinity norm of A - A~
  std::vector<CalibrationDeviation> calibration;
  double max_observed = 0.0;
  double max_bound = 0.0;
  bool bound_satisfied = true;
};

struct EntryPruneResult {
  LoweredOp pruned;
  EntryPruneReport report;
};

/// Zeroes entries with |a_ij| <= threshold and checks the induced-norm
/// deviation bound on each calibration vector.
EntryPruneResult prune_entries(const LoweredOp& op, double threshold,
                               std::span<const FlatVec> calib);

/// ||A - I||_inf (induced row-sum norm).
double identity_distance(const LoweredOp& op);

struct LayerPruneReport {
  std::vector<double> scores;  // identity_distance per factor
  std::vector<std::size_t> kept;
  std::vector<std::size_t> removed;
  double threshold = 0.0;
  double diff_norm = 0.0;  // ||P - P~||_inf for the composed products
  std::vector<CalibrationDeviation> calibration;
  double max_observed = 0.0;
  bool bound_satisfied = true;
};

struct LayerPruneResult {
  LoweredOp composed;  // product of kept factors (identity if none kept)
  LayerPruneReport report;
};

/// Drops factors whose distance from the identity is <= threshold. `factors`
/// are listed in application order (factors[0] is applied first).
LayerPruneResult prune_near_identity(std::span<const LoweredOp> factors, double threshold,
                                     std::span<const FlatVec> calib);

}  // namespace uatlab
