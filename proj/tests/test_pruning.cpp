// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "uatlab/errors.hpp"
#include "uatlab/pruning.hpp"

using namespace uatlab;

namespace {

SigmoidTerm term1(double w, double theta, double alpha) { return {Mat(1, 1, w), {theta}, {alpha}}; }

std::vector<FlatVec> calibration(std::size_t n, std::size_t m, std::size_t count, Rng& rng) {
  std::vector<FlatVec> out;
  for (std::size_t i = 0; i < count; ++i) out.push_back(flatten(rng.normal_mat(n, m)));
  return out;
}

}  // namespace

TEST_CASE("score examples") {
  const DomainBox box = DomainBox::unit(1, 16);
  const SigmoidalSum g{1, 1, {term1(2.0, 1.0, 0.0), term1(0.0, 0.0, 1.0)}};
  const auto s = score_terms(g, box);
  CHECK(s[0] == 0.0);
  CHECK(s[1] == 0.5);
}

TEST_CASE("scores match a brute-force sweep") {
  Rng rng(61);
  const Target& t = find_target("product-sin-2d");
  DomainBox box = t.box;
  box.resolution = {20, 20};
  const SigmoidalSum g = fit_random_features(t.fn, 1, box, 10, 1e-8, rng);
  const auto s = score_terms(g, box);
  for (std::size_t j = 0; j < g.n_terms(); ++j) {
    double worst = 0.0;
    for (std::size_t i = 0; i < box.point_count(); ++i) {
      const auto p = box.point(i);
      const double pre = g.terms[j].weights(0, 0) * p[0] + g.terms[j].weights(1, 0) * p[1] + g.terms[j].bias[0];
      worst = std::max(worst, std::fabs(g.terms[j].alpha[0] / (1.0 + std::exp(-pre))));
    }
    CHECK(s[j] == doctest::Approx(worst).epsilon(1e-14));
  }
}

TEST_CASE("percentile interpolates linearly") {
  const std::vector<double> v{4.0, 1.0, 3.0, 2.0};
  CHECK(percentile(v, 0) == 1.0);
  CHECK(percentile(v, 100) == 4.0);
  CHECK(percentile(v, 50) == 2.5);
  CHECK(percentile(v, 25) == 1.75);
  CHECK_THROWS_AS(percentile(v, 101), MathError);
}

TEST_CASE("zero threshold with positive scores prunes nothing") {
  Rng rng(62);
  const Target& t = find_target("sin");
  const SigmoidalSum g = fit_random_features(t.fn, 1, t.box, 16, 1e-10, rng);
  const auto scores = score_terms(g, t.box);
  const PruneResult r = prune_terms(g, scores, 0.0, t.fn, t.box);
  CHECK(r.report.pruned.empty());
  CHECK(r.report.post_error == r.report.pre_error);
  CHECK(r.report.bound_satisfied);
}

TEST_CASE("appended zero terms prune without changing outputs") {
  Rng rng(63);
  const Target& t = find_target("step-smooth");
  const SigmoidalSum g = fit_random_features(t.fn, 1, t.box, 12, 1e-10, rng);
  SigmoidalSum padded = g;
  for (int k = 0; k < 5; ++k) padded.terms.push_back(term1(rng.normal(), rng.normal(), 0.0));
  const auto scores = score_terms(padded, t.box);
  const double tau = std::nextafter(0.0, 1.0);
  const PruneResult r = prune_terms(padded, scores, tau, t.fn, t.box);
  CHECK(r.report.pruned == std::vector<std::size_t>{12, 13, 14, 15, 16});
  CHECK(r.report.pruned_mass == 0.0);
  CHECK(eval_grid(r.pruned, t.box) == eval_grid(g, t.box));
}

TEST_CASE("quartile pruning of the sin fit") {
  const Target& t = find_target("sin");
  Rng rng(7);
  const SigmoidalSum g = fit_random_features(t.fn, 1, t.box, 128, 1e-10, rng);
  const auto scores = score_terms(g, t.box);
  const PruneResult r = prune_terms(g, scores, percentile(scores, 25), t.fn, t.box);
  CHECK(r.report.pruned.size() == 32);
  CHECK(r.report.post_error <= r.report.pre_error + r.report.pruned_mass);
  CHECK(r.report.bound_satisfied);
  CHECK(r.report.post_error == doctest::Approx(0.0095528675818491449).epsilon(1e-6));
}

TEST_CASE("bound holds over randomized configurations") {
  Rng rng(64);
  const std::vector<std::string> names = target_names();
  std::size_t runs = 0;
  for (int cfg = 0; cfg < 36; ++cfg) {
    const Target& t = find_target(names[cfg % names.size()]);
    DomainBox box = t.box;
    for (auto& r : box.resolution) r = std::min<std::size_t>(r, 48);
    const std::size_t n = 4 + rng.index(60);
    const SigmoidalSum g = fit_random_features(t.fn, t.output_dim, box, n, 1e-8, rng);
    const auto scores = score_terms(g, box);
    const double tau = percentile(scores, rng.uniform(0.0, 90.0));
    const PruneResult r = prune_terms(g, scores, tau, t.fn, box);
    CHECK(r.report.bound_satisfied);
    CHECK(r.report.post_error <= r.report.pre_error + r.report.pruned_mass);
    CHECK(r.report.kept.size() + r.report.pruned.size() == n);
    ++runs;
  }
  CHECK(runs >= 30);
}

TEST_CASE("pruning is monotone and idempotent") {
  Rng rng(65);
  const Target& t = find_target("gaussian-bump");
  const SigmoidalSum g = fit_random_features(t.fn, 1, t.box, 40, 1e-10, rng);
  const auto scores = score_terms(g, t.box);
  std::size_t prev = 0;
  for (double pct : {0.0, 10.0, 30.0, 50.0, 70.0, 90.0}) {
    const double tau = percentile(scores, pct);
    const PruneResult once = prune_terms(g, scores, tau, t.fn, t.box);
    CHECK(once.report.pruned.size() >= prev);
    prev = once.report.pruned.size();
    const PruneResult twice =
        prune_terms(once.pruned, score_terms(once.pruned, t.box), tau, t.fn, t.box);
    CHECK(twice.report.pruned.empty());
    CHECK(eval_grid(twice.pruned, t.box) == eval_grid(once.pruned, t.box));
  }
}

TEST_CASE("pruning every term is an error") {
  const DomainBox box = DomainBox::unit(1, 8);
  const SigmoidalSum g{1, 1, {term1(1.0, 0.0, 1.0)}};
  const TargetFn f = [](std::span<const double>) { return std::vector<double>{0.0}; };
  CHECK_THROWS_AS(prune_terms(g, score_terms(g, box), 1.0, f, box), MathError);
  CHECK_THROWS_AS(prune_terms(g, score_terms(g, box), -1.0, f, box), MathError);
}

TEST_CASE("entry pruning examples") {
  Rng rng(66);
  const auto calib = calibration(3, 2, 5, rng);
  const LoweredOp lin = lower_linear(rng.normal_mat(3, 3), 2);
  const EntryPruneResult zero = prune_entries(lin, 0.0, calib);
  CHECK(zero.pruned.matrix() == lin.matrix());
  CHECK(zero.report.zeroed == 0);
  const EntryPruneResult id = prune_entries(identity_op(3, 2), 0.5, calib);
  CHECK(id.pruned.matrix() == Mat::identity(6));
}

TEST_CASE("entry pruning respects the induced-norm bound") {
  Rng rng(67);
  for (int t = 0; t < 10; ++t) {
    const MhaParams p = MhaParams::random(2, 4, rng);
    const Mat x = rng.normal_mat(3, 4);
    const LoweredOp op = lower_mha(x, p);
    std::vector<double> mags;
    for (double v : op.matrix().data()) mags.push_back(std::fabs(v));
    const auto calib = calibration(3, 4, 20, rng);
    for (double pct : {1.0, 25.0, 60.0}) {
      const EntryPruneResult r = prune_entries(op, percentile(mags, pct), calib);
      CHECK(r.report.bound_satisfied);
      CHECK(r.report.calibration.size() == 20);
      for (const auto& c : r.report.calibration) {
        CHECK(c.within_bound());
        CHECK(c.rounding <= 1e-12 * std::max(1.0, c.bound));
      }
      CHECK(r.report.nnz_after + r.report.zeroed == r.report.nnz_before);
      CHECK(r.report.diff_norm == max_row_abs_sum(sub(op.matrix(), r.pruned.matrix())));
    }
  }
}

TEST_CASE("near-identity factors are removed") {
  Rng rng(68);
  Mat near = Mat::identity(3);
  near(0, 1) = 1e-4;
  const Mat far = rng.normal_mat(3, 3);
  const std::vector<LoweredOp> factors{lower_linear(near, 2), lower_linear(far, 2)};
  CHECK(identity_distance(factors[0]) == doctest::Approx(1e-4));
  const auto calib = calibration(3, 2, 8, rng);
  const LayerPruneResult r = prune_near_identity(factors, 1e-3, calib);
  CHECK(r.report.removed == std::vector<std::size_t>{0});
  CHECK(r.report.kept == std::vector<std::size_t>{1});
  CHECK(r.composed.matrix() == factors[1].matrix());
  CHECK(r.report.bound_satisfied);
  const LayerPruneResult none = prune_near_identity(factors, 0.0, calib);
  CHECK(none.report.removed.empty());
  CHECK(none.report.max_observed == 0.0);
  const LayerPruneResult all = prune_near_identity(factors, 1e9, calib);
  CHECK(all.composed.matrix() == Mat::identity(6));
}
