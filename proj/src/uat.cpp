// SPDX-License-Identifier: Apache-2.0

#include "uatlab/uat.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <string>

#include "uatlab/errors.hpp"
#include "uatlab/kernels.hpp"
#include "uatlab/linsolve.hpp"

namespace uatlab {
namespace {

void require_dim(std::size_t got, std::size_t want, const char* what) {
  if (got != want) {
    throw ShapeError(std::string(what) + ": dimension " + std::to_string(got) + ", expected " +
                     std::to_string(want));
  }
}

std::vector<double> eval_target(const TargetFn& target, std::span<const double> x,
                                std::size_t output_dim) {
  auto y = target(x);
  require_dim(y.size(), output_dim, "target output");
  return y;
}

Target scalar_target(std::string name, std::function<double(double)> f) {
  Target t;
  t.name = std::move(name);
  t.box = DomainBox::unit(1, 512);
  t.fn = [f = std::move(f)](std::span<const double> x) { return std::vector<double>{f(x[0])}; };
  return t;
}

Target product_target(std::string name, std::function<double(double)> f) {
  Target t;
  t.name = std::move(name);
  t.input_dim = 2;
  t.box = DomainBox::unit(2, 64);
  t.fn = [f = std::move(f)](std::span<const double> x) {
    return std::vector<double>{f(x[0]) * f(x[1])};
  };
  return t;
}

std::map<std::string, Target> build_registry() {
  using std::numbers::pi;
  const auto sin2pi = [](double x) { return std::sin(2.0 * pi * x); };
  const auto bump = [](double x) { return std::exp(-(x - 0.5) * (x - 0.5) / (2.0 * 0.1 * 0.1)); };
  std::map<std::string, Target> reg;
  for (Target t : {
           scalar_target("sin", sin2pi),
           scalar_target("step-smooth", [](double x) { return std::tanh(20.0 * (x - 0.5)); }),
           scalar_target("gaussian-bump", bump),
           scalar_target("piecewise-linear",
                         [](double x) { return 1.0 - std::fabs(4.0 * x - 2.0) + 0.5 * x; }),
           product_target("product-sin-2d", sin2pi),
           product_target("product-bump-2d", bump),
       }) {
    reg.emplace(t.name, std::move(t));
  }
  return reg;
}

const std::map<std::string, Target>& registry() {
  static const std::map<std::string, Target> reg = build_registry();
  return reg;
}

}  // namespace

void SigmoidalSum::validate() const {
  if (terms.empty()) throw MathError("sigmoidal sum has no terms");
  if (input_dim == 0 || output_dim == 0) throw ShapeError("sigmoidal sum has zero dimension");
  for (std::size_t j = 0; j < terms.size(); ++j) {
    const auto& t = terms[j];
    if (t.weights.rows() != input_dim || t.weights.cols() != output_dim ||
        t.bias.size() != output_dim || t.alpha.size() != output_dim) {
      throw ShapeError("sigmoidal sum term " + std::to_string(j) + " has weights " +
                       shape_str(t.weights.rows(), t.weights.cols()) + ", bias " +
                       std::to_string(t.bias.size()) + ", alpha " + std::to_string(t.alpha.size()) +
                       "; expected weights " + shape_str(input_dim, output_dim));
    }
    if (!all_finite(t.bias) || !all_finite(t.alpha)) {
      throw MathError("sigmoidal sum term " + std::to_string(j) + " has non-finite parameters");
    }
  }
}

DomainBox DomainBox::unit(std::size_t dims, std::size_t resolution) {
  return DomainBox{std::vector<double>(dims, 0.0), std::vector<double>(dims, 1.0),
                   std::vector<std::size_t>(dims, resolution)};
}

std::size_t DomainBox::point_count() const {
  std::size_t n = 1;
  for (std::size_t r : resolution) n *= r;
  return n;
}

std::vector<double> DomainBox::point(std::size_t index) const {
  std::vector<double> x(dims());
  for (std::size_t d = dims(); d-- > 0;) {
    const std::size_t i = index % resolution[d];
    index /= resolution[d];
    const double t = static_cast<double>(i) / static_cast<double>(resolution[d] - 1);
    x[d] = lower[d] + (upper[d] - lower[d]) * t;
  }
  return x;
}

void DomainBox::validate() const {
  if (dims() == 0) throw ShapeError("domain box has no dimensions");
  if (upper.size() != dims() || resolution.size() != dims()) {
    throw ShapeError("domain box bounds and resolution differ in length");
  }
  for (std::size_t d = 0; d < dims(); ++d) {
    if (!(lower[d] < upper[d])) {
      throw MathError("domain box: lower >= upper in dimension " + std::to_string(d));
    }
    if (resolution[d] < 2) {
      throw MathError("domain box: resolution < 2 in dimension " + std::to_string(d));
    }
  }
}

const Target& find_target(const std::string& name) {
  const auto& reg = registry();
  if (auto it = reg.find(name); it != reg.end()) return it->second;
  std::string known;
  for (const auto& [k, v] : reg) known += (known.empty() ? "" : ", ") + k;
  throw SchemaError("unknown target \"" + name + "\" (known: " + known + ")");
}

std::vector<std::string> target_names() {
  std::vector<std::string> names;
  for (const auto& [k, v] : registry()) names.push_back(k);
  return names;
}

double term_activation(const SigmoidTerm& t, std::size_t k, std::span<const double> x) {
  double pre = t.bias[k];
  for (std::size_t i = 0; i < x.size(); ++i) pre += t.weights(i, k) * x[i];
  return sigmoid(pre);
}

std::vector<double> eval_sum(const SigmoidalSum& g, std::span<const double> x) {
  require_dim(x.size(), g.input_dim, "eval_sum input");
  std::vector<double> out(g.output_dim, 0.0);
  for (const auto& t : g.terms)
    for (std::size_t k = 0; k < g.output_dim; ++k) out[k] += t.alpha[k] * term_activation(t, k, x);
  return out;
}

Mat eval_grid(const SigmoidalSum& g, const DomainBox& box) {
  box.validate();
  require_dim(box.dims(), g.input_dim, "eval_grid box");
  Mat out(box.point_count(), g.output_dim);
  for (std::size_t p = 0; p < box.point_count(); ++p) {
    const auto y = eval_sum(g, box.point(p));
    std::copy(y.begin(), y.end(), out.row(p).begin());
  }
  return out;
}

double default_weight_scale(std::size_t n_terms, std::size_t input_dim) {
  return 4.0 * std::pow(static_cast<double>(n_terms), 1.0 / static_cast<double>(input_dim));
}

SigmoidalSum sample_features(std::size_t n_terms, std::size_t output_dim, const DomainBox& box,
                             Rng& rng, const FitOptions& options) {
  box.validate();
  if (n_terms == 0) throw MathError("sample_features: n_terms must be >= 1");
  if (output_dim == 0) throw ShapeError("sample_features: output_dim must be >= 1");
  const std::size_t n = box.dims();
  const double s = options.weight_scale.value_or(default_weight_scale(n_terms, n));
  if (!(s > 0.0) || !std::isfinite(s)) throw MathError("sample_features: weight scale must be > 0");

  SigmoidalSum g;
  g.input_dim = n;
  g.output_dim = output_dim;
  g.terms.reserve(n_terms);
  for (std::size_t j = 0; j < n_terms; ++j) {
    SigmoidTerm t{Mat(n, output_dim), std::vector<double>(output_dim),
                  std::vector<double>(output_dim, 0.0)};
    for (std::size_t k = 0; k < output_dim; ++k) {
      double lo = 0.0;
      double hi = 0.0;
      for (std::size_t d = 0; d < n; ++d) {
        const double w = rng.uniform(-s, s) / (box.upper[d] - box.lower[d]);
        t.weights(d, k) = w;
        lo += std::min(w * box.lower[d], w * box.upper[d]);
        hi += std::max(w * box.lower[d], w * box.upper[d]);
      }
      t.bias[k] = -rng.uniform(lo, hi);
    }
    g.terms.push_back(std::move(t));
  }
  return g;
}

SigmoidalSum fit_output_weights(SigmoidalSum features, const TargetFn& target,
                                const DomainBox& box, double ridge) {
  features.validate();
  box.validate();
  require_dim(box.dims(), features.input_dim, "fit box");
  const std::size_t points = box.point_count();
  const std::size_t n_terms = features.n_terms();

  std::vector<std::vector<double>> xs(points);
  Mat y(points, features.output_dim);
  for (std::size_t p = 0; p < points; ++p) {
    xs[p] = box.point(p);
    const auto f = eval_target(target, xs[p], features.output_dim);
    std::copy(f.begin(), f.end(), y.row(p).begin());
  }

  for (std::size_t k = 0; k < features.output_dim; ++k) {
    Mat design(points, n_terms);
    Mat rhs(points, 1);
    for (std::size_t p = 0; p < points; ++p) {
      for (std::size_t j = 0; j < n_terms; ++j)
        design(p, j) = term_activation(features.terms[j], k, xs[p]);
      rhs(p, 0) = y(p, k);
    }
    const Mat alpha = least_squares(design, rhs, ridge);
    for (std::size_t j = 0; j < n_terms; ++j) features.terms[j].alpha[k] = alpha(j, 0);
  }
  return features;
}

SigmoidalSum fit_random_features(const TargetFn& target, std::size_t output_dim,
                                 const DomainBox& box, std::size_t n_terms, double ridge,
                                 Rng& rng, const FitOptions& options) {
  if (!(ridge >= 0.0)) throw MathError("fit_random_features: ridge must be >= 0");
  return fit_output_weights(sample_features(n_terms, output_dim, box, rng, options), target, box,
                            ridge);
}

double sup_error(const SigmoidalSum& g, const TargetFn& target, const DomainBox& box) {
  const Mat fitted = eval_grid(g, box);
  Mat expected(fitted.rows(), fitted.cols());
  for (std::size_t p = 0; p < fitted.rows(); ++p) {
    const auto f = eval_target(target, box.point(p), g.output_dim);
    std::copy(f.begin(), f.end(), expected.row(p).begin());
  }
  return sup_norm_diff(fitted, expected);
}

double grid_rmse(const SigmoidalSum& g, const TargetFn& target, const DomainBox& box) {
  const Mat fitted = eval_grid(g, box);
  double acc = 0.0;
  for (std::size_t p = 0; p < fitted.rows(); ++p) {
    const auto f = eval_target(target, box.point(p), g.output_dim);
    for (std::size_t k = 0; k < g.output_dim; ++k) {
      const double e = fitted(p, k) - f[k];
      acc += e * e;
    }
  }
  return std::sqrt(acc / static_cast<double>(fitted.size()));
}

}  // namespace uatlab
