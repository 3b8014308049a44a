// Copyright 2026 The Wideflow Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef WIDEFLOW_GAUSS_HERMITE_HPP_
#define WIDEFLOW_GAUSS_HERMITE_HPP_

// Hermite polynomials and Gaussian expectations by quadrature.
//
// Two rule families are provided. make_rule() builds the classical
// Gauss-Hermite rule for the standard normal weight; it is exact on
// polynomials and is what the Mehler identity checks run on. Activation
// functions with kinks (ReLU) or steep transitions (tanh(4z)) converge only
// algebraically under Gauss-Hermite, so expectations of activations use
// make_panel_rule(): composite Gauss-Legendre panels on [-span, span] against
// the Gaussian density, split exactly at the activation's breakpoints.

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "error.hpp"

namespace wideflow::gauss {

inline constexpr int kDefaultOrder = 128;
inline constexpr int kDefaultMaxOrder = 512;

/// Probabilists' Hermite polynomial He_n(x) by the three-term recurrence.
double hermite_eval(int n, double x);

/// Fills out[j] = He_j(x) / sqrt(j!) for j = 0..out.size()-1. The normalized
/// family stays bounded where He_n itself would overflow.
void hermite_normalized(double x, std::span<double> out);

double factorial(int n);

/// Off-diagonal entry of the unit-diagonal 2x2 covariance [[1,k],[k,1]].
class CorrelationCoefficient {
 public:
  explicit CorrelationCoefficient(double k);

  double value() const noexcept { return k_; }
  /// sqrt(1 - k^2); exactly 0 at |k| = 1.
  double complement() const noexcept { return complement_; }

 private:
  double k_;
  double complement_;
};

/// <He_n(z1) He_m(z2)> under unit-diagonal covariance with correlation k:
/// delta_nm * n! * k^n.
double mehler_moment(int n, int m, CorrelationCoefficient k);

/// Nodes and probability-normalized weights for the standard Gaussian.
struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;

  std::size_t order() const noexcept { return nodes.size(); }
};

/// Gauss-Hermite rule with `order` nodes, exact for polynomials of degree
/// <= 2*order-1. Throws a validation error when order is outside
/// [1, max_order].
QuadratureRule make_rule(int order, int max_order = kDefaultMaxOrder);

/// Resolution settings for panel rules. `order` follows the Gauss-Hermite
/// convention used elsewhere (64, 128, 256...); each panel receives
/// order/8 Gauss-Legendre points.
struct PanelOptions {
  int order = kDefaultOrder;
  double span = 12.0;
  double panel_width = 0.5;

  int points_per_panel() const;
};

/// Composite Gauss-Legendre rule against the standard normal density on
/// [-span, span]. Panel edges include every breakpoint inside the span, so
/// integrands that are smooth between breakpoints converge geometrically.
QuadratureRule make_panel_rule(const PanelOptions& options,
                               std::span<const double> breakpoints = {});

namespace detail {

// Reusable builder: holds the reference Gauss-Legendre nodes so inner rules
// of 2D integrals can be rebuilt per outer node without recomputing them.
class PanelBuilder {
 public:
  explicit PanelBuilder(const PanelOptions& options);

  void build(std::span<const double> breakpoints, QuadratureRule& out) const;

  const PanelOptions& options() const noexcept { return options_; }

 private:
  PanelOptions options_;
  std::vector<double> ref_nodes_;    // on [-1, 1]
  std::vector<double> ref_weights_;  // sum to 2
  mutable std::vector<double> edges_;
};

[[noreturn]] void report_non_finite(double where_a, double where_b);

inline double gaussian_density(double x) {
  constexpr double kInvSqrt2Pi = 0.39894228040143267794;
  return kInvSqrt2Pi * std::exp(-0.5 * x * x);
}

}  // namespace detail

/// Sum_i weights_i * f(nodes_i). Throws kNonFinite if any evaluation is not
/// finite.
template <class F>
double expect_1d(F&& f, const QuadratureRule& rule) {
  double total = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    const double v = f(rule.nodes[i]);
    if (!std::isfinite(v)) detail::report_non_finite(rule.nodes[i], 0.0);
    total += rule.weights[i] * v;
  }
  return total;
}

/// <f(z1, z2)> for unit Gaussians with correlation k, over the product rule
/// in whitened coordinates: z1 = u1, z2 = k*u1 + sqrt(1-k^2)*u2. No matrix
/// inversion is involved, so |k| = 1 is handled as the degenerate 1D case.
template <class F>
double expect_2d_correlated(F&& f, CorrelationCoefficient k,
                            const QuadratureRule& rule) {
  const double kk = k.value();
  const double s = k.complement();
  double total = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    const double u1 = rule.nodes[i];
    double inner = 0.0;
    for (std::size_t j = 0; j < rule.nodes.size(); ++j) {
      const double z2 = kk * u1 + s * rule.nodes[j];
      const double v = f(u1, z2);
      if (!std::isfinite(v)) detail::report_non_finite(u1, z2);
      inner += rule.weights[j] * v;
    }
    total += rule.weights[i] * inner;
  }
  return total;
}

/// Same expectation over panel rules. The outer rule in z1 is split at
/// `breaks_first`; for each outer node the inner rule in u2 is split where
/// z2 crosses a point of `breaks_second`, so kinks of either factor never
/// fall inside a panel.
template <class F>
double expect_2d_correlated(F&& f, CorrelationCoefficient k,
                            const PanelOptions& options,
                            std::span<const double> breaks_first,
                            std::span<const double> breaks_second) {
  const double kk = k.value();
  const double s = k.complement();
  const detail::PanelBuilder builder(options);
  QuadratureRule outer;
  builder.build(breaks_first, outer);

  QuadratureRule inner;
  std::vector<double> shifted;
  shifted.reserve(breaks_second.size());
  double total = 0.0;
  for (std::size_t i = 0; i < outer.nodes.size(); ++i) {
    const double u1 = outer.nodes[i];
    double inner_sum = 0.0;
    if (s == 0.0) {
      const double z2 = kk * u1;
      inner_sum = f(u1, z2);
      if (!std::isfinite(inner_sum)) detail::report_non_finite(u1, z2);
    } else {
      shifted.clear();
      for (double b : breaks_second) shifted.push_back((b - kk * u1) / s);
      builder.build(shifted, inner);
      for (std::size_t j = 0; j < inner.nodes.size(); ++j) {
        const double z2 = kk * u1 + s * inner.nodes[j];
        const double v = f(u1, z2);
        if (!std::isfinite(v)) detail::report_non_finite(u1, z2);
        inner_sum += inner.weights[j] * v;
      }
    }
    total += outer.weights[i] * inner_sum;
  }
  return total;
}

/// <g1(z1) g2(z2)> over panel rules; evaluates g1 once per outer node.
template <class G1, class G2>
double expect_2d_separable(G1&& g1, G2&& g2, CorrelationCoefficient k,
                           const PanelOptions& options,
                           std::span<const double> breaks_first,
                           std::span<const double> breaks_second) {
  const double kk = k.value();
  const double s = k.complement();
  const detail::PanelBuilder builder(options);
  QuadratureRule outer;
  builder.build(breaks_first, outer);

  QuadratureRule inner;
  std::vector<double> shifted;
  shifted.reserve(breaks_second.size());
  double total = 0.0;
  for (std::size_t i = 0; i < outer.nodes.size(); ++i) {
    const double u1 = outer.nodes[i];
    const double a = g1(u1);
    if (!std::isfinite(a)) detail::report_non_finite(u1, 0.0);
    double inner_sum = 0.0;
    if (s == 0.0) {
      inner_sum = g2(kk * u1);
      if (!std::isfinite(inner_sum)) detail::report_non_finite(u1, kk * u1);
    } else {
      shifted.clear();
      for (double b : breaks_second) shifted.push_back((b - kk * u1) / s);
      builder.build(shifted, inner);
      for (std::size_t j = 0; j < inner.nodes.size(); ++j) {
        const double z2 = kk * u1 + s * inner.nodes[j];
        const double v = g2(z2);
        if (!std::isfinite(v)) detail::report_non_finite(u1, z2);
        inner_sum += inner.weights[j] * v;
      }
    }
    total += outer.weights[i] * a * inner_sum;
  }
  return total;
}

}  // namespace wideflow::gauss

#endif  // WIDEFLOW_GAUSS_HERMITE_HPP_
