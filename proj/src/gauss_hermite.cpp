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

#include "gauss_hermite.hpp"

#include <algorithm>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <boost/math/special_functions/legendre.hpp>

namespace wideflow::gauss {

double hermite_eval(int n, double x) {
  if (n < 0) fail_validation("hermite degree must be non-negative");
  if (n == 0) return 1.0;
  double prev = 1.0;
  double cur = x;
  for (int j = 1; j < n; ++j) {
    const double next = x * cur - j * prev;
    prev = cur;
    cur = next;
  }
  return cur;
}

void hermite_normalized(double x, std::span<double> out) {
  if (out.empty()) return;
  out[0] = 1.0;
  if (out.size() == 1) return;
  out[1] = x;
  for (std::size_t j = 1; j + 1 < out.size(); ++j) {
    const double jd = static_cast<double>(j);
    out[j + 1] = (x * out[j] - std::sqrt(jd) * out[j - 1]) / std::sqrt(jd + 1.0);
  }
}

double factorial(int n) {
  if (n < 0) fail_validation("factorial of a negative number");
  double f = 1.0;
  for (int j = 2; j <= n; ++j) f *= j;
  return f;
}

CorrelationCoefficient::CorrelationCoefficient(double k) : k_(k) {
  if (!(std::abs(k) <= 1.0)) {
    std::ostringstream msg;
    msg << "correlation coefficient " << k << " is outside [-1, 1]";
    fail_validation(msg.str());
  }
  complement_ = std::abs(k) == 1.0 ? 0.0 : std::sqrt((1.0 - k) * (1.0 + k));
}

double mehler_moment(int n, int m, CorrelationCoefficient k) {
  if (n < 0 || m < 0) fail_validation("hermite degree must be non-negative");
  if (n != m) return 0.0;
  return factorial(n) * std::pow(k.value(), n);
}

QuadratureRule make_rule(int order, int max_order) {
  if (order < 1) fail_validation("quadrature order must be at least 1");
  if (order > max_order) {
    std::ostringstream msg;
    msg << "quadrature order " << order << " exceeds the cap " << max_order;
    fail_validation(msg.str());
  }
  QuadratureRule rule;
  if (order == 1) {
    rule.nodes = {0.0};
    rule.weights = {1.0};
    return rule;
  }

  // Golub-Welsch: eigenvalues of the Jacobi matrix give starting nodes.
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(order);
  Eigen::VectorXd sub(order - 1);
  for (int j = 0; j < order - 1; ++j) sub[j] = std::sqrt(static_cast<double>(j + 1));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
  solver.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
  std::vector<double> x(solver.eigenvalues().data(),
                        solver.eigenvalues().data() + order);

  // Newton polish on the orthonormal recurrence, then weights from
  // w = 1 / (n * h_{n-1}(x)^2).
  std::vector<double> h(order + 1);
  std::vector<double> w(order);
  const double n = static_cast<double>(order);
  for (int i = 0; i < order; ++i) {
    double xi = x[i];
    for (int it = 0; it < 8; ++it) {
      hermite_normalized(xi, h);
      const double step = h[order] / (std::sqrt(n) * h[order - 1]);
      xi -= step;
      if (std::abs(step) <= 1e-16 * std::max(1.0, std::abs(xi))) break;
    }
    hermite_normalized(xi, h);
    x[i] = xi;
    w[i] = 1.0 / (n * h[order - 1] * h[order - 1]);
  }

  // Enforce exact mirror symmetry.
  rule.nodes.resize(order);
  rule.weights.resize(order);
  for (int i = 0; i < order; ++i) {
    const int j = order - 1 - i;
    rule.nodes[i] = 0.5 * (x[i] - x[j]);
    rule.weights[i] = 0.5 * (w[i] + w[j]);
  }
  if (order % 2 == 1) rule.nodes[order / 2] = 0.0;
  return rule;
}

int PanelOptions::points_per_panel() const { return std::max(4, order / 8); }

namespace detail {

PanelBuilder::PanelBuilder(const PanelOptions& options) : options_(options) {
  if (options.order < 1 || options.order > kDefaultMaxOrder) {
    std::ostringstream msg;
    msg << "quadrature order " << options.order << " outside [1, "
        << kDefaultMaxOrder << "]";
    fail_validation(msg.str());
  }
  if (!(options.span > 0.0) || !(options.panel_width > 0.0)) {
    fail_validation("panel span and width must be positive");
  }
  const int p = options.points_per_panel();
  const auto positive = boost::math::legendre_p_zeros<double>(p);
  for (auto it = positive.rbegin(); it != positive.rend(); ++it) {
    if (*it != 0.0) ref_nodes_.push_back(-*it);
  }
  for (double t : positive) ref_nodes_.push_back(t);
  ref_weights_.reserve(ref_nodes_.size());
  for (double t : ref_nodes_) {
    const double dp = boost::math::legendre_p_prime(p, t);
    ref_weights_.push_back(2.0 / ((1.0 - t * t) * dp * dp));
  }
}

void PanelBuilder::build(std::span<const double> breakpoints,
                         QuadratureRule& out) const {
  const double span = options_.span;
  const double width = options_.panel_width;
  const auto panels = static_cast<int>(std::ceil(2.0 * span / width - 1e-9));
  edges_.clear();
  for (int j = 0; j <= panels; ++j) {
    edges_.push_back(std::min(span, -span + j * width));
  }
  for (double b : breakpoints) {
    if (b > -span && b < span) edges_.push_back(b);
  }
  std::sort(edges_.begin(), edges_.end());
  // Collapse slivers; a breakpoint wins over the grid edge it lands on.
  std::size_t kept = 0;
  for (std::size_t j = 0; j < edges_.size(); ++j) {
    if (kept > 0 && edges_[j] - edges_[kept - 1] < 1e-10) {
      const bool is_break = std::find(breakpoints.begin(), breakpoints.end(),
                                      edges_[j]) != breakpoints.end();
      if (is_break && kept > 1) edges_[kept - 1] = edges_[j];
      continue;
    }
    edges_[kept++] = edges_[j];
  }
  edges_.resize(kept);

  out.nodes.clear();
  out.weights.clear();
  for (std::size_t j = 0; j + 1 < edges_.size(); ++j) {
    const double mid = 0.5 * (edges_[j] + edges_[j + 1]);
    const double half = 0.5 * (edges_[j + 1] - edges_[j]);
    for (std::size_t q = 0; q < ref_nodes_.size(); ++q) {
      const double xq = mid + half * ref_nodes_[q];
      out.nodes.push_back(xq);
      out.weights.push_back(half * ref_weights_[q] * gaussian_density(xq));
    }
  }
}

void report_non_finite(double where_a, double where_b) {
  std::ostringstream msg;
  msg << "integrand is not finite at (" << where_a << ", " << where_b << ")";
  fail_non_finite(msg.str());
}

}  // namespace detail

QuadratureRule make_panel_rule(const PanelOptions& options,
                               std::span<const double> breakpoints) {
  const detail::PanelBuilder builder(options);
  QuadratureRule rule;
  builder.build(breakpoints, rule);
  return rule;
}

}  // namespace wideflow::gauss
