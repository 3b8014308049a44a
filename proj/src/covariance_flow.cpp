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

#include "covariance_flow.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "error.hpp"

namespace wideflow::flow {
namespace {

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Keeps a flow value inside the invariant region. C maps [0,1] into [0,1]
// exactly; quadrature leaves noise of a few ulps around the boundaries.
double settle(double previous, double next) {
  constexpr double kNoise = 1e-12;
  if (next > 1.0) {
    if (next > 1.0 + kNoise) fail_non_finite("covariance map left [-1, 1]");
    return 1.0;
  }
  if (previous >= 0.0 && next < 0.0) {
    if (next < -kNoise) {
      std::ostringstream msg;
      msg << "covariance map sent " << previous << " to " << next
          << "; non-negativity on [0, 1] violated";
      fail_inconclusive(msg.str());
    }
    return 0.0;
  }
  return next;
}

}  // namespace

CriticalHyperparams CriticalHyperparams::for_activation(
    const act::ActivationSpec& spec, const gauss::PanelOptions& options) {
  CriticalHyperparams h;
  h.c_w = 1.0 / act::gaussian_second_moment(spec, options);
  return h;
}

void CriticalHyperparams::check(const act::ActivationSpec& spec) const {
  const double expected = 1.0 / act::gaussian_second_moment(spec);
  if (c_b != 0.0 || c_w_first != 1.0 || std::abs(c_w - expected) > 1e-10) {
    std::ostringstream msg;
    msg << "hyperparameters are not critical for '" << spec.id << "': need c_b = 0, "
        << "c_w_first = 1, c_w = " << format_double(expected);
    fail_validation(msg.str());
  }
}

double initial_covariance(std::span<const double> x1, std::span<const double> x2) {
  if (x1.size() != x2.size()) {
    fail_validation("input vectors have different lengths");
  }
  if (x1.empty()) fail_validation("input vectors are empty");
  const double n0 = static_cast<double>(x1.size());
  double s11 = 0.0, s22 = 0.0, s12 = 0.0;
  for (std::size_t j = 0; j < x1.size(); ++j) {
    s11 += x1[j] * x1[j];
    s22 += x2[j] * x2[j];
    s12 += x1[j] * x2[j];
  }
  if (std::abs(s11 / n0 - 1.0) > 1e-8 || std::abs(s22 / n0 - 1.0) > 1e-8) {
    fail_validation("inputs must satisfy (1/n0) * sum x_i^2 = 1");
  }
  return std::clamp(s12 / n0, -1.0, 1.0);
}

CovarianceMap::CovarianceMap(act::ActivationSpec spec, gauss::PanelOptions options)
    : spec_(std::move(spec)), options_(options), breaks_(spec_.breakpoints()) {
  second_moment_ = raw(1.0);
  if (second_moment_ <= 1e-12) {
    fail_validation("activation '" + spec_.id + "' has degenerate second moment");
  }
}

double CovarianceMap::raw(double k) const {
  return gauss::expect_2d_separable(spec_, spec_, gauss::CorrelationCoefficient(k),
                                    options_, breaks_, breaks_);
}

double CovarianceMap::operator()(double k) const { return raw(k) / second_moment_; }

double CovarianceMap::slope_at_one() const {
  const auto rule = gauss::make_panel_rule(options_, breaks_);
  return gauss::expect_1d(
             [this](double z) {
               const double d = spec_.derivative(z);
               return d * d;
             },
             rule) /
         second_moment_;
}

double cmap_quadrature(double k, const act::ActivationSpec& spec,
                       const gauss::PanelOptions& options) {
  return CovarianceMap(spec, options)(k);
}

double cmap_series(double k, const act::HermiteSeries& series) {
  gauss::CorrelationCoefficient checked(k);
  // Horner in k over the weights a_n^2 n! / <sigma^2>.
  double acc = 0.0;
  for (int n = series.truncation_degree; n >= 0; --n) {
    acc = acc * checked.value() + series.map_weight(n);
  }
  return acc;
}

double cmap_derivative(double k, const act::HermiteSeries& series) {
  gauss::CorrelationCoefficient checked(k);
  double acc = 0.0;
  for (int n = series.truncation_degree; n >= 1; --n) {
    acc = acc * checked.value() + n * series.map_weight(n);
  }
  return acc;
}

std::string_view to_string(FlowClass c) {
  switch (c) {
    case FlowClass::kDecaysToZero: return "DecaysToZero";
    case FlowClass::kConvergesPositive: return "ConvergesPositive";
    case FlowClass::kDegenerateToOne: return "DegenerateToOne";
  }
  return "unknown";
}

FlowReport find_fixed_point(const CovarianceMap& map, const act::HermiteSeries& series) {
  const auto& spec = map.activation();
  FlowReport report;
  report.activation = spec.id;

  // Terms of C'(1) are non-negative and every omitted degree exceeds N, so
  // the partial sum plus (N + 1) times the residual weight is a lower bound.
  double lower = 0.0;
  for (int n = 1; n <= series.truncation_degree; ++n) lower += n * series.map_weight(n);
  lower += (series.truncation_degree + 1) * std::max(0.0, series.residual) /
           series.second_moment;
  report.slope_at_one_lower = lower;

  const auto cls = act::classify(spec, series);
  if (cls == act::ActivationClass::kLinear) {
    fail_validation("activation '" + spec.id +
                    "' is linear: the covariance map is the identity and every k "
                    "is a fixed point");
  }
  if (cls == act::ActivationClass::kAffine) {
    // C(k) = (a^2 k + b^2) / (a^2 + b^2) has its only fixed point at 1.
    report.fixed_point = 1.0;
    report.derivative_at_fp = series.map_weight(1);
    report.slope_at_one = report.derivative_at_fp;
    report.classification = FlowClass::kDegenerateToOne;
    return report;
  }

  constexpr double kSlack = 1e-9;
  // C'(1) = <sigma'^2> / <sigma^2> (Gaussian integration by parts), which
  // stays finite for kinks where the series converges slowly.
  report.slope_at_one = map.slope_at_one();
  if (!std::isfinite(report.slope_at_one)) {
    fail_inconclusive("C'(1) is not finite for '" + spec.id + "'");
  }
  if (lower <= 1.0 + kSlack && report.slope_at_one <= 1.0 + kSlack) {
    report.fixed_point = 1.0;
    report.derivative_at_fp = report.slope_at_one;
    report.classification = FlowClass::kDegenerateToOne;
    return report;
  }
  if (lower > report.slope_at_one + kSlack) {
    std::ostringstream msg;
    msg << "series lower bound " << lower << " on C'(1) exceeds the quadrature value "
        << report.slope_at_one << " for '" << spec.id << "'";
    fail_inconclusive(msg.str());
  }

  auto gap = [&](double k) { return map(k) - k; };
  double lo = 0.0;
  double hi = 1.0 - kEndpointGap;
  double g_lo = gap(lo);
  double k_star = 0.0;
  if (std::abs(g_lo) <= kFixedPointTolerance) {
    k_star = lo;
  } else {
    if (gap(hi) >= 0.0) {
      fail_inconclusive("C(k) - k does not change sign on [0, 1 - 1e-9] for '" +
                        spec.id + "' although C'(1) > 1");
    }
    k_star = 0.5 * (lo + hi);
    for (int it = 0; it < 200; ++it) {
      k_star = 0.5 * (lo + hi);
      const double g = gap(k_star);
      if (std::abs(g) <= kFixedPointTolerance) break;
      if ((g > 0.0) == (g_lo > 0.0)) {
        lo = k_star;
        g_lo = g;
      } else {
        hi = k_star;
      }
      if (hi - lo <= 1e-16) break;
    }
  }
  report.fixed_point = k_star;
  report.derivative_at_fp = cmap_derivative(k_star, series);
  report.classification = k_star <= kZeroFixedPoint ? FlowClass::kDecaysToZero
                                                    : FlowClass::kConvergesPositive;
  if (!(report.derivative_at_fp >= 0.0 && report.derivative_at_fp < 1.0)) {
    std::ostringstream msg;
    msg << "C'(k*) = " << report.derivative_at_fp << " at k* = " << k_star
        << " is not a contraction for '" << spec.id << "'";
    fail_inconclusive(msg.str());
  }
  report.decay_rate = report.derivative_at_fp;
  return report;
}

namespace {

template <class Map>
KernelTrajectory run_flow(double k0, const Map& map, std::string id, int depth) {
  if (!(std::abs(k0) < 1.0)) {
    std::ostringstream msg;
    msg << "initial covariance " << k0
        << " must lie in (-1, 1): inputs that are scalar multiples of each other "
           "(|k| = 1) are excluded";
    fail_validation(msg.str());
  }
  if (depth < 1) fail_validation("flow depth must be at least 1");
  KernelTrajectory t;
  t.activation_id = std::move(id);
  t.k0 = k0;
  t.k_values.reserve(depth);
  double k = k0;
  for (int l = 0; l < depth; ++l) {
    k = settle(k, map(k));
    t.k_values.push_back(k);
  }
  return t;
}

}  // namespace

KernelTrajectory iterate_flow(double k0, const CovarianceMap& map, int depth) {
  return run_flow(k0, map, map.activation().id, depth);
}

KernelTrajectory iterate_flow(double k0, const act::HermiteSeries& series,
                              std::string activation_id, int depth) {
  auto map = [&](double k) { return cmap_series(k, series); };
  return run_flow(k0, map, std::move(activation_id), depth);
}

double estimate_decay_rate(const KernelTrajectory& trajectory) {
  std::vector<double> xs, ys;
  for (std::size_t l = 0; l < trajectory.k_values.size(); ++l) {
    const double a = std::abs(trajectory.k_values[l]);
    if (a > 1e-13 && a < 0.1) {
      xs.push_back(static_cast<double>(l + 1));
      ys.push_back(std::log(a));
    }
  }
  if (xs.size() < 5) {
    std::ostringstream msg;
    msg << "only " << xs.size() << " tail layers with 1e-13 < |k| < 0.1; need 5";
    fail_inconclusive(msg.str());
  }
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  return std::exp(sxy / sxx);
}

std::vector<std::pair<double, double>> figure1_curve(const CovarianceMap& map,
                                                     std::span<const double> grid) {
  std::vector<std::pair<double, double>> out;
  out.reserve(grid.size());
  for (double k : grid) out.emplace_back(k, map(k));
  return out;
}

std::vector<double> linear_grid(double lo, double hi, std::size_t points) {
  if (points < 2) fail_validation("grid needs at least two points");
  std::vector<double> g(points);
  for (std::size_t i = 0; i < points; ++i) {
    g[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
  }
  g.back() = hi;
  return g;
}

nlohmann::json to_json(const FlowReport& report) {
  nlohmann::json j = {
      {"activation", report.activation},
      {"fixed_point", report.fixed_point},
      {"derivative_at_fp", report.derivative_at_fp},
      {"classification", std::string(to_string(report.classification))},
      {"decay_rate", nullptr},
      {"slope_at_one", report.slope_at_one},
      {"slope_at_one_lower_bound", report.slope_at_one_lower},
  };
  if (report.decay_rate) j["decay_rate"] = *report.decay_rate;
  return j;
}

std::string trajectory_csv(const KernelTrajectory& trajectory) {
  std::string out = "layer,k\n";
  out += "0," + format_double(trajectory.k0) + "\n";
  for (std::size_t l = 0; l < trajectory.k_values.size(); ++l) {
    out += std::to_string(l + 1) + "," + format_double(trajectory.k_values[l]) + "\n";
  }
  return out;
}

std::string curve_csv(std::span<const std::pair<double, double>> curve) {
  std::string out = "k_in,k_out,diagonal\n";
  for (const auto& [k, c] : curve) {
    out += format_double(k) + "," + format_double(c) + "," + format_double(k) + "\n";
  }
  return out;
}

}  // namespace wideflow::flow
