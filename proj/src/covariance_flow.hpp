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

#ifndef WIDEFLOW_COVARIANCE_FLOW_HPP_
#define WIDEFLOW_COVARIANCE_FLOW_HPP_

// The layer-to-layer covariance map C(k) = <sigma(z1) sigma(z2)>_k / <sigma^2>
// under critical tuning, its fixed points, and the flow k -> C(k).

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "activations.hpp"

namespace wideflow::flow {

/// C_b = 0, C_W = 1 on the first layer and 1/<sigma^2> afterwards.
struct CriticalHyperparams {
  double c_b = 0.0;
  double c_w_first = 1.0;
  double c_w = 1.0;

  static CriticalHyperparams for_activation(const act::ActivationSpec& spec,
                                            const gauss::PanelOptions& options = {});
  /// Throws kValidation unless the fields are critical for `spec`.
  void check(const act::ActivationSpec& spec) const;
};

/// (1/n0) * <x1, x2> for inputs normalized to (1/n0)|x|^2 = 1 (within 1e-8).
double initial_covariance(std::span<const double> x1, std::span<const double> x2);

/// C(k) by 2D quadrature, with <sigma^2> computed once.
class CovarianceMap {
 public:
  explicit CovarianceMap(act::ActivationSpec spec, gauss::PanelOptions options = {});

  double operator()(double k) const;

  const act::ActivationSpec& activation() const noexcept { return spec_; }
  double second_moment() const noexcept { return second_moment_; }
  /// C'(1) = <sigma'(z)^2> / <sigma^2>.
  double slope_at_one() const;

 private:
  double raw(double k) const;

  act::ActivationSpec spec_;
  gauss::PanelOptions options_;
  std::vector<double> breaks_;
  double second_moment_ = 0.0;
};

double cmap_quadrature(double k, const act::ActivationSpec& spec,
                       const gauss::PanelOptions& options = {});

/// sum_n a_n^2 n! k^n / <sigma^2> over the truncated series.
double cmap_series(double k, const act::HermiteSeries& series);

/// sum_{n>=1} a_n^2 n! n k^(n-1) / <sigma^2>.
double cmap_derivative(double k, const act::HermiteSeries& series);

enum class FlowClass { kDecaysToZero, kConvergesPositive, kDegenerateToOne };

std::string_view to_string(FlowClass c);

struct FlowReport {
  std::string activation;
  double fixed_point = 0.0;
  double derivative_at_fp = 0.0;
  FlowClass classification = FlowClass::kDegenerateToOne;
  std::optional<double> decay_rate;
  double slope_at_one = 0.0;        // C'(1) by quadrature
  double slope_at_one_lower = 0.0;  // rigorous lower bound from the series
};

inline constexpr double kEndpointGap = 1e-9;
inline constexpr double kFixedPointTolerance = 1e-12;
inline constexpr double kZeroFixedPoint = 1e-10;

/// Locates the attracting fixed point of C on [0, 1].
///
/// Affine activations map to k* = 1 in closed form; linear ones are
/// rejected (every k is fixed). Otherwise, if C'(1) <= 1 the flow
/// degenerates to k* = 1; if C'(1) > 1 the interior root of C(k) - k on
/// [0, 1 - 1e-9] is bracketed by bisection. Throws kInconclusive when the
/// series bound and the quadrature value of C'(1) disagree or no sign change
/// is found.
FlowReport find_fixed_point(const CovarianceMap& map, const act::HermiteSeries& series);

struct KernelTrajectory {
  std::string activation_id;
  double k0 = 0.0;
  std::vector<double> k_values;  // k_values[l-1] = C^l(k0)
};

/// Applies C `depth` times starting at k0 in (-1, 1).
KernelTrajectory iterate_flow(double k0, const CovarianceMap& map, int depth);
KernelTrajectory iterate_flow(double k0, const act::HermiteSeries& series,
                              std::string activation_id, int depth);

/// Per-layer contraction factor exp(slope) from a least-squares fit of
/// log|k| against layer over the tail 1e-13 < |k| < 0.1. Needs at least
/// five such layers.
double estimate_decay_rate(const KernelTrajectory& trajectory);

std::vector<std::pair<double, double>> figure1_curve(const CovarianceMap& map,
                                                     std::span<const double> grid);

/// Evenly spaced grid of `points` values on [lo, hi].
std::vector<double> linear_grid(double lo, double hi, std::size_t points);

nlohmann::json to_json(const FlowReport& report);
std::string trajectory_csv(const KernelTrajectory& trajectory);
std::string curve_csv(std::span<const std::pair<double, double>> curve);

}  // namespace wideflow::flow

#endif  // WIDEFLOW_COVARIANCE_FLOW_HPP_
