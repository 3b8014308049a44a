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

#ifndef WIDEFLOW_ACTIVATIONS_HPP_
#define WIDEFLOW_ACTIVATIONS_HPP_

#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "gauss_hermite.hpp"

namespace wideflow::act {

enum class ActivationKind { kRelu, kGelu, kTanh, kIdentity, kAffine, kTable };

std::string_view to_string(ActivationKind kind);
ActivationKind kind_from_string(std::string_view name);

/// sigma(z) = base(scale * z) + shift, where base is one of the built-in
/// shapes, a*x + b for kAffine, or a piecewise-linear table for kTable.
struct ActivationSpec {
  std::string id;
  ActivationKind kind = ActivationKind::kIdentity;
  double scale = 1.0;
  double shift = 0.0;
  double affine_a = 1.0;
  double affine_b = 0.0;
  // Table knots (kTable only): strictly increasing x, linear interpolation
  // between knots and constant extrapolation beyond them.
  std::vector<double> table_x;
  std::vector<double> table_y;

  double operator()(double z) const;
  /// d sigma / dz. The value at a breakpoint is one of the one-sided limits.
  double derivative(double z) const;

  /// Points in z where sigma is not smooth.
  std::vector<double> breakpoints() const;
};

/// Checks structural fields, then the operational square-integrability test
/// (<sigma^2> at quadrature orders 64 and 128 agree within 1e-6) and
/// rejects almost-everywhere-zero activations. Throws kValidation.
void validate(const ActivationSpec& spec);

/// Built-in registry: relu, gelu, tanh, tanh4x, relu-shifted, gelu-shifted,
/// identity, affine (a=1, b=1).
std::vector<ActivationSpec> registry();
std::vector<std::string> registry_names();
/// Looks up a registry entry; "tanh(4x)" is accepted as an alias of tanh4x.
ActivationSpec by_name(std::string_view name);

ActivationSpec make_relu();
ActivationSpec make_gelu();
ActivationSpec make_tanh(double scale = 1.0);
ActivationSpec make_identity();
ActivationSpec make_affine(double a, double b);
ActivationSpec make_table(std::string id, std::vector<double> x,
                          std::vector<double> y);

/// Quadrature rule for expectations of this activation (panel edges at its
/// breakpoints).
gauss::QuadratureRule rule_for(const ActivationSpec& spec,
                               const gauss::PanelOptions& options = {});

double gaussian_mean(const ActivationSpec& spec,
                     const gauss::PanelOptions& options = {});

/// <sigma(z)^2>. Throws kValidation if the result is <= 1e-12.
double gaussian_second_moment(const ActivationSpec& spec,
                              const gauss::PanelOptions& options = {});

inline constexpr int kDefaultTruncation = 30;

struct HermiteSeries {
  std::vector<double> coefficients;  // a_n, sigma = sum a_n He_n
  std::vector<double> normalized;    // a_n * sqrt(n!), i.e. <sigma h_n>
  int truncation_degree = 0;
  double second_moment = 0.0;        // <sigma^2>
  double residual = 0.0;             // <sigma^2> - sum a_n^2 n!

  /// a_n^2 n! / <sigma^2>: the weight of k^n in the covariance map.
  double map_weight(int n) const {
    return normalized[n] * normalized[n] / second_moment;
  }
};

/// a_n = <sigma He_n> / n! for n = 0..degree. Rejects degree < 1 and
/// degree > 2*order/3.
HermiteSeries hermite_coefficients(const ActivationSpec& spec,
                                   int degree = kDefaultTruncation,
                                   const gauss::PanelOptions& options = {});

/// Shifts the output so the Gaussian mean is zero. Affine specs absorb the
/// correction into affine_b.
ActivationSpec make_zero_mean(const ActivationSpec& spec,
                              const gauss::PanelOptions& options = {});

enum class ActivationClass {
  kZeroMeanNonlinear,
  kNonzeroMeanNonlinear,
  kAffine,
  kLinear,
};

std::string_view to_string(ActivationClass c);

inline constexpr double kCoefficientTolerance = 1e-8;

/// Requires degree >= 3. Throws kInconclusive when the residual exceeds half
/// of <sigma^2>.
ActivationClass classify(const ActivationSpec& spec,
                         const HermiteSeries& series);

nlohmann::json to_json(const ActivationSpec& spec);
/// Parses and validates.
ActivationSpec activation_from_json(const nlohmann::json& j);

nlohmann::json to_json(const HermiteSeries& series);

}  // namespace wideflow::act

#endif  // WIDEFLOW_ACTIVATIONS_HPP_
