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

#include "activations.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "error.hpp"

namespace wideflow::act {
namespace {

constexpr double kTableLimit = 8.0;

double standard_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double table_lookup(const std::vector<double>& xs, const std::vector<double>& ys,
                    double x) {
  if (x <= xs.front()) return ys.front();
  if (x >= xs.back()) return ys.back();
  const auto hi = std::upper_bound(xs.begin(), xs.end(), x);
  const auto j = static_cast<std::size_t>(hi - xs.begin());
  const double t = (x - xs[j - 1]) / (xs[j] - xs[j - 1]);
  return ys[j - 1] + t * (ys[j] - ys[j - 1]);
}

double table_slope(const std::vector<double>& xs, const std::vector<double>& ys, double x) {
  if (x <= xs.front() || x >= xs.back()) return 0.0;
  const auto hi = std::upper_bound(xs.begin(), xs.end(), x);
  const auto j = static_cast<std::size_t>(hi - xs.begin());
  return (ys[j] - ys[j - 1]) / (xs[j] - xs[j - 1]);
}

void check_structure(const ActivationSpec& spec) {
  auto finite = [](double v) { return std::isfinite(v); };
  if (!finite(spec.scale) || !finite(spec.shift) || !finite(spec.affine_a) ||
      !finite(spec.affine_b)) {
    fail_validation("activation '" + spec.id + "' has non-finite parameters");
  }
  if (spec.scale == 0.0) {
    fail_validation("activation '" + spec.id + "' has zero input scale");
  }
  if (spec.kind == ActivationKind::kTable) {
    const auto& x = spec.table_x;
    const auto& y = spec.table_y;
    if (x.size() < 2 || x.size() != y.size()) {
      fail_validation("table activation '" + spec.id +
                      "' needs at least two knots with matching x and y");
    }
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (!finite(x[i]) || !finite(y[i])) {
        fail_validation("table activation '" + spec.id + "' has non-finite knots");
      }
      if (i > 0 && !(x[i] > x[i - 1])) {
        fail_validation("table activation '" + spec.id +
                        "' knots must be strictly increasing");
      }
    }
    if (x.front() < -kTableLimit || x.back() > kTableLimit) {
      fail_validation("table activation '" + spec.id +
                      "' knots must lie within [-8, 8]");
    }
  }
}

double second_moment_unchecked(const ActivationSpec& spec,
                               const gauss::PanelOptions& options) {
  const auto rule = rule_for(spec, options);
  return gauss::expect_1d([&](double z) { const double s = spec(z); return s * s; },
                          rule);
}

}  // namespace

std::string_view to_string(ActivationKind kind) {
  switch (kind) {
    case ActivationKind::kRelu: return "relu";
    case ActivationKind::kGelu: return "gelu";
    case ActivationKind::kTanh: return "tanh";
    case ActivationKind::kIdentity: return "identity";
    case ActivationKind::kAffine: return "affine";
    case ActivationKind::kTable: return "table";
  }
  return "unknown";
}

ActivationKind kind_from_string(std::string_view name) {
  for (auto k : {ActivationKind::kRelu, ActivationKind::kGelu, ActivationKind::kTanh,
                 ActivationKind::kIdentity, ActivationKind::kAffine,
                 ActivationKind::kTable}) {
    if (to_string(k) == name) return k;
  }
  fail_validation("unknown activation kind '" + std::string(name) + "'");
}

double ActivationSpec::operator()(double z) const {
  const double x = scale * z;
  double base = 0.0;
  switch (kind) {
    case ActivationKind::kRelu: base = x > 0.0 ? x : 0.0; break;
    case ActivationKind::kGelu: base = x * standard_normal_cdf(x); break;
    case ActivationKind::kTanh: base = std::tanh(x); break;
    case ActivationKind::kIdentity: base = x; break;
    case ActivationKind::kAffine: base = affine_a * x + affine_b; break;
    case ActivationKind::kTable: base = table_lookup(table_x, table_y, x); break;
  }
  return base + shift;
}

double ActivationSpec::derivative(double z) const {
  const double x = scale * z;
  double base = 0.0;
  switch (kind) {
    case ActivationKind::kRelu: base = x > 0.0 ? 1.0 : 0.0; break;
    case ActivationKind::kGelu:
      base = standard_normal_cdf(x) + x * gauss::detail::gaussian_density(x);
      break;
    case ActivationKind::kTanh: {
      const double c = 1.0 / std::cosh(x);
      base = c * c;
      break;
    }
    case ActivationKind::kIdentity: base = 1.0; break;
    case ActivationKind::kAffine: base = affine_a; break;
    case ActivationKind::kTable: base = table_slope(table_x, table_y, x); break;
  }
  return scale * base;
}

std::vector<double> ActivationSpec::breakpoints() const {
  switch (kind) {
    case ActivationKind::kRelu: return {0.0};
    case ActivationKind::kTable: {
      std::vector<double> b;
      b.reserve(table_x.size());
      for (double x : table_x) b.push_back(x / scale);
      std::sort(b.begin(), b.end());
      return b;
    }
    default: return {};
  }
}

void validate(const ActivationSpec& spec) {
  check_structure(spec);
  double coarse = 0.0;
  double fine = 0.0;
  try {
    coarse = second_moment_unchecked(spec, gauss::PanelOptions{.order = 64});
    fine = second_moment_unchecked(spec, gauss::PanelOptions{.order = 128});
  } catch (const Error& e) {
    fail_validation("activation '" + spec.id + "': " + e.what());
  }
  if (std::abs(coarse - fine) > 1e-6) {
    std::ostringstream msg;
    msg << "activation '" << spec.id << "' is not resolved by Gaussian quadrature ("
        << "<sigma^2> = " << coarse << " at order 64 vs " << fine << " at order 128)";
    fail_validation(msg.str());
  }
  if (fine <= 1e-12) {
    fail_validation("activation '" + spec.id + "' is almost everywhere zero");
  }
}

ActivationSpec make_relu() {
  ActivationSpec s;
  s.id = "relu";
  s.kind = ActivationKind::kRelu;
  return s;
}

ActivationSpec make_gelu() {
  ActivationSpec s;
  s.id = "gelu";
  s.kind = ActivationKind::kGelu;
  return s;
}

ActivationSpec make_tanh(double scale) {
  ActivationSpec s;
  s.kind = ActivationKind::kTanh;
  s.scale = scale;
  if (scale == 1.0) {
    s.id = "tanh";
  } else {
    std::ostringstream id;
    id << "tanh" << scale << "x";
    s.id = id.str();
  }
  return s;
}

ActivationSpec make_identity() {
  ActivationSpec s;
  s.id = "identity";
  s.kind = ActivationKind::kIdentity;
  return s;
}

ActivationSpec make_affine(double a, double b) {
  ActivationSpec s;
  std::ostringstream id;
  id << "affine(" << a << "," << b << ")";
  s.id = id.str();
  s.kind = ActivationKind::kAffine;
  s.affine_a = a;
  s.affine_b = b;
  return s;
}

ActivationSpec make_table(std::string id, std::vector<double> x, std::vector<double> y) {
  ActivationSpec s;
  s.id = std::move(id);
  s.kind = ActivationKind::kTable;
  s.table_x = std::move(x);
  s.table_y = std::move(y);
  validate(s);
  return s;
}

std::vector<ActivationSpec> registry() {
  auto relu_shifted = make_zero_mean(make_relu());
  relu_shifted.id = "relu-shifted";
  auto gelu_shifted = make_zero_mean(make_gelu());
  gelu_shifted.id = "gelu-shifted";
  auto affine = make_affine(1.0, 1.0);
  affine.id = "affine";
  return {make_relu(),  make_gelu(),    make_tanh(),     make_tanh(4.0),
          relu_shifted, gelu_shifted,   make_identity(), affine};
}

std::vector<std::string> registry_names() {
  std::vector<std::string> names;
  for (const auto& s : registry()) names.push_back(s.id);
  return names;
}

ActivationSpec by_name(std::string_view name) {
  const std::string_view key = name == "tanh(4x)" ? std::string_view("tanh4x") : name;
  for (auto& s : registry()) {
    if (s.id == key) return s;
  }
  std::string known;
  for (const auto& n : registry_names()) known += (known.empty() ? "" : ", ") + n;
  fail_validation("unknown activation '" + std::string(name) + "' (known: " + known + ")");
}

gauss::QuadratureRule rule_for(const ActivationSpec& spec,
                               const gauss::PanelOptions& options) {
  const auto b = spec.breakpoints();
  return gauss::make_panel_rule(options, b);
}

double gaussian_mean(const ActivationSpec& spec, const gauss::PanelOptions& options) {
  return gauss::expect_1d(spec, rule_for(spec, options));
}

double gaussian_second_moment(const ActivationSpec& spec,
                              const gauss::PanelOptions& options) {
  const double m2 = second_moment_unchecked(spec, options);
  if (m2 <= 1e-12) {
    fail_validation("activation '" + spec.id + "' has degenerate second moment");
  }
  return m2;
}

HermiteSeries hermite_coefficients(const ActivationSpec& spec, int degree,
                                   const gauss::PanelOptions& options) {
  if (degree < 1) fail_validation("hermite truncation degree must be at least 1");
  if (3 * degree > 2 * options.order) {
    std::ostringstream msg;
    msg << "truncation degree " << degree << " exceeds 2/3 of quadrature order "
        << options.order;
    fail_validation(msg.str());
  }
  // h_n has its oscillatory region inside |z| < sqrt(4n+2); extend the domain
  // past it so the Gaussian tail is resolved.
  gauss::PanelOptions wide = options;
  wide.span = std::max(options.span, std::sqrt(4.0 * degree + 2.0) + 8.0);
  const auto rule = rule_for(spec, wide);

  HermiteSeries series;
  series.truncation_degree = degree;
  series.normalized.assign(degree + 1, 0.0);
  std::vector<double> h(degree + 1);
  double m2 = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    const double v = spec(rule.nodes[i]);
    if (!std::isfinite(v)) gauss::detail::report_non_finite(rule.nodes[i], 0.0);
    const double wv = rule.weights[i] * v;
    m2 += wv * v;
    gauss::hermite_normalized(rule.nodes[i], h);
    for (int n = 0; n <= degree; ++n) series.normalized[n] += wv * h[n];
  }
  if (m2 <= 1e-12) {
    fail_validation("activation '" + spec.id + "' has degenerate second moment");
  }
  series.second_moment = m2;
  series.coefficients.resize(degree + 1);
  double captured = 0.0;
  for (int n = 0; n <= degree; ++n) {
    series.coefficients[n] = series.normalized[n] / std::sqrt(gauss::factorial(n));
    captured += series.normalized[n] * series.normalized[n];
  }
  series.residual = m2 - captured;
  return series;
}

ActivationSpec make_zero_mean(const ActivationSpec& spec,
                              const gauss::PanelOptions& options) {
  const double mean = gaussian_mean(spec, options);
  if (std::abs(mean) <= 1e-15) return spec;
  ActivationSpec out = spec;
  if (out.kind == ActivationKind::kAffine) {
    out.affine_b -= mean;
  } else {
    out.shift -= mean;
  }
  out.id = spec.id + "-shifted";
  return out;
}

std::string_view to_string(ActivationClass c) {
  switch (c) {
    case ActivationClass::kZeroMeanNonlinear: return "ZeroMeanNonlinear";
    case ActivationClass::kNonzeroMeanNonlinear: return "NonzeroMeanNonlinear";
    case ActivationClass::kAffine: return "Affine";
    case ActivationClass::kLinear: return "Linear";
  }
  return "unknown";
}

ActivationClass classify(const ActivationSpec& spec, const HermiteSeries& series) {
  if (series.truncation_degree < 3) {
    fail_validation("classification needs a series of degree >= 3");
  }
  if (series.residual > 0.5 * series.second_moment) {
    std::ostringstream msg;
    msg << "truncation at degree " << series.truncation_degree << " leaves "
        << series.residual << " of <sigma^2> = " << series.second_moment
        << " unexplained; cannot classify '" << spec.id << "'";
    fail_inconclusive(msg.str());
  }
  auto significant = [&](int n) {
    return std::abs(series.normalized[n]) > kCoefficientTolerance;
  };
  bool nonlinear = false;
  for (int n = 2; n <= series.truncation_degree; ++n) nonlinear |= significant(n);
  // Mass that the truncation missed is still nonlinear content.
  nonlinear |= series.residual > kCoefficientTolerance * series.second_moment;
  if (nonlinear) {
    return significant(0) ? ActivationClass::kNonzeroMeanNonlinear
                          : ActivationClass::kZeroMeanNonlinear;
  }
  if (significant(0)) return ActivationClass::kAffine;
  if (significant(1)) return ActivationClass::kLinear;
  fail_inconclusive("activation '" + spec.id + "' has no significant coefficients");
}

nlohmann::json to_json(const ActivationSpec& spec) {
  nlohmann::json j = {
      {"id", spec.id},
      {"kind", std::string(to_string(spec.kind))},
      {"scale", spec.scale},
      {"shift", spec.shift},
      {"affine_a", spec.affine_a},
      {"affine_b", spec.affine_b},
  };
  if (spec.kind == ActivationKind::kTable) {
    auto knots = nlohmann::json::array();
    for (std::size_t i = 0; i < spec.table_x.size(); ++i) {
      knots.push_back({spec.table_x[i], spec.table_y[i]});
    }
    j["knots"] = std::move(knots);
  }
  return j;
}

ActivationSpec activation_from_json(const nlohmann::json& j) {
  if (j.is_string()) return by_name(j.get<std::string>());
  if (!j.is_object()) fail_validation("activation must be a name or an object");
  ActivationSpec s;
  try {
    s.kind = kind_from_string(j.at("kind").get<std::string>());
    s.id = j.value("id", std::string(to_string(s.kind)));
    s.scale = j.value("scale", 1.0);
    s.shift = j.value("shift", 0.0);
    s.affine_a = j.value("affine_a", 1.0);
    s.affine_b = j.value("affine_b", 0.0);
    if (s.kind == ActivationKind::kTable) {
      for (const auto& knot : j.at("knots")) {
        if (!knot.is_array() || knot.size() != 2) {
          fail_validation("table knots must be [x, y] pairs");
        }
        s.table_x.push_back(knot[0].get<double>());
        s.table_y.push_back(knot[1].get<double>());
      }
    }
  } catch (const nlohmann::json::exception& e) {
    fail_validation(std::string("malformed activation: ") + e.what());
  }
  validate(s);
  return s;
}

nlohmann::json to_json(const HermiteSeries& series) {
  return {
      {"truncation_degree", series.truncation_degree},
      {"coefficients", series.coefficients},
      {"second_moment", series.second_moment},
      {"residual", series.residual},
  };
}

}  // namespace wideflow::act
