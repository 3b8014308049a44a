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

#include "simulator.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "counter_rng.hpp"
#include "error.hpp"
#include "parallel.hpp"

namespace wideflow::sim {
namespace {

constexpr std::uint64_t kBiasRow = ~std::uint64_t{0};

struct LayerShape {
  int fan_in;
  double weight_scale;
  double bias_scale;
};

LayerShape layer_shape(const NetworkConfig& c, int layer) {
  const int fan_in = layer == 1 ? c.n0 : c.width;
  const double cw = layer == 1 ? c.hyperparams.c_w_first : c.hyperparams.c_w;
  return {fan_in, std::sqrt(cw / fan_in), std::sqrt(c.hyperparams.c_b)};
}

std::uint64_t row_key(const NetworkConfig& c, std::uint64_t draw, int layer,
                      std::uint64_t row) {
  return rng::stream_key({c.seed, draw, static_cast<std::uint64_t>(layer), row});
}

void fill_biases(const NetworkConfig& c, std::uint64_t draw, int layer,
                 std::span<double> out) {
  const auto shape = layer_shape(c, layer);
  if (shape.bias_scale == 0.0) {
    std::fill(out.begin(), out.end(), 0.0);
    return;
  }
  rng::fill_normal(row_key(c, draw, layer, kBiasRow), out, shape.bias_scale);
}

// z[a][i] = bias[i] + <row_i, prev[a]> for every input a.
template <class RowSource>
void propagate(int width, int m, std::span<const double> bias,
               const std::vector<std::span<const double>>& prev, RowSource&& row_of,
               Preactivations& out, int layer_index) {
  for (int i = 0; i < width; ++i) {
    const std::span<const double> w = row_of(i);
    const Eigen::Map<const Eigen::VectorXd> row(w.data(), w.size());
    for (int a = 0; a < m; ++a) {
      const Eigen::Map<const Eigen::VectorXd> p(prev[a].data(), prev[a].size());
      out.at(layer_index, a)[i] = bias[i] + row.dot(p);
    }
  }
}

void apply_activation(const act::ActivationSpec& sigma, std::span<const double> z,
                      std::span<double> out) {
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double v = sigma(z[i]);
    if (!std::isfinite(v)) fail_non_finite("activation produced a non-finite value");
    out[i] = v;
  }
}

void shape_preactivations(Preactivations& out, int depth, int m, int width) {
  out.depth = depth;
  out.m = m;
  out.width = width;
  out.values.assign(static_cast<std::size_t>(depth) * m * width, 0.0);
}

template <class RowSourceFactory, class BiasSource>
void run_forward(const NetworkConfig& c, const Dataset& d, RowSourceFactory&& rows_for,
                 BiasSource&& biases_for, Preactivations& out) {
  if (d.n0 != c.n0) {
    std::ostringstream msg;
    msg << "dataset dimension " << d.n0 << " does not match n0 = " << c.n0;
    fail_validation(msg.str());
  }
  shape_preactivations(out, c.depth, d.m, c.width);
  std::vector<std::vector<double>> act(d.m, std::vector<double>(c.width));
  std::vector<std::span<const double>> prev(d.m);
  for (int a = 0; a < d.m; ++a) prev[a] = d.row(a);
  for (int layer = 1; layer <= c.depth; ++layer) {
    auto rows = rows_for(layer);
    propagate(c.width, d.m, biases_for(layer), prev, rows, out, layer - 1);
    if (layer == c.depth) break;
    for (int a = 0; a < d.m; ++a) {
      apply_activation(c.activation, out.at(layer - 1, a), act[a]);
      prev[a] = act[a];
    }
  }
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

NetworkConfig NetworkConfig::critical(int n0, int width, int depth,
                                      act::ActivationSpec activation,
                                      std::uint64_t seed) {
  NetworkConfig c;
  c.n0 = n0;
  c.width = width;
  c.depth = depth;
  c.hyperparams = flow::CriticalHyperparams::for_activation(activation);
  c.activation = std::move(activation);
  c.seed = seed;
  c.validate();
  return c;
}

void NetworkConfig::validate() const {
  if (n0 < 1) fail_validation("n0 must be at least 1");
  if (width < 2) fail_validation("width must be at least 2");
  if (depth < 1) fail_validation("depth must be at least 1");
  hyperparams.check(activation);
}

Dataset Dataset::from_rows(const std::vector<std::vector<double>>& rows) {
  Dataset d;
  if (rows.empty()) fail_validation("dataset has no rows");
  d.m = static_cast<int>(rows.size());
  d.n0 = static_cast<int>(rows.front().size());
  for (std::size_t a = 0; a < rows.size(); ++a) {
    if (static_cast<int>(rows[a].size()) != d.n0) {
      std::ostringstream msg;
      msg << "dataset row " << a << " has " << rows[a].size() << " entries, expected "
          << d.n0;
      fail_validation(msg.str());
    }
    d.inputs.insert(d.inputs.end(), rows[a].begin(), rows[a].end());
  }
  d.validate();
  return d;
}

void Dataset::validate() const {
  if (m < 1 || n0 < 1) fail_validation("dataset is empty");
  if (inputs.size() != static_cast<std::size_t>(m) * n0) {
    fail_validation("dataset storage does not match m x n0");
  }
  for (int a = 0; a < m; ++a) {
    double s = 0.0;
    for (double v : row(a)) s += v * v;
    if (!(std::abs(s / n0 - 1.0) <= 1e-8)) {
      std::ostringstream msg;
      msg << "dataset row " << a << " is not normalized: (1/n0) * sum x^2 = " << s / n0
          << ", expected 1";
      fail_validation(msg.str());
    }
  }
  for (int a = 0; a < m; ++a) {
    for (int b = a + 1; b < m; ++b) {
      const double k = flow::initial_covariance(row(a), row(b));
      if (std::abs(k) >= 1.0 - 1e-9) {
        std::ostringstream msg;
        msg << "dataset rows " << a << " and " << b
            << " are scalar multiples of each other (k = " << k << ")";
        fail_validation(msg.str());
      }
    }
  }
}

Dataset dataset_from_gram(const std::vector<std::vector<double>>& gram, int n0) {
  const int m = static_cast<int>(gram.size());
  if (m < 1 || n0 < m) fail_validation("gram construction needs 1 <= m <= n0");
  Eigen::MatrixXd g(m, m);
  for (int a = 0; a < m; ++a) {
    if (static_cast<int>(gram[a].size()) != m) fail_validation("gram matrix is not square");
    for (int b = 0; b < m; ++b) g(a, b) = gram[a][b];
  }
  Eigen::LLT<Eigen::MatrixXd> llt(g);
  if (llt.info() != Eigen::Success) fail_validation("gram matrix is not positive definite");
  const Eigen::MatrixXd l = llt.matrixL();
  Dataset d;
  d.m = m;
  d.n0 = n0;
  d.inputs.assign(static_cast<std::size_t>(m) * n0, 0.0);
  const double r = std::sqrt(static_cast<double>(n0));
  for (int a = 0; a < m; ++a) {
    for (int b = 0; b <= a; ++b) d.inputs[static_cast<std::size_t>(a) * n0 + b] = r * l(a, b);
  }
  d.validate();
  return d;
}

NetworkSample sample_network(const NetworkConfig& config, std::uint64_t draw) {
  config.validate();
  NetworkSample s;
  s.config = config;
  s.draw = draw;
  for (int layer = 1; layer <= config.depth; ++layer) {
    const auto shape = layer_shape(config, layer);
    std::vector<double> w(static_cast<std::size_t>(config.width) * shape.fan_in);
    for (int i = 0; i < config.width; ++i) {
      rng::fill_normal(row_key(config, draw, layer, i),
                       std::span<double>(w.data() + static_cast<std::size_t>(i) * shape.fan_in,
                                         shape.fan_in),
                       shape.weight_scale);
    }
    std::vector<double> b(config.width);
    fill_biases(config, draw, layer, b);
    s.weights.push_back(std::move(w));
    s.biases.push_back(std::move(b));
  }
  return s;
}

Preactivations forward(const NetworkSample& sample, const Dataset& dataset) {
  const auto& c = sample.config;
  Preactivations out;
  run_forward(
      c, dataset,
      [&](int layer) {
        const int fan_in = layer_shape(c, layer).fan_in;
        const auto& w = sample.weights[layer - 1];
        return [&w, fan_in](int i) {
          return std::span<const double>(w.data() + static_cast<std::size_t>(i) * fan_in,
                                         fan_in);
        };
      },
      [&](int layer) { return std::span<const double>(sample.biases[layer - 1]); }, out);
  return out;
}

void forward_draw(const NetworkConfig& config, std::uint64_t draw, const Dataset& dataset,
                  Preactivations& out) {
  std::vector<double> row(std::max(config.n0, config.width));
  std::vector<double> bias(config.width);
  run_forward(
      config, dataset,
      [&](int layer) {
        const auto shape = layer_shape(config, layer);
        return [&, layer, shape](int i) {
          std::span<double> w(row.data(), shape.fan_in);
          rng::fill_normal(row_key(config, draw, layer, i), w, shape.weight_scale);
          return std::span<const double>(w);
        };
      },
      [&](int layer) {
        fill_biases(config, draw, layer, bias);
        return std::span<const double>(bias);
      },
      out);
}

std::vector<std::vector<double>> theory_covariances(const NetworkConfig& config,
                                                    const Dataset& dataset) {
  const int m = dataset.m;
  std::vector<std::vector<double>> g(config.depth, std::vector<double>(m * m, 1.0));
  const flow::CovarianceMap map(config.activation);
  for (int a = 0; a < m; ++a) {
    for (int b = a + 1; b < m; ++b) {
      double k = flow::initial_covariance(dataset.row(a), dataset.row(b));
      for (int l = 0; l < config.depth; ++l) {
        if (l > 0) k = map(k);
        g[l][a * m + b] = g[l][b * m + a] = k;
      }
    }
  }
  return g;
}

EmpiricalCovariance estimate_covariance(const NetworkConfig& config, const Dataset& dataset,
                                        std::size_t samples, unsigned workers) {
  config.validate();
  dataset.validate();
  if (samples < 100) fail_validation("covariance estimation needs at least 100 samples");
  const int m = dataset.m;
  const int n = config.width;
  const std::size_t per_layer = static_cast<std::size_t>(m) * m;
  const std::size_t stride = 2 * per_layer * config.depth;
  std::vector<double> per_draw(samples * stride);

  parallel_for(samples, resolve_workers(workers), [&](std::size_t d) {
    Preactivations z;
    forward_draw(config, d, dataset, z);
    double* slot = per_draw.data() + d * stride;
    std::vector<double> sums(m);
    for (int l = 0; l < config.depth; ++l) {
      double* same = slot + 2 * per_layer * l;
      double* cross = same + per_layer;
      for (int a = 0; a < m; ++a) {
        double s = 0.0;
        for (double v : z.at(l, a)) s += v;
        sums[a] = s;
      }
      for (int a = 0; a < m; ++a) {
        for (int b = a; b < m; ++b) {
          const auto za = z.at(l, a);
          const auto zb = z.at(l, b);
          double dot = 0.0;
          for (int i = 0; i < n; ++i) dot += za[i] * zb[i];
          const double diag = dot / n;
          const double off = (sums[a] * sums[b] - dot) / (static_cast<double>(n) * (n - 1));
          same[a * m + b] = same[b * m + a] = diag;
          cross[a * m + b] = cross[b * m + a] = off;
        }
      }
    }
  });

  const auto theory = theory_covariances(config, dataset);
  EmpiricalCovariance cov;
  cov.m = m;
  cov.width = n;
  cov.sample_count = samples;
  for (int l = 0; l < config.depth; ++l) {
    LayerCovariance lc;
    lc.theory = theory[l];
    for (std::size_t e = 0; e < per_layer; ++e) {
      const std::size_t base = 2 * per_layer * l + e;
      const auto same = mean_and_error(samples, [&](std::size_t d) {
        return per_draw[d * stride + base];
      });
      const auto cross = mean_and_error(samples, [&](std::size_t d) {
        return per_draw[d * stride + base + per_layer];
      });
      lc.mean.push_back(same.mean);
      lc.std_error.push_back(same.std_error);
      lc.cross_mean.push_back(cross.mean);
      lc.cross_std_error.push_back(cross.std_error);
    }
    cov.layers.push_back(std::move(lc));
  }
  return cov;
}

double EmpiricalCovariance::z_score(int layer, int a, int b) const {
  const auto& lc = layers[layer];
  const std::size_t e = static_cast<std::size_t>(a) * m + b;
  const double diff = lc.mean[e] - lc.theory[e];
  if (lc.std_error[e] == 0.0) return diff == 0.0 ? 0.0 : INFINITY;
  return diff / lc.std_error[e];
}

double EmpiricalCovariance::max_abs_z() const {
  double worst = 0.0;
  for (int l = 0; l < static_cast<int>(layers.size()); ++l) {
    for (int a = 0; a < m; ++a) {
      for (int b = a; b < m; ++b) worst = std::max(worst, std::abs(z_score(l, a, b)));
    }
  }
  return worst;
}

FourPointReport connected_four_point(const OutputSource& source, int width,
                                     std::size_t samples, unsigned workers) {
  if (width < 2) fail_validation("four-point correlator needs width >= 2");
  if (samples < 2) fail_validation("four-point correlator needs at least 2 samples");
  // Per draw: pair average of z_i^2 z_j^2 (i != j) and the mean of z_i^2.
  std::vector<double> pair_avg(samples), square_avg(samples);
  parallel_for(samples, resolve_workers(workers), [&](std::size_t d) {
    std::vector<double> z(width);
    source(d, z);
    double s2 = 0.0, s4 = 0.0;
    for (double v : z) {
      const double q = v * v;
      s2 += q;
      s4 += q * q;
    }
    const double n = static_cast<double>(width);
    pair_avg[d] = (s2 * s2 - s4) / (n * (n - 1.0));
    square_avg[d] = s2 / n;
  });
  const auto pairs = mean_and_error(samples, [&](std::size_t d) { return pair_avg[d]; });
  const auto squares = mean_and_error(samples, [&](std::size_t d) { return square_avg[d]; });
  // Delta method on pairs.mean - squares.mean^2.
  const double slope = 2.0 * squares.mean;
  const auto linear = mean_and_error(samples, [&](std::size_t d) {
    return pair_avg[d] - slope * square_avg[d];
  });
  FourPointReport r;
  r.width = width;
  r.samples = samples;
  r.connected = pairs.mean - squares.mean * squares.mean;
  r.std_error = linear.std_error;
  r.second_moment = squares.mean;
  return r;
}

FourPointReport four_point(const NetworkConfig& config, std::span<const double> input,
                           std::size_t samples, unsigned workers) {
  config.validate();
  const Dataset single = Dataset::from_rows({std::vector<double>(input.begin(), input.end())});
  const OutputSource source = [&](std::uint64_t draw, std::span<double> out) {
    Preactivations z;
    forward_draw(config, draw, single, z);
    const auto last = z.at(config.depth - 1, 0);
    std::copy(last.begin(), last.end(), out.begin());
  };
  return connected_four_point(source, config.width, samples, workers);
}

FourPointScaling four_point_scaling(const NetworkConfig& narrow, int wide_width,
                                    std::span<const double> input, std::size_t samples,
                                    unsigned workers) {
  NetworkConfig wide = narrow;
  wide.width = wide_width;
  FourPointScaling s;
  s.narrow = four_point(narrow, input, samples, workers);
  s.wide = four_point(wide, input, samples, workers);
  const double shrink = static_cast<double>(narrow.width) / wide_width;
  s.ratio = s.wide.connected / s.narrow.connected;
  s.discrepancy = s.wide.connected - shrink * s.narrow.connected;
  s.band = 3.0 * std::hypot(s.wide.std_error, shrink * s.narrow.std_error);
  s.consistent = std::abs(s.discrepancy) <= s.band;
  s.inconclusive = std::abs(s.narrow.connected) <= 3.0 * s.narrow.std_error &&
                   std::abs(s.wide.connected) <= 3.0 * s.wide.std_error;
  return s;
}

std::vector<KurtosisEstimate> normality_diagnostics(const NetworkConfig& config,
                                                    const Dataset& dataset,
                                                    std::size_t samples,
                                                    unsigned workers) {
  config.validate();
  dataset.validate();
  if (static_cast<double>(samples) * config.width < 1e5) {
    fail_validation("normality diagnostics need samples * width >= 1e5 pooled values");
  }
  const int m = dataset.m;
  std::vector<double> m2(samples * m), m4(samples * m);
  parallel_for(samples, resolve_workers(workers), [&](std::size_t d) {
    Preactivations z;
    forward_draw(config, d, dataset, z);
    for (int a = 0; a < m; ++a) {
      double s2 = 0.0, s4 = 0.0;
      for (double v : z.at(config.depth - 1, a)) {
        const double q = v * v;
        s2 += q;
        s4 += q * q;
      }
      m2[d * m + a] = s2 / config.width;
      m4[d * m + a] = s4 / config.width;
    }
  });
  std::vector<KurtosisEstimate> out;
  for (int a = 0; a < m; ++a) {
    const auto second = mean_and_error(samples, [&](std::size_t d) { return m2[d * m + a]; });
    const auto fourth = mean_and_error(samples, [&](std::size_t d) { return m4[d * m + a]; });
    const double v2 = second.mean * second.mean;
    const double ratio = fourth.mean / v2;
    const auto linear = mean_and_error(samples, [&](std::size_t d) {
      return m4[d * m + a] / v2 - 2.0 * ratio * m2[d * m + a] / second.mean;
    });
    out.push_back({ratio - 3.0, linear.std_error});
  }
  return out;
}

NetworkConfig config_from_json(const nlohmann::json& j) {
  try {
    NetworkConfig c;
    c.n0 = j.at("n0").get<int>();
    c.width = j.at("width").get<int>();
    c.depth = j.at("depth").get<int>();
    c.activation = act::activation_from_json(j.at("activation"));
    c.seed = j.value("seed", std::uint64_t{0});
    if (j.contains("hyperparams")) {
      const auto& h = j.at("hyperparams");
      c.hyperparams.c_b = h.at("c_b").get<double>();
      c.hyperparams.c_w_first = h.at("c_w_first").get<double>();
      c.hyperparams.c_w = h.at("c_w").get<double>();
    } else {
      c.hyperparams = flow::CriticalHyperparams::for_activation(c.activation);
    }
    c.validate();
    return c;
  } catch (const nlohmann::json::exception& e) {
    fail_validation(std::string("malformed network config: ") + e.what());
  }
}

Dataset dataset_from_json(const nlohmann::json& j) {
  try {
    if (j.contains("gram")) {
      return dataset_from_gram(j.at("gram").get<std::vector<std::vector<double>>>(),
                               j.at("n0").get<int>());
    }
    return Dataset::from_rows(j.at("inputs").get<std::vector<std::vector<double>>>());
  } catch (const nlohmann::json::exception& e) {
    fail_validation(std::string("malformed dataset: ") + e.what());
  }
}

nlohmann::json to_json(const NetworkConfig& c) {
  return {
      {"n0", c.n0},
      {"width", c.width},
      {"depth", c.depth},
      {"activation", act::to_json(c.activation)},
      {"hyperparams",
       {{"c_b", c.hyperparams.c_b},
        {"c_w_first", c.hyperparams.c_w_first},
        {"c_w", c.hyperparams.c_w}}},
      {"seed", c.seed},
  };
}

nlohmann::json to_json(const Dataset& d) {
  auto rows = nlohmann::json::array();
  for (int a = 0; a < d.m; ++a) {
    const auto r = d.row(a);
    rows.push_back(std::vector<double>(r.begin(), r.end()));
  }
  return {{"inputs", std::move(rows)}};
}

nlohmann::json to_json(const EmpiricalCovariance& cov) {
  auto matrix = [&](const std::vector<double>& flat) {
    auto rows = nlohmann::json::array();
    for (int a = 0; a < cov.m; ++a) {
      rows.push_back(std::vector<double>(flat.begin() + a * cov.m,
                                         flat.begin() + (a + 1) * cov.m));
    }
    return rows;
  };
  auto layers = nlohmann::json::array();
  for (int l = 0; l < static_cast<int>(cov.layers.size()); ++l) {
    const auto& lc = cov.layers[l];
    std::vector<double> z(lc.mean.size());
    for (int a = 0; a < cov.m; ++a) {
      for (int b = 0; b < cov.m; ++b) z[a * cov.m + b] = cov.z_score(l, a, b);
    }
    layers.push_back({
        {"layer", l + 1},
        {"empirical", matrix(lc.mean)},
        {"std_error", matrix(lc.std_error)},
        {"theory", matrix(lc.theory)},
        {"z_score", matrix(z)},
        {"cross_neuron", matrix(lc.cross_mean)},
        {"cross_neuron_std_error", matrix(lc.cross_std_error)},
    });
  }
  return {
      {"m", cov.m},
      {"width", cov.width},
      {"sample_count", cov.sample_count},
      {"max_abs_z", cov.max_abs_z()},
      {"layers", std::move(layers)},
  };
}

nlohmann::json to_json(const FourPointReport& r) {
  return {{"width", r.width},
          {"samples", r.samples},
          {"connected_correlator", r.connected},
          {"std_error", r.std_error},
          {"second_moment", r.second_moment}};
}

nlohmann::json to_json(const KurtosisEstimate& k) {
  return {{"excess_kurtosis", k.excess}, {"std_error", k.std_error}};
}

std::string covariance_csv(const EmpiricalCovariance& cov) {
  std::string out =
      "layer,alpha,beta,empirical,std_error,theory,z_score,cross,cross_std_error\n";
  for (int l = 0; l < static_cast<int>(cov.layers.size()); ++l) {
    const auto& lc = cov.layers[l];
    for (int a = 0; a < cov.m; ++a) {
      for (int b = a; b < cov.m; ++b) {
        const std::size_t e = static_cast<std::size_t>(a) * cov.m + b;
        out += std::to_string(l + 1) + "," + std::to_string(a) + "," + std::to_string(b) +
               "," + format_double(lc.mean[e]) + "," + format_double(lc.std_error[e]) +
               "," + format_double(lc.theory[e]) + "," + format_double(cov.z_score(l, a, b)) +
               "," + format_double(lc.cross_mean[e]) + "," +
               format_double(lc.cross_std_error[e]) + "\n";
      }
    }
  }
  return out;
}

}  // namespace wideflow::sim
