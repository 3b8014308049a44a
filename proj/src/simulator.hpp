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

#ifndef WIDEFLOW_SIMULATOR_HPP_
#define WIDEFLOW_SIMULATOR_HPP_

// Seeded Monte Carlo simulation of finite-width random networks
//   z^(1) = b^(1) + W^(1) x,   z^(l) = b^(l) + W^(l) sigma(z^(l-1)),
// with W_ij ~ N(0, C_W / fan_in) and b_i ~ N(0, C_b). Draws are independent
// work units; every statistic is reduced in draw order, so reports are
// bit-identical for any worker count.

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "activations.hpp"
#include "covariance_flow.hpp"

namespace wideflow::sim {

struct NetworkConfig {
  int n0 = 1;
  int width = 2;
  int depth = 1;
  act::ActivationSpec activation;
  flow::CriticalHyperparams hyperparams;
  std::uint64_t seed = 0;

  /// Critical tuning for `activation`.
  static NetworkConfig critical(int n0, int width, int depth,
                                act::ActivationSpec activation, std::uint64_t seed);
  void validate() const;
};

/// m inputs of dimension n0, stored row-major.
struct Dataset {
  int n0 = 0;
  int m = 0;
  std::vector<double> inputs;

  std::span<const double> row(int alpha) const {
    return {inputs.data() + static_cast<std::size_t>(alpha) * n0,
            static_cast<std::size_t>(n0)};
  }

  static Dataset from_rows(const std::vector<std::vector<double>>& rows);
  /// Rows normalized to (1/n0)|x|^2 = 1 and no pair with |k| >= 1 - 1e-9.
  void validate() const;
};

/// Unit-normalized inputs in dimension n0 >= m whose pairwise initial
/// covariances equal the off-diagonal of `gram` (m x m, unit diagonal, PSD).
Dataset dataset_from_gram(const std::vector<std::vector<double>>& gram, int n0);

struct NetworkSample {
  NetworkConfig config;
  std::uint64_t draw = 0;
  std::vector<std::vector<double>> weights;  // per layer, width x fan_in
  std::vector<std::vector<double>> biases;   // per layer, width
};

/// Weight draw `draw` of the network. Pure function of (config.seed, draw).
NetworkSample sample_network(const NetworkConfig& config, std::uint64_t draw = 0);

/// Preactivations indexed (layer, input, neuron); layer 0 is z^(1).
struct Preactivations {
  int depth = 0;
  int m = 0;
  int width = 0;
  std::vector<double> values;

  std::span<const double> at(int layer, int alpha) const {
    return {values.data() + (static_cast<std::size_t>(layer) * m + alpha) * width,
            static_cast<std::size_t>(width)};
  }
  std::span<double> at(int layer, int alpha) {
    return {values.data() + (static_cast<std::size_t>(layer) * m + alpha) * width,
            static_cast<std::size_t>(width)};
  }
};

Preactivations forward(const NetworkSample& sample, const Dataset& dataset);

/// Same numbers as forward(sample_network(config, draw), dataset) without
/// materializing the weights.
void forward_draw(const NetworkConfig& config, std::uint64_t draw,
                  const Dataset& dataset, Preactivations& out);

struct LayerCovariance {
  // m x m, row-major.
  std::vector<double> mean;         // E[z_i^a z_i^b]
  std::vector<double> std_error;
  std::vector<double> theory;       // iterated covariance map
  std::vector<double> cross_mean;   // E[z_i^a z_j^b], i != j
  std::vector<double> cross_std_error;
};

struct EmpiricalCovariance {
  int m = 0;
  int width = 0;
  std::size_t sample_count = 0;
  std::vector<LayerCovariance> layers;

  double z_score(int layer, int a, int b) const;
  double max_abs_z() const;
};

/// Theory matrices G^(l), l = 1..depth, by iterating the covariance map on
/// the initial covariances.
std::vector<std::vector<double>> theory_covariances(const NetworkConfig& config,
                                                    const Dataset& dataset);

/// Monte Carlo over `samples` weight draws (>= 100). Standard errors treat
/// each draw as one observation.
EmpiricalCovariance estimate_covariance(const NetworkConfig& config,
                                        const Dataset& dataset, std::size_t samples,
                                        unsigned workers = 1);

struct FourPointReport {
  int width = 0;
  std::size_t samples = 0;
  double connected = 0.0;  // E[z_i^2 z_j^2] - E[z_i^2] E[z_j^2], i != j
  double std_error = 0.0;
  double second_moment = 0.0;
};

/// Writes one output vector of length `width` for the given draw.
using OutputSource = std::function<void(std::uint64_t draw, std::span<double> out)>;

FourPointReport connected_four_point(const OutputSource& source, int width,
                                     std::size_t samples, unsigned workers = 1);

/// Final-layer connected correlator for a single input.
FourPointReport four_point(const NetworkConfig& config, std::span<const double> input,
                           std::size_t samples, unsigned workers = 1);

struct FourPointScaling {
  FourPointReport narrow;
  FourPointReport wide;
  double ratio = 0.0;          // wide / narrow
  double discrepancy = 0.0;    // wide - narrow * narrow.width / wide.width
  double band = 0.0;           // 3 combined standard errors of the discrepancy
  bool consistent = false;     // |discrepancy| <= band
  bool inconclusive = false;   // both estimates within 3 errors of zero
};

/// Runs `narrow` and the same configuration at `wide_width`.
FourPointScaling four_point_scaling(const NetworkConfig& narrow, int wide_width,
                                    std::span<const double> input, std::size_t samples,
                                    unsigned workers = 1);

struct KurtosisEstimate {
  double excess = 0.0;
  double std_error = 0.0;
};

/// Excess kurtosis of pooled final-layer preactivations per input (moments
/// about zero, the exact mean). Requires samples * width >= 1e5.
std::vector<KurtosisEstimate> normality_diagnostics(const NetworkConfig& config,
                                                    const Dataset& dataset,
                                                    std::size_t samples,
                                                    unsigned workers = 1);

NetworkConfig config_from_json(const nlohmann::json& j);
Dataset dataset_from_json(const nlohmann::json& j);
nlohmann::json to_json(const NetworkConfig& config);
nlohmann::json to_json(const Dataset& dataset);
nlohmann::json to_json(const EmpiricalCovariance& cov);
nlohmann::json to_json(const FourPointReport& report);
nlohmann::json to_json(const KurtosisEstimate& k);
/// layer,alpha,beta,empirical,std_error,theory,z_score,cross,cross_std_error
std::string covariance_csv(const EmpiricalCovariance& cov);

}  // namespace wideflow::sim

#endif  // WIDEFLOW_SIMULATOR_HPP_
