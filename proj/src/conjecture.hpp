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

#ifndef WIDEFLOW_CONJECTURE_HPP_
#define WIDEFLOW_CONJECTURE_HPP_

// Rarity of the all-negative-output event for random networks R^n -> R^n
// evaluated on sign-vector inputs, against the prediction m * 2^-n that holds
// when output coordinates are independent and symmetric.

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "activations.hpp"
#include "simulator.hpp"

namespace wideflow::conj {

/// m x n matrix with entries in {-1, +1}, row-major.
struct SignDataset {
  int n = 0;
  int m = 0;
  std::vector<std::int8_t> signs;
  /// True for the full cube {-1,1}^n, the one dataset allowed to contain
  /// antipodal pairs.
  bool full_cube = false;

  /// No duplicate rows; no antipodal pair unless full_cube.
  void validate() const;
  sim::Dataset as_inputs() const;
};

/// m distinct sign vectors in dimension n, no two antipodal, drawn
/// deterministically from `seed`. Requires 2 <= n <= 62 and m <= 2^(n-1).
SignDataset generate_sign_dataset(int n, int m, std::uint64_t seed);

/// All 2^n sign vectors in lexicographic order (n <= 20).
SignDataset full_sign_cube(int n);

/// Cube when m == 2^n, otherwise a sampled dataset.
SignDataset dataset_for(int n, int m, std::uint64_t seed);

struct PropertyResult {
  std::vector<bool> all_negative;
  int violation_count = 0;
  bool property_holds = true;
};

/// Strict: an exact zero counts as non-negative.
bool is_all_negative(std::span<const double> output);

/// `outputs` holds one row of length `width` per input.
PropertyResult check_outputs(std::span<const double> outputs, int width);

PropertyResult check_property(const sim::NetworkSample& sample, const SignDataset& dataset);

/// ceil(c * log2(n)), at least 1.
int conjecture_depth(int n, double depth_constant = 1.0);

/// Critical network C : R^n -> R^n with depth from conjecture_depth.
sim::NetworkConfig conjecture_network(int n, double depth_constant,
                                      act::ActivationSpec activation, std::uint64_t seed);

enum class RarityMode { kNetwork, kIndependent };

std::string_view to_string(RarityMode mode);
RarityMode rarity_mode_from_string(std::string_view name);

struct RarityReport {
  RarityMode mode = RarityMode::kNetwork;
  int n = 0;
  int m = 0;
  int depth = 0;
  std::string activation;
  std::uint64_t seed = 0;
  std::size_t trials = 0;
  double empirical_violation_rate = 0.0;  // mean violations per network
  double std_error = 0.0;
  double ci_low = 0.0;                    // 95%
  double ci_high = 0.0;
  double independence_prediction = 0.0;   // m * 2^-n
  double binomial_std_error = 0.0;        // sqrt(m p (1 - p) / trials)
  double ratio = 0.0;                     // empirical / prediction
  double ratio_ci_low = 0.0;
  double ratio_ci_high = 0.0;
  double property_holds_fraction = 0.0;
  std::size_t total_violations = 0;
  bool underpowered = false;
};

/// Network mode: each trial is weight draw `trial` of `config` (width and n0
/// equal dataset.n). Independent mode replaces each output vector with
/// independent standard normals keyed by (seed, trial, input).
RarityReport estimate_rarity(const sim::NetworkConfig& config, const SignDataset& dataset,
                             std::size_t trials, RarityMode mode = RarityMode::kNetwork,
                             unsigned workers = 1);

nlohmann::json to_json(const RarityReport& report);
std::string summary_line(const RarityReport& report);

}  // namespace wideflow::conj

#endif  // WIDEFLOW_CONJECTURE_HPP_
