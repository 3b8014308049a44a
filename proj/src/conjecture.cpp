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

#include "conjecture.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <unordered_set>

#include "counter_rng.hpp"
#include "error.hpp"
#include "parallel.hpp"

namespace wideflow::conj {
namespace {

constexpr std::uint64_t kDatasetStream = 0x5167;
constexpr std::uint64_t kIndependentStream = 0x1d3e;

std::uint64_t pack(const std::int8_t* row, int n) {
  std::uint64_t bits = 0;
  for (int j = 0; j < n; ++j) {
    if (row[j] > 0) bits |= std::uint64_t{1} << j;
  }
  return bits;
}

std::uint64_t mask(int n) { return n == 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << n) - 1; }

// Representative of {x, -x}: the member with the last coordinate negative.
std::uint64_t canonical(std::uint64_t bits, int n) {
  return (bits >> (n - 1)) & 1 ? ~bits & mask(n) : bits;
}

}  // namespace

void SignDataset::validate() const {
  if (n < 1 || m < 1) fail_validation("sign dataset is empty");
  if (signs.size() != static_cast<std::size_t>(n) * m) {
    fail_validation("sign dataset storage does not match m x n");
  }
  for (std::int8_t s : signs) {
    if (s != 1 && s != -1) fail_validation("sign dataset entries must be -1 or +1");
  }
  if (n > 62) return;
  std::unordered_set<std::uint64_t> seen;
  for (int a = 0; a < m; ++a) {
    const std::uint64_t bits = pack(signs.data() + static_cast<std::size_t>(a) * n, n);
    const std::uint64_t key = full_cube ? bits : canonical(bits, n);
    if (!seen.insert(key).second) {
      std::ostringstream msg;
      msg << "sign dataset row " << a << " duplicates or negates an earlier row";
      fail_validation(msg.str());
    }
  }
  if (full_cube && m != (1 << n)) fail_validation("full cube must contain all 2^n rows");
}

sim::Dataset SignDataset::as_inputs() const {
  sim::Dataset d;
  d.n0 = n;
  d.m = m;
  d.inputs.assign(signs.begin(), signs.end());
  return d;
}

SignDataset generate_sign_dataset(int n, int m, std::uint64_t seed) {
  if (n < 2 || n > 62) fail_validation("sign dataset dimension must be in [2, 62]");
  const double classes = std::ldexp(1.0, n - 1);
  if (m < 1 || m > classes) {
    std::ostringstream msg;
    msg << "cannot draw " << m << " sign vectors in dimension " << n
        << " with no two equal or antipodal (at most 2^(n-1) = " << classes << ")";
    fail_validation(msg.str());
  }
  SignDataset d;
  d.n = n;
  d.m = m;
  d.signs.reserve(static_cast<std::size_t>(n) * m);
  std::unordered_set<std::uint64_t> used;
  const std::uint64_t key = rng::stream_key({seed, kDatasetStream});
  for (std::uint64_t draw = 0; static_cast<int>(used.size()) < m; ++draw) {
    const std::uint64_t bits = rng::bits(key, draw) & mask(n);
    if (!used.insert(canonical(bits, n)).second) continue;
    for (int j = 0; j < n; ++j) d.signs.push_back((bits >> j) & 1 ? 1 : -1);
  }
  return d;
}

SignDataset full_sign_cube(int n) {
  if (n < 1 || n > 20) fail_validation("full sign cube supports 1 <= n <= 20");
  SignDataset d;
  d.n = n;
  d.m = 1 << n;
  d.full_cube = true;
  d.signs.reserve(static_cast<std::size_t>(n) * d.m);
  for (int a = 0; a < d.m; ++a) {
    for (int j = n - 1; j >= 0; --j) d.signs.push_back((a >> j) & 1 ? 1 : -1);
  }
  return d;
}

SignDataset dataset_for(int n, int m, std::uint64_t seed) {
  if (n >= 1 && n <= 20 && m == (1 << n)) return full_sign_cube(n);
  return generate_sign_dataset(n, m, seed);
}

bool is_all_negative(std::span<const double> output) {
  return std::all_of(output.begin(), output.end(), [](double v) { return v < 0.0; });
}

PropertyResult check_outputs(std::span<const double> outputs, int width) {
  if (width < 1 || outputs.size() % width != 0) {
    fail_validation("output buffer is not a whole number of rows");
  }
  PropertyResult r;
  const std::size_t m = outputs.size() / width;
  r.all_negative.resize(m);
  for (std::size_t a = 0; a < m; ++a) {
    r.all_negative[a] = is_all_negative(outputs.subspan(a * width, width));
    r.violation_count += r.all_negative[a];
  }
  r.property_holds = r.violation_count == 0;
  return r;
}

PropertyResult check_property(const sim::NetworkSample& sample, const SignDataset& dataset) {
  const auto z = sim::forward(sample, dataset.as_inputs());
  const auto& c = sample.config;
  const std::size_t layer = static_cast<std::size_t>(c.depth - 1) * dataset.m * c.width;
  return check_outputs(
      std::span<const double>(z.values.data() + layer,
                              static_cast<std::size_t>(dataset.m) * c.width),
      c.width);
}

int conjecture_depth(int n, double depth_constant) {
  if (n < 2) fail_validation("conjecture dimension must be at least 2");
  if (!(depth_constant > 0.0)) fail_validation("depth constant must be positive");
  return std::max(1, static_cast<int>(std::ceil(depth_constant * std::log2(n) - 1e-12)));
}

sim::NetworkConfig conjecture_network(int n, double depth_constant,
                                      act::ActivationSpec activation, std::uint64_t seed) {
  return sim::NetworkConfig::critical(n, n, conjecture_depth(n, depth_constant),
                                      std::move(activation), seed);
}

std::string_view to_string(RarityMode mode) {
  return mode == RarityMode::kNetwork ? "network" : "independent";
}

RarityMode rarity_mode_from_string(std::string_view name) {
  if (name == "network") return RarityMode::kNetwork;
  if (name == "independent") return RarityMode::kIndependent;
  fail_validation("unknown rarity mode '" + std::string(name) +
                  "' (expected network or independent)");
}

RarityReport estimate_rarity(const sim::NetworkConfig& config, const SignDataset& dataset,
                             std::size_t trials, RarityMode mode, unsigned workers) {
  config.validate();
  dataset.validate();
  if (trials < 100) fail_validation("rarity estimation needs at least 100 trials");
  if (config.width != dataset.n || config.n0 != dataset.n) {
    fail_validation("conjecture network must map R^n to R^n with n = dataset dimension");
  }
  const int n = dataset.n;
  const int m = dataset.m;
  const sim::Dataset inputs = dataset.as_inputs();
  std::vector<int> violations(trials);

  parallel_for(trials, resolve_workers(workers), [&](std::size_t t) {
    if (mode == RarityMode::kNetwork) {
      sim::Preactivations z;
      sim::forward_draw(config, t, inputs, z);
      int count = 0;
      for (int a = 0; a < m; ++a) count += is_all_negative(z.at(config.depth - 1, a));
      violations[t] = count;
    } else {
      std::vector<double> out(n);
      int count = 0;
      for (int a = 0; a < m; ++a) {
        rng::fill_normal(rng::stream_key({config.seed, kIndependentStream, t,
                                          static_cast<std::uint64_t>(a)}),
                         out, 1.0);
        count += is_all_negative(out);
      }
      violations[t] = count;
    }
  });

  RarityReport r;
  r.mode = mode;
  r.n = n;
  r.m = m;
  r.depth = config.depth;
  r.activation = config.activation.id;
  r.seed = config.seed;
  r.trials = trials;
  const auto stats = mean_and_error(trials, [&](std::size_t t) {
    return static_cast<double>(violations[t]);
  });
  r.empirical_violation_rate = stats.mean;
  r.std_error = stats.std_error;
  std::size_t holds = 0;
  for (int v : violations) {
    r.total_violations += v;
    holds += v == 0;
  }
  r.property_holds_fraction = static_cast<double>(holds) / trials;
  const double p = std::ldexp(1.0, -n);
  r.independence_prediction = m * p;
  r.binomial_std_error = std::sqrt(m * p * (1.0 - p) / trials);
  if (r.total_violations == 0) {
    r.ci_low = 0.0;
    r.ci_high = 3.0 / trials;
  } else {
    r.ci_low = std::max(0.0, stats.mean - 1.96 * stats.std_error);
    r.ci_high = std::min<double>(m, stats.mean + 1.96 * stats.std_error);
  }
  r.ratio = stats.mean / r.independence_prediction;
  r.ratio_ci_low = r.ci_low / r.independence_prediction;
  r.ratio_ci_high = r.ci_high / r.independence_prediction;
  r.underpowered = r.total_violations == 0 && r.independence_prediction * trials < 5.0;
  return r;
}

nlohmann::json to_json(const RarityReport& r) {
  return {
      {"mode", to_string(r.mode)},
      {"n", r.n},
      {"m", r.m},
      {"depth", r.depth},
      {"activation", r.activation},
      {"seed", r.seed},
      {"trials", r.trials},
      {"empirical_violation_rate", r.empirical_violation_rate},
      {"std_error", r.std_error},
      {"confidence_interval", {r.ci_low, r.ci_high}},
      {"independence_prediction", r.independence_prediction},
      {"binomial_std_error", r.binomial_std_error},
      {"ratio", r.ratio},
      {"ratio_confidence_interval", {r.ratio_ci_low, r.ratio_ci_high}},
      {"property_holds_fraction", r.property_holds_fraction},
      {"total_violations", r.total_violations},
      {"underpowered", r.underpowered},
  };
}

std::string summary_line(const RarityReport& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "rate %.6g per network, prediction %.6g, ratio %.4g, 95%% CI [%.6g, %.6g]%s",
                r.empirical_violation_rate, r.independence_prediction, r.ratio, r.ci_low,
                r.ci_high, r.underpowered ? " (underpowered)" : "");
  return buf;
}

}  // namespace wideflow::conj
