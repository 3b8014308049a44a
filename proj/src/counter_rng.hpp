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

#ifndef WIDEFLOW_COUNTER_RNG_HPP_
#define WIDEFLOW_COUNTER_RNG_HPP_

// Counter-based random streams. A stream is keyed by a tuple of coordinates
// such as (seed, draw, layer, row), so generation order and thread count
// never change the numbers. Mixing is the SplitMix64 finalizer; normals come
// from Boost's ziggurat sampler reading the stream sequentially.

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <span>

#include <boost/random/normal_distribution.hpp>

namespace wideflow::rng {

inline constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Stream key for a tuple of coordinates.
inline std::uint64_t stream_key(std::initializer_list<std::uint64_t> coords) {
  std::uint64_t h = 0x243f6a8885a308d3ULL;
  for (std::uint64_t c : coords) h = mix64(h + kGolden + mix64(c));
  return h;
}

/// 64 random bits at position `index` of stream `key`.
inline std::uint64_t bits(std::uint64_t key, std::uint64_t index) {
  return mix64(key + (index + 1) * kGolden);
}

/// Uniform on the open interval (0, 1) with 53-bit resolution.
inline double uniform(std::uint64_t key, std::uint64_t index) {
  return (static_cast<double>(bits(key, index) >> 11) + 0.5) * 0x1.0p-53;
}

/// Sequential view of one stream as a uniform random bit generator.
class StreamEngine {
 public:
  using result_type = std::uint64_t;
  explicit StreamEngine(std::uint64_t key) : key_(key) {}
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }
  result_type operator()() { return bits(key_, counter_++); }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// out[j] = scale * N_j, drawn in order from stream `key`.
inline void fill_normal(std::uint64_t key, std::span<double> out, double scale) {
  StreamEngine engine(key);
  boost::random::normal_distribution<double> normal;
  for (double& v : out) v = scale * normal(engine);
}

}  // namespace wideflow::rng

#endif  // WIDEFLOW_COUNTER_RNG_HPP_
