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
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "counter_rng.hpp"

namespace wideflow::sim {
namespace {

const std::vector<std::vector<double>> kGram = {
    {1.0, 0.8, 0.5, -0.3},
    {0.8, 1.0, 0.6, -0.1},
    {0.5, 0.6, 1.0, 0.2},
    {-0.3, -0.1, 0.2, 1.0},
};

NetworkConfig small_config(const char* activation, int width, int depth, int n0 = 8) {
  return NetworkConfig::critical(n0, width, depth, act::by_name(activation), 1234);
}

TEST(Dataset, GramConstructionReproducesCovariances) {
  const auto d = dataset_from_gram(kGram, 8);
  ASSERT_EQ(d.m, 4);
  for (int a = 0; a < 4; ++a) {
    for (int b = 0; b < 4; ++b) {
      EXPECT_NEAR(flow::initial_covariance(d.row(a), d.row(b)), kGram[a][b], 1e-14);
    }
  }
}

TEST(Dataset, RejectsIndefiniteGramAndTooSmallDimension) {
  EXPECT_THROW(dataset_from_gram({{1.0, 1.5}, {1.5, 1.0}}, 4), Error);
  EXPECT_THROW(dataset_from_gram(kGram, 3), Error);
}

TEST(Dataset, ValidationNamesOffendingRow) {
  try {
    Dataset::from_rows({{1.0, 1.0}, {2.0, 0.1}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kValidation);
    EXPECT_NE(std::string(e.what()).find("row 1"), std::string::npos) << e.what();
  }
  EXPECT_THROW(Dataset::from_rows({{1.0, 1.0}, {-1.0, -1.0}}), Error);  // scalar multiple
  EXPECT_THROW(Dataset::from_rows({{1.0, 1.0}, {1.0}}), Error);
  EXPECT_NO_THROW(Dataset::from_rows({{1.0, 1.0, 1.0, 1.0}}));
}

TEST(Config, ValidationAndCriticalCheck) {
  auto c = small_config("tanh", 16, 2);
  EXPECT_NO_THROW(c.validate());
  c.width = 1;
  EXPECT_THROW(c.validate(), Error);
  c = small_config("tanh", 16, 2);
  c.hyperparams.c_w = 1.0;
  EXPECT_THROW(c.validate(), Error);
}

TEST(Sample, DeterministicAndZeroBias) {
  const auto c = small_config("relu", 32, 3);
  const auto a = sample_network(c, 5);
  const auto b = sample_network(c, 5);
  EXPECT_EQ(a.weights, b.weights);
  for (const auto& layer : a.biases) {
    for (double v : layer) EXPECT_EQ(v, 0.0);
  }
  EXPECT_NE(sample_network(c, 6).weights, a.weights);
}

TEST(Sample, LayerWeightVariance) {
  const auto c = small_config("tanh", 512, 2);
  const auto s = sample_network(c, 0);
  const auto& w = s.weights[1];
  ASSERT_EQ(w.size(), 512u * 512u);
  double m2 = 0.0;
  for (double v : w) m2 += v * v;
  m2 /= static_cast<double>(w.size());
  EXPECT_NEAR(m2 / (c.hyperparams.c_w / 512.0), 1.0, 0.01);
  EXPECT_EQ(s.weights[0].size(), 512u * 8u);
}

TEST(Forward, StreamedDrawMatchesMaterializedSample) {
  const auto d = dataset_from_gram(kGram, 8);
  for (const char* name : {"relu", "tanh", "gelu-shifted"}) {
    const auto c = small_config(name, 64, 4);
    Preactivations streamed;
    forward_draw(c, 11, d, streamed);
    EXPECT_EQ(forward(sample_network(c, 11), d).values, streamed.values) << name;
  }
}

TEST(Forward, SingleIdentityLayerIsMatrixProduct) {
  auto c = NetworkConfig::critical(4, 2, 1, act::by_name("identity"), 3);
  const auto d = Dataset::from_rows({{1.0, -1.0, 1.0, 1.0}});
  const auto s = sample_network(c, 0);
  const auto z = forward(s, d);
  for (int i = 0; i < 2; ++i) {
    double want = 0.0;
    for (int j = 0; j < 4; ++j) want += s.weights[0][i * 4 + j] * d.row(0)[j];
    EXPECT_NEAR(z.at(0, 0)[i], want, 1e-15);
  }
}

TEST(Forward, IdenticalRowsGiveIdenticalOutputs) {
  Dataset d;
  d.n0 = 4;
  d.m = 2;
  d.inputs = {1, 1, -1, 1, 1, 1, -1, 1};
  const auto z = forward(sample_network(small_config("gelu", 32, 3, 4), 2), d);
  for (int l = 0; l < 3; ++l) {
    const auto a = z.at(l, 0), b = z.at(l, 1);
    EXPECT_TRUE(std::equal(a.begin(), a.end(), b.begin())) << l;
  }
}

TEST(Forward, DimensionMismatchRejected) {
  const auto d = Dataset::from_rows({{1.0, 1.0}});
  Preactivations z;
  EXPECT_THROW(forward_draw(small_config("tanh", 8, 1), 0, d, z), Error);
}

TEST(Theory, FirstLayerIsInputCovariance) {
  const auto d = dataset_from_gram(kGram, 8);
  const auto g = theory_covariances(small_config("tanh", 8, 3), d);
  ASSERT_EQ(g.size(), 3u);
  for (int a = 0; a < 4; ++a) {
    for (int b = 0; b < 4; ++b) EXPECT_NEAR(g[0][a * 4 + b], kGram[a][b], 1e-14);
    EXPECT_EQ(g[2][a * 4 + a], 1.0);
  }
  const flow::CovarianceMap map(act::by_name("tanh"));
  EXPECT_NEAR(g[1][1], map(0.8), 1e-15);
  EXPECT_NEAR(g[2][1], map(map(0.8)), 1e-15);
}

// A depth-1 identity network is exactly Gaussian with covariance G^(1).
TEST(Estimate, IdentityFirstLayerWithinFourErrors) {
  const auto d = dataset_from_gram(kGram, 8);
  const auto c = NetworkConfig::critical(8, 64, 1, act::by_name("identity"), 77);
  const auto cov = estimate_covariance(c, d, 400);
  EXPECT_LT(cov.max_abs_z(), 4.0);
  for (int a = 0; a < 4; ++a) {
    for (int b = 0; b < 4; ++b) {
      const auto e = static_cast<std::size_t>(a * 4 + b);
      EXPECT_LE(std::abs(cov.layers[0].cross_mean[e]), 4.0 * cov.layers[0].cross_std_error[e]);
    }
  }
}

TEST(Estimate, BitIdenticalAcrossWorkerCounts) {
  const auto d = dataset_from_gram(kGram, 8);
  const auto c = small_config("tanh", 48, 3);
  const auto one = to_json(estimate_covariance(c, d, 150, 1)).dump();
  const auto three = to_json(estimate_covariance(c, d, 150, 3)).dump();
  EXPECT_EQ(one, three);
  EXPECT_EQ(covariance_csv(estimate_covariance(c, d, 150, 2)),
            covariance_csv(estimate_covariance(c, d, 150, 1)));
}

TEST(Estimate, StandardErrorsHalveWithFourTimesSamples) {
  const auto d = dataset_from_gram(kGram, 8);
  const auto c = small_config("tanh", 64, 2);
  const auto a = estimate_covariance(c, d, 200);
  const auto b = estimate_covariance(c, d, 800);
  for (int l = 0; l < 2; ++l) {
    for (std::size_t e : {1u, 2u, 7u}) {
      const double ratio = a.layers[l].std_error[e] / b.layers[l].std_error[e];
      EXPECT_GT(ratio, 2.0 / 1.5) << l << "," << e;
      EXPECT_LT(ratio, 2.0 * 1.5) << l << "," << e;
    }
  }
}

TEST(Estimate, TrendsFollowTheFlow) {
  const auto d = dataset_from_gram(kGram, 8);
  const auto tanh = estimate_covariance(small_config("tanh", 256, 4), d, 200);
  const auto relu = estimate_covariance(small_config("relu", 256, 4), d, 200);
  // Entry (0, 1) starts at 0.8.
  for (int l = 1; l < 4; ++l) {
    const double dt = tanh.layers[l].mean[1] - tanh.layers[l - 1].mean[1];
    const double dr = relu.layers[l].mean[1] - relu.layers[l - 1].mean[1];
    EXPECT_LT(dt, 4.0 * tanh.layers[l].std_error[1]) << l;
    EXPECT_GT(dr, -4.0 * relu.layers[l].std_error[1]) << l;
  }
  EXPECT_LT(tanh.layers[3].mean[1], 0.8);
  EXPECT_GT(relu.layers[3].mean[1], 0.8);
}

TEST(Estimate, NeedsEnoughSamples) {
  const auto d = dataset_from_gram(kGram, 8);
  EXPECT_THROW(estimate_covariance(small_config("tanh", 8, 1), d, 99), Error);
}

TEST(FourPoint, IndependentGaussianSourceHasNoConnectedPart) {
  const OutputSource gaussian = [](std::uint64_t draw, std::span<double> out) {
    rng::fill_normal(rng::stream_key({99, draw}), out, 1.0);
  };
  const auto r = connected_four_point(gaussian, 64, 4000);
  EXPECT_LE(std::abs(r.connected), 4.0 * r.std_error);
  EXPECT_NEAR(r.second_moment, 1.0, 0.01);
}

TEST(FourPoint, SharedScaleGivesKnownConnectedPart) {
  // z_i = s * g_i with s^2 in {0.5, 1.5}: connected = Var(s^2) = 0.25.
  const OutputSource mixed = [](std::uint64_t draw, std::span<double> out) {
    rng::fill_normal(rng::stream_key({7, draw}), out, draw % 2 ? std::sqrt(1.5) : std::sqrt(0.5));
  };
  const auto r = connected_four_point(mixed, 64, 4000);
  EXPECT_NEAR(r.connected, 0.25, 4.0 * r.std_error);
}

TEST(FourPoint, IdentityDepthOneIsGaussian) {
  const auto c = NetworkConfig::critical(4, 64, 1, act::by_name("identity"), 5);
  const std::vector<double> x{1.0, -1.0, 1.0, 1.0};
  const auto r = four_point(c, x, 2000);
  EXPECT_LE(std::abs(r.connected), 4.0 * r.std_error);
}

TEST(FourPoint, DeterministicAcrossWorkers) {
  const auto c = small_config("tanh", 32, 3, 4);
  const std::vector<double> x{1.0, 1.0, 1.0, 1.0};
  const auto a = to_json(four_point(c, x, 300, 1)).dump();
  const auto b = to_json(four_point(c, x, 300, 4)).dump();
  EXPECT_EQ(a, b);
}

TEST(Normality, IdentityHasNoExcessKurtosis) {
  const auto d = Dataset::from_rows({{1.0, 1.0, 1.0, 1.0}, {1.0, -1.0, 1.0, -1.0}});
  const auto c = NetworkConfig::critical(4, 128, 1, act::by_name("identity"), 8);
  for (const auto& k : normality_diagnostics(c, d, 1000)) {
    EXPECT_LE(std::abs(k.excess), 4.0 * k.std_error);
  }
  EXPECT_THROW(normality_diagnostics(c, d, 100), Error);
}

TEST(Json, ConfigAndDataset) {
  const auto j = nlohmann::json::parse(R"({
    "n0": 8, "width": 16, "depth": 2, "activation": "tanh", "seed": 4})");
  const auto c = config_from_json(j);
  EXPECT_EQ(c.width, 16);
  EXPECT_EQ(c.seed, 4u);
  EXPECT_EQ(config_from_json(to_json(c)).hyperparams.c_w, c.hyperparams.c_w);
  EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"n0": 8})")), Error);
  const auto d = dataset_from_json(nlohmann::json{{"gram", kGram}, {"n0", 8}});
  EXPECT_EQ(d.m, 4);
  EXPECT_EQ(dataset_from_json(to_json(d)).inputs, d.inputs);
}

TEST(Csv, CovarianceHeaderAndRows) {
  const auto d = Dataset::from_rows({{1.0, 1.0}, {1.0, -1.0}});
  const auto c = NetworkConfig::critical(2, 8, 2, act::by_name("tanh"), 1);
  const auto csv = covariance_csv(estimate_covariance(c, d, 100));
  EXPECT_EQ(csv.rfind("layer,alpha,beta,empirical,std_error,theory,z_score,cross,cross_std_error\n", 0),
            0u);
  // Two layers x three upper-triangle entries.
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 7);
}

}  // namespace
}  // namespace wideflow::sim
