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

#include "gauss_hermite.hpp"

#include <cmath>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.hpp"

namespace wideflow::gauss {
namespace {

TEST(Hermite, RecurrenceMatchesExplicitSum) {
  for (int n = 0; n <= 12; ++n) {
    for (double x : {-3.5, -1.0, -0.25, 0.0, 0.7, 2.0, 4.1}) {
      const double want = oracle::hermite_explicit(n, x);
      EXPECT_NEAR(hermite_eval(n, x), want, 1e-11 * std::max(1.0, std::abs(want)))
          << "n=" << n << " x=" << x;
    }
  }
}

TEST(Hermite, NormalizedFamilyIsScaledRecurrence) {
  std::vector<double> h(20);
  for (double x : {-2.0, 0.3, 5.0}) {
    hermite_normalized(x, h);
    for (int n = 0; n < 20; ++n) {
      EXPECT_NEAR(h[n], hermite_eval(n, x) / std::sqrt(factorial(n)),
                  1e-10 * std::max(1.0, std::abs(h[n])));
    }
  }
}

TEST(Hermite, NegativeDegreeRejected) {
  EXPECT_THROW(hermite_eval(-1, 0.0), Error);
}

TEST(CorrelationCoefficient, RejectsOutsideUnitInterval) {
  EXPECT_THROW(CorrelationCoefficient(1.0000001), Error);
  EXPECT_THROW(CorrelationCoefficient(std::nan("")), Error);
  EXPECT_EQ(CorrelationCoefficient(1.0).complement(), 0.0);
  EXPECT_EQ(CorrelationCoefficient(-1.0).complement(), 0.0);
}

TEST(Rule, WeightsFormProbability) {
  for (int order : {1, 2, 5, 16, 64, 128, 256}) {
    const auto r = make_rule(order);
    double total = 0.0;
    for (double w : r.weights) {
      EXPECT_GT(w, 0.0);
      total += w;
    }
    EXPECT_NEAR(total, 1.0, 1e-13) << order;
  }
}

TEST(Rule, NodesSymmetric) {
  const auto r = make_rule(33);
  for (std::size_t i = 0; i < r.order(); ++i) {
    EXPECT_EQ(r.nodes[i], -r.nodes[r.order() - 1 - i]);
    EXPECT_EQ(r.weights[i], r.weights[r.order() - 1 - i]);
  }
}

TEST(Rule, ExactOnEvenMoments) {
  // E[z^(2j)] = (2j - 1)!!
  const auto r = make_rule(20);
  double double_factorial = 1.0;
  for (int j = 1; j <= 19; ++j) {
    double_factorial *= 2 * j - 1;
    const double got = expect_1d([j](double x) { return std::pow(x, 2 * j); }, r);
    EXPECT_NEAR(got / double_factorial, 1.0, 1e-11) << "j=" << j;
  }
}

TEST(Rule, OrderOutOfRangeRejected) {
  EXPECT_THROW(make_rule(0), Error);
  EXPECT_THROW(make_rule(600), Error);
  EXPECT_NO_THROW(make_rule(600, 1024));
}

TEST(Rule, OrthogonalityOfHermiteFamily) {
  const auto r = make_rule(64);
  for (int n = 0; n <= 10; ++n) {
    for (int m = 0; m <= 10; ++m) {
      const double got = expect_1d(
          [n, m](double x) { return hermite_eval(n, x) * hermite_eval(m, x); }, r);
      const double want = n == m ? factorial(n) : 0.0;
      EXPECT_NEAR(got, want, 1e-9 * std::max(1.0, want)) << n << "," << m;
    }
  }
}

TEST(Mehler, ProductRuleMatchesIdentity) {
  const auto r = make_rule(kDefaultOrder);
  for (double k : {-0.9, -0.5, 0.0, 0.3, 0.7, 0.9}) {
    for (int n = 0; n <= 8; ++n) {
      for (int m = 0; m <= 8; ++m) {
        const double got = expect_2d_correlated(
            [n, m](double x, double y) { return hermite_eval(n, x) * hermite_eval(m, y); },
            CorrelationCoefficient(k), r);
        EXPECT_NEAR(got, mehler_moment(n, m, CorrelationCoefficient(k)), 1e-8)
            << "n=" << n << " m=" << m << " k=" << k;
      }
    }
  }
}

TEST(Mehler, ClosedFormValues) {
  EXPECT_DOUBLE_EQ(mehler_moment(3, 3, CorrelationCoefficient(0.5)), 6.0 * 0.125);
  EXPECT_EQ(mehler_moment(2, 3, CorrelationCoefficient(0.5)), 0.0);
  EXPECT_EQ(mehler_moment(0, 0, CorrelationCoefficient(-1.0)), 1.0);
}

TEST(PanelRule, KinkedIntegrandsAgreeWithSimpsonOracle) {
  const double breaks[] = {0.0};
  const auto r = make_panel_rule(PanelOptions{}, breaks);
  const auto relu = [](double x) { return x > 0 ? x : 0.0; };
  EXPECT_NEAR(expect_1d(relu, r), 1.0 / std::sqrt(2.0 * std::numbers::pi), 1e-13);
  EXPECT_NEAR(expect_1d(relu, r), oracle::gaussian_1d(relu), 1e-10);
  const auto steep = [](double x) { return std::tanh(4.0 * x) * std::tanh(4.0 * x); };
  EXPECT_NEAR(expect_1d(steep, make_panel_rule(PanelOptions{})), oracle::gaussian_1d(steep),
              1e-10);
}

TEST(PanelRule, WeightsIntegrateDensity) {
  const auto r = make_panel_rule(PanelOptions{});
  double total = 0.0;
  for (double w : r.weights) total += w;
  EXPECT_NEAR(total, 1.0, 1e-14);
}

TEST(PanelRule, BreakpointOutsideSpanIgnored) {
  const double breaks[] = {-40.0, 0.1, 40.0};
  const auto r = make_panel_rule(PanelOptions{}, breaks);
  for (double x : r.nodes) EXPECT_LE(std::abs(x), 12.0);
}

TEST(Correlated2d, ReluMatchesArcCosineKernel) {
  const double breaks[] = {0.0};
  const auto relu = [](double x) { return x > 0 ? x : 0.0; };
  for (double k : {-0.95, -0.4, 0.0, 0.25, 0.8, 0.99}) {
    const double got = expect_2d_correlated(
        [&](double x, double y) { return relu(x) * relu(y); }, CorrelationCoefficient(k),
        PanelOptions{}, breaks, breaks);
    EXPECT_NEAR(got, oracle::relu_kernel(k), 1e-12) << k;
  }
}

TEST(Correlated2d, SeparableAgreesWithGeneric) {
  const auto f = [](double x) { return std::tanh(4.0 * x); };
  for (double k : {-0.6, 0.3, 1.0}) {
    const CorrelationCoefficient kk(k);
    const double a = expect_2d_separable(f, f, kk, PanelOptions{}, {}, {});
    const double b = expect_2d_correlated([&](double x, double y) { return f(x) * f(y); },
                                          kk, PanelOptions{}, {}, {});
    EXPECT_NEAR(a, b, 1e-13) << k;
  }
}

TEST(Correlated2d, NonFiniteIntegrandReported) {
  const auto r = make_rule(16);
  try {
    expect_1d([](double x) { return x > 1.0 ? INFINITY : 0.0; }, r);
    FAIL() << "expected a non-finite error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kNonFinite);
  }
}

}  // namespace
}  // namespace wideflow::gauss
