/*
 * Copyright 2026 The ModalLens Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <thread>

#include "httplib.h"
#include "modallens/attribution/pipeline.h"
#include "modallens/attribution/provider.h"
#include "modallens/attribution/remote_provider.h"
#include "modallens/attribution/shapley.h"
#include "modallens/common/error.h"
#include "tests/support/fixtures.h"
#include "tests/support/shapley_oracle.h"

namespace modallens::attribution {
namespace {

using testing::ErrorKindOf;
using testing::PermutationShapley;
using testing::RandomGame;
using testing::RandomVector;
using testing::VectorBackground;
using testing::VectorFn;
using testing::VectorInstance;
using testing::VectorProvider;

// ---- masking ----

TEST(MaskInput, FullCoalitionReproducesInput) {
  const auto schema = testing::TinySchema();
  const Dataset data = testing::RandomDataset(3, schema, 4);
  const auto bg = BackgroundSet::FromInstances(data.instances());
  const Instance& x = data[0];
  for (Granularity g : {Granularity::kFeature, Granularity::kTimeStep, Granularity::kCell}) {
    const auto units = MakeUnits(x, g);
    const std::vector<std::uint8_t> all(units.size(), 1);
    EXPECT_EQ(MaskInput(x, units, all, bg), x.features);
  }
}

TEST(MaskInput, EmptyCoalitionIsBackgroundMean) {
  const auto schema = testing::TinySchema();
  const Dataset data = testing::RandomDataset(4, schema, 5);
  const auto bg = BackgroundSet::FromInstances(data.instances());
  const Instance& x = data[1];
  const auto units = MakeUnits(x, Granularity::kFeature);
  const std::vector<std::uint8_t> none(units.size(), 0);
  const FeatureTriple masked = MaskInput(x, units, none, bg);
  for (Modality m : kModalities) {
    // Oracle: per-dimension mean over every row of every reference.
    const std::size_t dims = schema.dims(m);
    std::vector<double> mean(dims, 0.0);
    double rows = 0.0;
    for (const Instance& r : data.instances()) {
      for (std::size_t t = 0; t < r.length(); ++t) {
        for (std::size_t d = 0; d < dims; ++d) mean[d] += r.features[Index(m)](t, d);
        rows += 1.0;
      }
    }
    for (std::size_t t = 0; t < x.length(); ++t) {
      for (std::size_t d = 0; d < dims; ++d) {
        EXPECT_NEAR(masked[Index(m)](t, d), mean[d] / rows, 1e-12);
      }
    }
  }
}

TEST(MaskInput, SingleLanguageFeatureWithZeroBackground) {
  const auto schema = testing::TinySchema();
  std::mt19937_64 rng(5);
  const Instance x = testing::RandomInstance(rng, schema, "a", 3);
  const auto units = MakeUnits(x, Granularity::kFeature);
  std::vector<std::uint8_t> present(units.size(), 0);
  present[1] = 1;  // language dim 1
  ASSERT_EQ(units[1].modality, Modality::kLanguage);
  ASSERT_EQ(units[1].dim, 1u);
  const FeatureTriple masked = MaskInput(x, units, present, BackgroundSet::Zero(schema));
  for (Modality m : kModalities) {
    const Matrix& mat = masked[Index(m)];
    for (std::size_t t = 0; t < mat.rows(); ++t) {
      for (std::size_t d = 0; d < mat.cols(); ++d) {
        const bool keep = m == Modality::kLanguage && d == 1;
        EXPECT_EQ(mat(t, d), keep ? x.features[0](t, 1) : 0.0);
      }
    }
  }
}

TEST(Units, PartitionEveryGranularity) {
  const auto schema = testing::TinySchema();
  std::mt19937_64 rng(6);
  const Instance x = testing::RandomInstance(rng, schema, "a", 4);
  EXPECT_EQ(MakeUnits(x, Granularity::kFeature).size(), 2u + 3u + 7u);
  EXPECT_EQ(MakeUnits(x, Granularity::kTimeStep).size(), 3u * 4u);
  EXPECT_EQ(MakeUnits(x, Granularity::kCell).size(), 4u * (2u + 3u + 7u));
  // Each cell is covered by exactly one unit.
  for (Granularity g : {Granularity::kFeature, Granularity::kTimeStep, Granularity::kCell}) {
    const auto units = MakeUnits(x, g);
    std::vector<std::uint8_t> present(units.size(), 0);
    const auto zero = BackgroundSet::Zero(schema);
    for (std::size_t i = 0; i < units.size(); ++i) {
      std::fill(present.begin(), present.end(), 0);
      present[i] = 1;
      const FeatureTriple one = MaskInput(x, units, present, zero);
      std::size_t kept = 0;
      for (const Matrix& mat : one) {
        for (double v : mat.data()) kept += v != 0.0;
      }
      const std::size_t expected = g == Granularity::kCell      ? 1
                                   : g == Granularity::kFeature ? 4
                                   : schema.dims(units[i].modality);
      EXPECT_EQ(kept, expected);
    }
  }
}

// ---- exact oracle ----

TEST(ExactShapley, LinearGame) {
  const VectorFn fn = [](const std::vector<double>& v) { return 2 * v[0] + v[1] - v[2]; };
  auto provider = VectorProvider(fn, "2a+b-c");
  const Instance x = VectorInstance({1, 1, 1});
  const auto record = ExactShapley(provider, x, VectorBackground({0, 0, 0}),
                                   MakeUnits(x, Granularity::kFeature));
  const auto oracle = PermutationShapley(fn, {1, 1, 1}, {0, 0, 0});
  ASSERT_EQ(record.values.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(record.values[i], oracle[i], 1e-12);
  EXPECT_NEAR(record.values[0], 2.0, 1e-12);
  EXPECT_NEAR(record.values[1], 1.0, 1e-12);
  EXPECT_NEAR(record.values[2], -1.0, 1e-12);
  EXPECT_DOUBLE_EQ(record.base_value, 0.0);
  EXPECT_DOUBLE_EQ(record.prediction, 2.0);
}

TEST(ExactShapley, ProductGameIsSymmetric) {
  auto provider = VectorProvider([](const std::vector<double>& v) { return v[0] * v[1]; }, "ab");
  const Instance x = VectorInstance({1, 1});
  const auto r = ExactShapley(provider, x, VectorBackground({0, 0}),
                              MakeUnits(x, Granularity::kFeature));
  EXPECT_NEAR(r.values[0], 0.5, 1e-12);
  EXPECT_NEAR(r.values[1], 0.5, 1e-12);
}

TEST(ExactShapley, DummyPlayersGetZero) {
  auto provider = VectorProvider([](const std::vector<double>& v) { return std::exp(v[0]); }, "a");
  const Instance x = VectorInstance({0.7, -2.0, 3.0});
  const auto r = ExactShapley(provider, x, VectorBackground({0.1, 0.2, 0.3}),
                              MakeUnits(x, Granularity::kFeature));
  EXPECT_LE(std::abs(r.values[1]), 1e-12);
  EXPECT_LE(std::abs(r.values[2]), 1e-12);
  EXPECT_NEAR(r.values[0], std::exp(0.7) - std::exp(0.1), 1e-12);
}

TEST(ExactShapley, MatchesPermutationOracleOnRandomGames) {
  std::mt19937_64 rng(11);
  for (std::size_t m = 1; m <= 7; ++m) {
    for (std::uint64_t trial = 0; trial < 3; ++trial) {
      const VectorFn fn = RandomGame(100 * m + trial, m);
      const auto xv = RandomVector(rng, m);
      const auto bv = RandomVector(rng, m);
      auto provider = VectorProvider(fn, "game");
      const Instance x = VectorInstance(xv);
      const auto r =
          ExactShapley(provider, x, VectorBackground(bv), MakeUnits(x, Granularity::kFeature));
      const auto oracle = PermutationShapley(fn, xv, bv);
      for (std::size_t i = 0; i < m; ++i) EXPECT_NEAR(r.values[i], oracle[i], 1e-10);
      EXPECT_LE(r.LocalAccuracyGap(), 1e-9);
    }
  }
}

TEST(ExactShapley, SymmetricPlayersAreEqual) {
  // Players 0 and 2 enter symmetrically, as do 1 and 3.
  const VectorFn fn = [](const std::vector<double>& v) {
    return std::sin(v[0] + v[2]) * (v[1] * v[3] + 1.0) + v[0] * v[2];
  };
  auto provider = VectorProvider(fn, "sym");
  const Instance x = VectorInstance({0.4, -0.3, 0.4, -0.3});
  const auto r = ExactShapley(provider, x, VectorBackground({0, 0, 0, 0}),
                              MakeUnits(x, Granularity::kFeature));
  EXPECT_NEAR(r.values[0], r.values[2], 1e-14);
  EXPECT_NEAR(r.values[1], r.values[3], 1e-14);
}

TEST(ExactShapley, IsLinearInTheGame) {
  const VectorFn f = RandomGame(1, 5);
  const VectorFn g = RandomGame(2, 5);
  const VectorFn sum = [&](const std::vector<double>& v) { return f(v) + g(v); };
  std::mt19937_64 rng(3);
  const auto xv = RandomVector(rng, 5);
  const auto bv = RandomVector(rng, 5);
  const Instance x = VectorInstance(xv);
  const auto units = MakeUnits(x, Granularity::kFeature);
  auto pf = VectorProvider(f, "f");
  auto pg = VectorProvider(g, "g");
  auto ps = VectorProvider(sum, "f+g");
  const auto rf = ExactShapley(pf, x, VectorBackground(bv), units);
  const auto rg = ExactShapley(pg, x, VectorBackground(bv), units);
  const auto rs = ExactShapley(ps, x, VectorBackground(bv), units);
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_NEAR(rs.values[i], rf.values[i] + rg.values[i], 1e-12);
  }
}

TEST(ExactShapley, LocalAccuracyAtTheEnumerationBound) {
  const std::size_t m = 20;
  const VectorFn fn = RandomGame(20, m);
  std::mt19937_64 rng(20);
  const auto xv = RandomVector(rng, m);
  auto provider = VectorProvider(fn, "game20");
  const Instance x = VectorInstance(xv);
  const auto r = ExactShapley(provider, x, VectorBackground(std::vector<double>(m, 0.0)),
                              MakeUnits(x, Granularity::kFeature));
  EXPECT_LE(r.LocalAccuracyGap(), 1e-9 * std::ldexp(1.0, 20));
}

TEST(ExactShapley, RejectsTooManyUnits) {
  auto provider = VectorProvider([](const std::vector<double>&) { return 0.0; }, "zero");
  const Instance x = VectorInstance(std::vector<double>(21, 1.0));
  EXPECT_EQ(ErrorKindOf([&] {
              ExactShapley(provider, x, VectorBackground(std::vector<double>(21, 0.0)),
                           MakeUnits(x, Granularity::kFeature));
            }),
            ErrorKind::kTooManyUnits);
}

TEST(ExactShapley, ProviderFailureCarriesCoalitionContext) {
  FunctionProvider provider([](const FeatureTriple&) -> double { throw std::runtime_error("boom"); },
                            "broken");
  const Instance x = VectorInstance({1, 2}, "clip_9");
  try {
    ExactShapley(provider, x, VectorBackground({0, 0}), MakeUnits(x, Granularity::kFeature));
    FAIL() << "expected ProviderError";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kProvider);
    EXPECT_NE(std::string(e.what()).find("clip_9"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("coalitions"), std::string::npos);
  }
}

// ---- kernel weights and coalition plans ----

TEST(ShapleyKernelWeight, Examples) {
  EXPECT_DOUBLE_EQ(ShapleyKernelWeight(4, 1), 3.0 / (4.0 * 1.0 * 3.0));
  EXPECT_DOUBLE_EQ(ShapleyKernelWeight(4, 1), 0.25);
  EXPECT_DOUBLE_EQ(ShapleyKernelWeight(4, 2), 0.125);
  EXPECT_EQ(ErrorKindOf([] { ShapleyKernelWeight(4, 0); }), ErrorKind::kArgument);
  EXPECT_EQ(ErrorKindOf([] { ShapleyKernelWeight(4, 4); }), ErrorKind::kArgument);
}

TEST(ShapleyKernelWeight, Symmetric) {
  for (std::size_t m = 2; m <= 30; ++m) {
    for (std::size_t s = 1; s < m; ++s) {
      EXPECT_NEAR(ShapleyKernelWeight(m, s), ShapleyKernelWeight(m, m - s),
                  1e-15 * ShapleyKernelWeight(m, s));
    }
  }
}

TEST(PlanCoalitions, FullBudgetEnumeratesEveryProperCoalitionOnce) {
  for (std::size_t m = 2; m <= 10; ++m) {
    const std::size_t proper = (std::size_t{1} << m) - 2;
    const auto plan = PlanCoalitions(m, proper, 7);
    ASSERT_EQ(plan.size(), proper) << "m=" << m;
    std::vector<int> seen(std::size_t{1} << m, 0);
    for (const auto& c : plan) {
      std::size_t bits = 0, size = 0;
      for (std::size_t i = 0; i < m; ++i) {
        if (c.present[i]) {
          bits |= std::size_t{1} << i;
          ++size;
        }
      }
      ++seen[bits];
      // Oracle weight straight from the binomial formula.
      double binom = 1.0;
      for (std::size_t k = 1; k <= size; ++k) binom = binom * double(m - size + k) / double(k);
      EXPECT_NEAR(c.weight, double(m - 1) / (binom * double(size) * double(m - size)), 1e-15);
    }
    EXPECT_EQ(seen.front(), 0);
    EXPECT_EQ(seen.back(), 0);
    for (std::size_t b = 1; b + 1 < seen.size(); ++b) EXPECT_EQ(seen[b], 1);
  }
}

TEST(PlanCoalitions, PartialBudgetIsDeterministicAndPreservesMass) {
  const std::size_t m = 16;
  const auto a = PlanCoalitions(m, 300, 42);
  const auto b = PlanCoalitions(m, 300, 42);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].present, b[i].present);
    EXPECT_EQ(a[i].weight, b[i].weight);
  }
  EXPECT_LE(a.size(), 300u);
  EXPECT_GE(a.size(), 290u);
  // Total weight equals the full kernel mass sum_s (M-1)/(s(M-s)).
  double mass = 0.0, expected = 0.0;
  for (const auto& c : a) mass += c.weight;
  for (std::size_t s = 1; s < m; ++s) expected += double(m - 1) / double(s * (m - s));
  EXPECT_NEAR(mass, expected, 1e-9 * expected);
}

// ---- kernel SHAP ----

TEST(KernelShap, FullEnumerationMatchesExactOnLinearGame) {
  const VectorFn fn = [](const std::vector<double>& v) { return 2 * v[0] + v[1] - v[2]; };
  auto provider = VectorProvider(fn, "2a+b-c");
  const Instance x = VectorInstance({1, 1, 1});
  const auto r = KernelShap(provider, x, VectorBackground({0, 0, 0}),
                            MakeUnits(x, Granularity::kFeature), {6, 0, 3});
  EXPECT_NEAR(r.values[0], 2.0, 1e-6);
  EXPECT_NEAR(r.values[1], 1.0, 1e-6);
  EXPECT_NEAR(r.values[2], -1.0, 1e-6);
}

TEST(KernelShap, FullEnumerationMatchesExactOnRandomGames) {
  std::mt19937_64 rng(17);
  for (std::size_t m = 3; m <= 10; ++m) {
    const VectorFn fn = RandomGame(900 + m, m);
    const auto xv = RandomVector(rng, m);
    const auto bv = RandomVector(rng, m);
    auto provider = VectorProvider(fn, "game");
    const Instance x = VectorInstance(xv);
    const auto units = MakeUnits(x, Granularity::kFeature);
    const auto exact = ExactShapley(provider, x, VectorBackground(bv), units);
    const auto kernel = KernelShap(provider, x, VectorBackground(bv), units,
                                   {(std::size_t{1} << m) - 2, 5, 3});
    for (std::size_t i = 0; i < m; ++i) {
      EXPECT_NEAR(kernel.values[i], exact.values[i], 1e-6) << "m=" << m << " i=" << i;
    }
    EXPECT_LE(kernel.LocalAccuracyGap(), 1e-9);
  }
}

TEST(KernelShap, OneAndTwoUnits) {
  const VectorFn fn = [](const std::vector<double>& v) {
    return v.size() == 1 ? 3 * v[0] : v[0] * v[1] + v[1];
  };
  auto provider = VectorProvider(fn, "tiny");
  const Instance one = VectorInstance({2});
  const auto r1 = KernelShap(provider, one, VectorBackground({0}),
                             MakeUnits(one, Granularity::kFeature), {1, 0, 3});
  ASSERT_EQ(r1.values.size(), 1u);
  EXPECT_DOUBLE_EQ(r1.values[0], 6.0);

  const Instance two = VectorInstance({2, 3});
  const auto units = MakeUnits(two, Granularity::kFeature);
  const auto exact = ExactShapley(provider, two, VectorBackground({0, 0}), units);
  const auto r2 = KernelShap(provider, two, VectorBackground({0, 0}), units, {2, 0, 3});
  EXPECT_NEAR(r2.values[0], exact.values[0], 1e-9);
  EXPECT_NEAR(r2.values[1], exact.values[1], 1e-9);
  EXPECT_EQ(ErrorKindOf([&] { KernelShap(provider, two, VectorBackground({0, 0}), units, {1, 0, 3}); }),
            ErrorKind::kArgument);
}

TEST(KernelShap, SameSeedIsBitIdentical) {
  const std::size_t m = 18;
  const VectorFn fn = RandomGame(5, m);
  std::mt19937_64 rng(9);
  const Instance x = VectorInstance(RandomVector(rng, m));
  const auto bg = VectorBackground(RandomVector(rng, m));
  auto provider = VectorProvider(fn, "game");
  const auto units = MakeUnits(x, Granularity::kFeature);
  const auto a = KernelShap(provider, x, bg, units, {512, 77, 3});
  const auto b = KernelShap(provider, x, bg, units, {512, 77, 3});
  EXPECT_EQ(a.values, b.values);
  EXPECT_LE(a.LocalAccuracyGap(), 1e-6);
}

TEST(KernelShap, ConstantGameGivesZeros) {
  auto provider = VectorProvider([](const std::vector<double>&) { return 4.25; }, "const");
  std::mt19937_64 rng(2);
  const Instance x = VectorInstance(RandomVector(rng, 14));
  const auto r = KernelShap(provider, x, VectorBackground(RandomVector(rng, 14)),
                            MakeUnits(x, Granularity::kFeature), {200, 1, 3});
  for (double v : r.values) EXPECT_LE(std::abs(v), 1e-9);
}

TEST(KernelShap, SampledAdditiveGameIsRecovered) {
  // For an additive game every coalition fits exactly, so any plan that
  // identifies the system recovers the exact values.
  const std::size_t m = 24;
  std::mt19937_64 rng(8);
  const auto w = RandomVector(rng, m);
  const VectorFn fn = [w](const std::vector<double>& v) {
    double s = 0.5;
    for (std::size_t i = 0; i < v.size(); ++i) s += w[i] * v[i];
    return s;
  };
  const auto xv = RandomVector(rng, m);
  const auto bv = RandomVector(rng, m);
  auto provider = VectorProvider(fn, "additive");
  const Instance x = VectorInstance(xv);
  const auto r = KernelShap(provider, x, VectorBackground(bv),
                            MakeUnits(x, Granularity::kFeature), {1024, 3, 3});
  for (std::size_t i = 0; i < m; ++i) EXPECT_NEAR(r.values[i], w[i] * (xv[i] - bv[i]), 1e-6);
}

TEST(KernelShap, TinyBudgetStillSatisfiesLocalAccuracy) {
  const std::size_t m = 30;
  const VectorFn fn = RandomGame(31, m);
  std::mt19937_64 rng(31);
  auto provider = VectorProvider(fn, "game");
  const Instance x = VectorInstance(RandomVector(rng, m));
  const auto r = KernelShap(provider, x, VectorBackground(RandomVector(rng, m)),
                            MakeUnits(x, Granularity::kFeature), {m + 2, 0, 3});
  for (double v : r.values) EXPECT_TRUE(std::isfinite(v));
  EXPECT_LE(r.LocalAccuracyGap(), 1e-6);
}

TEST(KernelShap, Preconditions) {
  auto provider = VectorProvider([](const std::vector<double>& v) { return v[0]; }, "a");
  const Instance four = VectorInstance({1, 2, 3, 4});
  EXPECT_EQ(ErrorKindOf([&] {
              KernelShap(provider, four, VectorBackground({0, 0, 0, 0}),
                         MakeUnits(four, Granularity::kFeature), {5, 0, 3});
            }),
            ErrorKind::kArgument);
}

// ---- linear closed form ----

TEST(LinearShap, Example) {
  const Instance x = VectorInstance({1, 1, 1});
  const FeatureTriple w = {Matrix(1, 3, {2, 1, -1}), Matrix(1, 0), Matrix(1, 0)};
  const FeatureTriple mu = {Matrix(1, 3, {0, 0, 0}), Matrix(1, 0), Matrix(1, 0)};
  const auto r = LinearShap(w, 0.0, x, mu);
  EXPECT_EQ(r.values, (std::vector<double>{2, 1, -1}));
  EXPECT_DOUBLE_EQ(r.base_value, 0.0);
  // Cross-check against the exact oracle.
  auto provider = VectorProvider(
      [](const std::vector<double>& v) { return 2 * v[0] + v[1] - v[2]; }, "lin");
  const auto exact = ExactShapley(provider, x, VectorBackground({0, 0, 0}),
                                  MakeUnits(x, Granularity::kCell));
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(r.values[i], exact.values[i], 1e-12);
}

TEST(LinearShap, InputAtMeanAndScaling) {
  const Instance x = VectorInstance({0.5, -1, 2});
  const FeatureTriple mu = {Matrix(1, 3, {0.5, -1, 2}), Matrix(1, 0), Matrix(1, 0)};
  const FeatureTriple w = {Matrix(1, 3, {3, -2, 0.5}), Matrix(1, 0), Matrix(1, 0)};
  for (double v : LinearShap(w, 1.0, x, mu).values) EXPECT_EQ(v, 0.0);
  const FeatureTriple mu0 = {Matrix(1, 3, {0, 0, 0}), Matrix(1, 0), Matrix(1, 0)};
  const FeatureTriple w3 = {Matrix(1, 3, {9, -6, 1.5}), Matrix(1, 0), Matrix(1, 0)};
  const auto base = LinearShap(w, 1.0, x, mu0);
  const auto scaled = LinearShap(w3, 1.0, x, mu0);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(scaled.values[i], 3.0 * base.values[i], 1e-12);
}

TEST(LinearShap, ShapeMismatch) {
  const Instance x = VectorInstance({1, 1, 1});
  const FeatureTriple w = {Matrix(1, 2, {2, 1}), Matrix(1, 0), Matrix(1, 0)};
  const FeatureTriple mu = {Matrix(1, 3, {0, 0, 0}), Matrix(1, 0), Matrix(1, 0)};
  EXPECT_EQ(ErrorKindOf([&] { LinearShap(w, 0.0, x, mu); }), ErrorKind::kShape);
}

TEST(LinearShap, CoarsenedMatchesExactOnLinearProvider) {
  const auto schema = testing::TinySchema();
  const Dataset data = testing::RandomDataset(12, schema, 6);
  std::mt19937_64 rng(12);
  std::normal_distribution<double> n01;
  PerModality<std::vector<double>> weights;
  for (Modality m : kModalities) {
    for (std::size_t d = 0; d < schema.dims(m); ++d) weights[Index(m)].push_back(n01(rng));
  }
  LinearProvider provider(weights, 0.3);
  const auto bg = BackgroundSet::FromInstances(data.instances());
  for (const Instance& x : data.instances()) {
    const auto cells = LinearShap(provider.CellWeights(x.length()), 0.3, x, bg.MeanTriple(x));
    for (Granularity g : {Granularity::kFeature, Granularity::kTimeStep}) {
      const auto coarse = Coarsen(cells, x, g);
      const auto exact = ExactShapley(provider, x, bg, MakeUnits(x, g));
      ASSERT_EQ(coarse.units, exact.units);
      for (std::size_t i = 0; i < exact.values.size(); ++i) {
        EXPECT_NEAR(coarse.values[i], exact.values[i], 1e-12);
      }
      EXPECT_NEAR(coarse.base_value, exact.base_value, 1e-12);
      EXPECT_NEAR(coarse.prediction, exact.prediction, 1e-12);
    }
  }
}

TEST(AttributionRecord, JsonRoundTrip) {
  const auto schema = testing::TinySchema();
  const Dataset data = testing::RandomDataset(13, schema, 2);
  MlpToyProvider provider(schema, 4);
  const auto bg = BackgroundSet::FromInstances(data.instances());
  const auto r = ExactShapley(provider, data[0], bg, MakeUnits(data[0], Granularity::kFeature));
  EXPECT_EQ(RecordFromJson(nlohmann::json::parse(RecordToJson(r).dump())), r);
}

// ---- dataset pass ----

LinearProvider TinyLinear(const FeatureSchema& schema, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n01;
  PerModality<std::vector<double>> weights;
  for (Modality m : kModalities) {
    for (std::size_t d = 0; d < schema.dims(m); ++d) weights[Index(m)].push_back(n01(rng));
  }
  return LinearProvider(weights, -0.2);
}

TEST(AttributeDataset, LinearProviderTenInstances) {
  const auto schema = testing::TinySchema();
  const Dataset data = testing::RandomDataset(21, schema, 10);
  LinearProvider provider = TinyLinear(schema, 1);
  const Store store(testing::TempDir("attr_linear"));
  AttributionConfig config;
  const auto run = AttributeDataset(provider, data, schema, config, &store);
  ASSERT_EQ(run.records.size(), 10u);
  EXPECT_TRUE(run.complete());
  for (const auto& [id, a] : run.records) {
    EXPECT_EQ(a.primary.granularity, Granularity::kFeature);
    EXPECT_EQ(a.primary.method, "linear");
    EXPECT_LE(a.primary.LocalAccuracyGap(), 1e-9);
    ASSERT_TRUE(a.time_steps.has_value());
    EXPECT_EQ(a.time_steps->granularity, Granularity::kTimeStep);
    EXPECT_LE(a.time_steps->LocalAccuracyGap(), 1e-9);
    EXPECT_NEAR(a.primary.prediction, provider.PredictOne(data.Find(id)->features), 1e-12);
  }
  const auto loaded = LoadAttributions(store);
  EXPECT_EQ(loaded.records.size(), 10u);
  EXPECT_EQ(loaded.StoreFingerprint(), run.StoreFingerprint());
}

TEST(AttributeDataset, RerunIsIdenticalAndParallelAgrees) {
  const auto schema = testing::TinySchema();
  const Dataset data = testing::RandomDataset(22, schema, 8);
  MlpToyProvider provider(schema, 9);
  AttributionConfig config;
  config.method = Method::kKernel;
  config.n_samples = 200;
  config.seed = 5;
  const auto a = AttributeDataset(provider, data, schema, config);
  const auto b = AttributeDataset(provider, data, schema, config);
  config.jobs = 3;
  const auto c = AttributeDataset(provider, data, schema, config);
  EXPECT_EQ(a.StoreFingerprint(), b.StoreFingerprint());
  EXPECT_EQ(a.StoreFingerprint(), c.StoreFingerprint());
  for (const auto& [id, rec] : a.records) EXPECT_LE(rec.primary.LocalAccuracyGap(), 1e-6);
}

TEST(AttributeDataset, FailureOnOneInstanceIsLedgered) {
  const auto schema = testing::TinySchema();
  const Dataset data = testing::RandomDataset(23, schema, 10);
  const double sentinel = data[7].features[0](0, 0);
  LinearProvider linear = TinyLinear(schema, 2);
  FunctionProvider provider(
      [&](const FeatureTriple& t) {
        if (t[0].rows() > 0 && t[0](0, 0) == sentinel) throw std::runtime_error("model crashed");
        return linear.PredictOne(t);
      },
      "flaky");
  const Store store(testing::TempDir("attr_flaky"));
  AttributionConfig config;
  const auto run = AttributeDataset(provider, data, schema, config, &store);
  EXPECT_EQ(run.records.size(), 9u);
  ASSERT_EQ(run.failures.size(), 1u);
  EXPECT_EQ(run.failures[0].instance_id, data[7].id);
  EXPECT_EQ(run.failures[0].kind, "ProviderError");
  EXPECT_FALSE(run.complete());
  const auto index = ReadJsonFile(store.attributions_dir() / run.config_fingerprint / "index.json");
  EXPECT_FALSE(index.at("complete").get<bool>());
  EXPECT_EQ(index.at("failures").size(), 1u);
  EXPECT_EQ(LoadAttributions(store).records.size(), 9u);
}

TEST(AttributeDataset, MissingStoreNamesAttributeStage) {
  const Store store(testing::TempDir("attr_missing"));
  try {
    LoadAttributions(store);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kIncompleteUpstream);
    EXPECT_NE(std::string(e.what()).find("attribute"), std::string::npos);
  }
}

// ---- remote providers ----

std::string WriteLinearModel(const LinearProvider& model, const std::string& name) {
  const auto dir = testing::TempDir(name);
  const auto path = dir / "model.json";
  testing::WriteText(path, model.ToJson().dump());
  return path.string();
}

TEST(SubprocessProvider, MatchesInProcessModel) {
  const auto schema = testing::TinySchema();
  const Dataset data = testing::RandomDataset(31, schema, 4);
  LinearProvider model = TinyLinear(schema, 3);
  const std::string path = WriteLinearModel(model, "subprocess_ok");
  SubprocessProvider remote(std::string(MODALLENS_LINEAR_PROVIDER) + " " + path +
                                " --max-batch 7 --schema-fingerprint " + schema.Fingerprint(),
                            schema.Fingerprint());
  EXPECT_EQ(remote.info().max_batch, 7u);
  EXPECT_EQ(remote.info().max_in_flight, 1u);
  std::vector<FeatureTriple> inputs;
  for (const Instance& x : data.instances()) inputs.push_back(x.features);
  const std::vector<FeatureTriple> once = inputs;
  for (int i = 0; i < 4; ++i) inputs.insert(inputs.end(), once.begin(), once.end());
  const auto out = EvaluateBatched(remote, inputs, "test");
  ASSERT_EQ(out.size(), inputs.size());
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    EXPECT_NEAR(out[i], model.PredictOne(inputs[i]), 1e-12);
  }
  // Same attributions as the in-process model through the exact oracle.
  const auto bg = BackgroundSet::FromInstances(data.instances());
  const auto units = MakeUnits(data[0], Granularity::kTimeStep);
  const auto local = ExactShapley(model, data[0], bg, units);
  const auto viaPipe = ExactShapley(remote, data[0], bg, units);
  for (std::size_t i = 0; i < units.size(); ++i) {
    EXPECT_NEAR(local.values[i], viaPipe.values[i], 1e-12);
  }
}

TEST(SubprocessProvider, SchemaMismatchAndErrors) {
  const auto schema = testing::TinySchema();
  LinearProvider model = TinyLinear(schema, 3);
  const std::string path = WriteLinearModel(model, "subprocess_bad");
  EXPECT_EQ(ErrorKindOf([&] {
              SubprocessProvider p(std::string(MODALLENS_LINEAR_PROVIDER) + " " + path +
                                       " --schema-fingerprint deadbeef",
                                   schema.Fingerprint());
            }),
            ErrorKind::kProvider);
  EXPECT_EQ(ErrorKindOf([&] { SubprocessProvider p("exit 3", ""); }), ErrorKind::kProvider);

  const Dataset data = testing::RandomDataset(32, schema, 3);
  const double sentinel = data[1].features[0](0, 0);
  char buffer[64];
  std::snprintf(buffer, sizeof buffer, "%.17g", sentinel);
  SubprocessProvider flaky(std::string(MODALLENS_LINEAR_PROVIDER) + " " + path +
                               " --fail-on " + buffer,
                           "");
  std::vector<FeatureTriple> ok = {data[0].features};
  EXPECT_EQ(flaky.Predict(ok).size(), 1u);
  std::vector<FeatureTriple> bad = {data[1].features};
  EXPECT_EQ(ErrorKindOf([&] { EvaluateBatched(flaky, bad, "instance x"); }),
            ErrorKind::kProvider);
  // The session survives a per-batch error.
  EXPECT_EQ(flaky.Predict(ok).size(), 1u);
}

TEST(HttpProvider, ServesTheSamePayload) {
  const auto schema = testing::TinySchema();
  const Dataset data = testing::RandomDataset(33, schema, 3);
  LinearProvider model = TinyLinear(schema, 4);
  httplib::Server server;
  server.Post("/predict", [&](const httplib::Request& req, httplib::Response& res) {
    const auto request = nlohmann::json::parse(req.body);
    nlohmann::json outputs = nlohmann::json::array();
    for (const auto& input : request.at("inputs")) {
      outputs.push_back(model.PredictOne(TripleFromJson(input)));
    }
    res.set_content(nlohmann::json{{"batch_id", request.at("batch_id")}, {"outputs", outputs}}
                        .dump(),
                    "application/json");
  });
  server.Post("/wrong", [&](const httplib::Request& req, httplib::Response& res) {
    const auto request = nlohmann::json::parse(req.body);
    res.set_content(nlohmann::json{{"batch_id", request.at("batch_id")}, {"outputs", {1.0}}}
                        .dump(),
                    "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread thread([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  HttpProvider remote("http://127.0.0.1:" + std::to_string(port) + "/predict", 2);
  std::vector<FeatureTriple> inputs;
  for (const Instance& x : data.instances()) inputs.push_back(x.features);
  const auto out = EvaluateBatched(remote, inputs, "test");
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    EXPECT_NEAR(out[i], model.PredictOne(inputs[i]), 1e-12);
  }
  HttpProvider wrong("http://127.0.0.1:" + std::to_string(port) + "/wrong", 8);
  EXPECT_EQ(ErrorKindOf([&] { EvaluateBatched(wrong, inputs, "test"); }), ErrorKind::kProvider);
  HttpProvider missing("http://127.0.0.1:" + std::to_string(port) + "/nope", 8);
  EXPECT_EQ(ErrorKindOf([&] { EvaluateBatched(missing, inputs, "test"); }), ErrorKind::kProvider);

  server.stop();
  thread.join();
}

}  // namespace
}  // namespace modallens::attribution
