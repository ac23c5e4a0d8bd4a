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

#ifndef MODALLENS_ATTRIBUTION_SHAPLEY_H_
#define MODALLENS_ATTRIBUTION_SHAPLEY_H_

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "modallens/attribution/provider.h"
#include "modallens/attribution/units.h"

namespace modallens::attribution {

// Additive attribution of one prediction: sum(values) == prediction - base_value.
struct AttributionRecord {
  std::string instance_id;
  Granularity granularity = Granularity::kFeature;
  std::string method;
  std::vector<Unit> units;
  std::vector<double> values;  // aligned with units
  double base_value = 0.0;     // f on the all-absent input
  double prediction = 0.0;     // f(x)

  double Sum() const;
  // |sum(values) - (prediction - base_value)|
  double LocalAccuracyGap() const;

  bool operator==(const AttributionRecord&) const = default;
};

nlohmann::json RecordToJson(const AttributionRecord& record);
AttributionRecord RecordFromJson(const nlohmann::json& value);

// Enumeration bound for ExactShapley.
inline constexpr std::size_t kMaxExactUnits = 20;

// phi_i = sum over S not containing i of |S|!(M-|S|-1)!/M! [f(S + i) - f(S)],
// evaluated over all 2^M coalitions. Throws TooManyUnits above the bound and
// ProviderError (with coalition context) when the provider fails.
AttributionRecord ExactShapley(PredictionProvider& provider, const Instance& x,
                               const BackgroundSet& background,
                               const std::vector<Unit>& units);

// (M - 1) / (C(M, s) * s * (M - s)) for 0 < s < M. Sizes 0 and M carry no
// weight (they are the equality constraints) and throw ArgumentError.
double ShapleyKernelWeight(std::size_t m, std::size_t s);

struct KernelShapOptions {
  std::size_t n_samples = 2048;
  std::uint64_t seed = 0;
  std::size_t max_retries = 3;
};

// A weighted coalition used by the least-squares fit.
struct WeightedCoalition {
  std::vector<std::uint8_t> present;
  double weight = 0.0;
};

// Deterministic coalition plan: coalition sizes are visited from the highest
// kernel weight (sizes 1 and M-1) inward; a size pair is enumerated
// completely while the remaining budget covers it, and the leftover budget is
// spent on paired random draws over the remaining sizes. With a budget of at
// least 2^M - 2 every proper coalition appears exactly once with its exact
// kernel weight.
std::vector<WeightedCoalition> PlanCoalitions(std::size_t m, std::size_t n_samples,
                                              std::uint64_t seed);

// Kernel SHAP: weighted least squares over the planned coalitions subject to
// sum(phi) = f(x) - base, solved through the normal equations after
// eliminating the last variable.
AttributionRecord KernelShap(PredictionProvider& provider, const Instance& x,
                             const BackgroundSet& background,
                             const std::vector<Unit>& units,
                             const KernelShapOptions& options);

// Closed form for f(x) = bias + sum(weights * x) at cell granularity:
// phi = weights * (x - background_mean), base = weights . background_mean + bias.
AttributionRecord LinearShap(const FeatureTriple& weights, double bias,
                             const Instance& x, const FeatureTriple& background_mean);

// Sums a finer record into a coarser granularity (cell -> feature or time
// step). Exact for additive games; the local-accuracy sum is preserved always.
AttributionRecord Coarsen(const AttributionRecord& record, const Instance& x,
                          Granularity target);

}  // namespace modallens::attribution

#endif  // MODALLENS_ATTRIBUTION_SHAPLEY_H_
