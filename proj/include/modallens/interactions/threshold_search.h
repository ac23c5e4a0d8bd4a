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

#ifndef MODALLENS_INTERACTIONS_THRESHOLD_SEARCH_H_
#define MODALLENS_INTERACTIONS_THRESHOLD_SEARCH_H_

#include <array>
#include <optional>
#include <span>
#include <vector>

#include "json.hpp"
#include "modallens/interactions/interactions.h"

namespace modallens::interactions {

using ShareVector = std::array<double, 3>;

// J and its parts at one threshold triple.
struct ObjectiveValue {
  double objective = 0.0;
  double separation = 0.0;        // (1/16) sum_i sum_j |mu_i - mu_j|
  double others_magnitude = 0.0;  // mean l1 of others / mean l1 of all
  std::array<std::size_t, 4> sizes{};                    // indexed by LabelIndex
  std::array<std::optional<ShareVector>, 4> group_means;  // mean signed shares
};

// Labels every triple (magnitude gate included) and evaluates
//   J = (1/|L|^2) sum_{i,j in L} dist(mu_i, mu_j) - Lbar_others.
// Empty groups contribute no distance. Instances with l1 == 0 count with a zero
// share vector.
ObjectiveValue EvaluateObjective(std::span<const ImportanceTriple> triples,
                                 const Thresholds& th);

struct GridPoint {
  Thresholds thresholds;
  double objective = 0.0;
  std::array<std::size_t, 4> sizes{};
};

struct ThresholdSearchResult {
  Thresholds best;
  ObjectiveValue at_best;
  std::vector<GridPoint> trace;
  double grid_step = 0.0;  // 0 for an explicit candidate list
};

// {step, 2 step, ...} strictly inside (0, 1).
std::vector<double> GridValues(double grid_step);

// Scans (sig, dom, confl) over GridValues^3 in row-major order (sig outermost)
// and keeps the first maximum. ArgumentError on a step outside (0, 1) or an
// empty input.
ThresholdSearchResult OptimizeThresholds(std::span<const ImportanceTriple> triples,
                                         double grid_step = 0.05);

// Same scan over an explicit candidate list.
ThresholdSearchResult OptimizeThresholds(std::span<const ImportanceTriple> triples,
                                         std::span<const Thresholds> candidates);

nlohmann::json SearchSummaryJson(const ThresholdSearchResult& result);
nlohmann::json TraceJson(const ThresholdSearchResult& result);

}  // namespace modallens::interactions

#endif  // MODALLENS_INTERACTIONS_THRESHOLD_SEARCH_H_
