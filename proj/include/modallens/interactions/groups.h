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

#ifndef MODALLENS_INTERACTIONS_GROUPS_H_
#define MODALLENS_INTERACTIONS_GROUPS_H_

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "modallens/core/dataset.h"
#include "modallens/core/metrics.h"
#include "modallens/interactions/interactions.h"

namespace modallens::interactions {

// Prediction histograms cover the sentiment range in half-point bins.
inline constexpr std::size_t kPredictionBins = 12;

struct GroupSummary {
  Label label = Label::kOthers;
  std::vector<std::string> members;  // nearest-neighbour chain order
  std::vector<double> errors;        // |label - prediction|, member order
  std::vector<double> predictions;
  Histogram prediction_histogram;
  PerModality<std::vector<double>> importance;  // I_m per member
  PerModality<double> influence{};              // sum |I_m| over members
  double total_influence = 0.0;                 // sum l1
  std::optional<double> mean_error;
};

// d(p, q) = max_m |I_m(p) - I_m(q)|
double ChebyshevDistance(const ImportanceTriple& p, const ImportanceTriple& q);

// Greedy chain: start at the largest l1 (earliest on ties), then repeatedly
// step to the nearest unvisited triple (earliest on ties). Returns indices.
std::vector<std::size_t> NearestNeighbourChain(std::span<const ImportanceTriple> triples);

// One summary per label, ordered by total influence (ties keep label order).
// `labels` must align with `triples`; every triple must name a dataset
// instance. Empty groups are included.
std::vector<GroupSummary> SummarizeGroups(std::span<const ImportanceTriple> triples,
                                          std::span<const InteractionLabel> labels,
                                          const Dataset& dataset);

nlohmann::json GroupToJson(const GroupSummary& group);

}  // namespace modallens::interactions

#endif  // MODALLENS_INTERACTIONS_GROUPS_H_
