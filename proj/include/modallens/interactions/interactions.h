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

#ifndef MODALLENS_INTERACTIONS_INTERACTIONS_H_
#define MODALLENS_INTERACTIONS_INTERACTIONS_H_

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "modallens/attribution/shapley.h"
#include "modallens/core/modality.h"

namespace modallens::interactions {

// Summed importance per modality.
struct ImportanceTriple {
  std::string instance_id;
  PerModality<double> importance{};  // I_l, I_a, I_v

  double l1() const;
  double net() const;
  // |I_m| / l1; empty when l1 == 0.
  std::optional<PerModality<double>> shares() const;
  // I_m / l1; empty when l1 == 0.
  std::optional<PerModality<double>> signed_shares() const;
};

ImportanceTriple AggregateModalityImportance(const attribution::AttributionRecord& record);
nlohmann::json TripleToJson(const ImportanceTriple& t);

struct Thresholds {
  double sig = 0.05;
  double dom = 0.6;
  double confl = 0.2;

  bool Valid() const;
  nlohmann::json ToJson() const;
  static Thresholds FromJson(const nlohmann::json& doc);
  bool operator==(const Thresholds&) const = default;
};

enum class Label { kDominance, kConflict, kComplement, kOthers };
inline constexpr std::array<Label, 4> kLabels = {Label::kDominance, Label::kConflict,
                                                 Label::kComplement, Label::kOthers};
inline constexpr std::size_t LabelIndex(Label l) { return static_cast<std::size_t>(l); }
std::string_view LabelName(Label label);
std::optional<Label> ParseLabel(std::string_view name);

struct InteractionLabel {
  std::string instance_id;
  Label label = Label::kOthers;
  std::optional<Modality> dominant;
  std::vector<std::string> evidence;  // the comparisons that decided the label
};

// Threshold comparisons are taken with this slack so values that sit on a
// threshold in decimal (0.2 vs 0.19999999999999998) compare as equal.
inline constexpr double kThresholdSlack = 1e-12;

// The per-instance rules. Instances with l1 == 0 are others.
InteractionLabel LabelInteraction(const ImportanceTriple& t, const Thresholds& th);

// Fast path used by the grid search; same decision as LabelInteraction.
Label ClassifyInteraction(const ImportanceTriple& t, const Thresholds& th);

// l1 values strictly below this percentile of the dataset's l1 are routed to
// others before the per-instance rules run.
inline constexpr double kMagnitudeGatePercentile = 5.0;

double MagnitudeGate(std::span<const ImportanceTriple> triples);

// Labels a whole dataset: magnitude gate, then the per-instance rules.
std::vector<InteractionLabel> LabelDataset(std::span<const ImportanceTriple> triples,
                                           const Thresholds& th);

nlohmann::json LabelToJson(const ImportanceTriple& t, const InteractionLabel& label);

}  // namespace modallens::interactions

#endif  // MODALLENS_INTERACTIONS_INTERACTIONS_H_
