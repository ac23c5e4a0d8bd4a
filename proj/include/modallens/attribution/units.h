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

#ifndef MODALLENS_ATTRIBUTION_UNITS_H_
#define MODALLENS_ATTRIBUTION_UNITS_H_

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "modallens/core/dataset.h"

namespace modallens::attribution {

// How the input is cut into players of the attribution game.
//   kFeature:  one unit per (modality, feature dimension), all time steps.
//   kTimeStep: one unit per (modality, time step), all dimensions.
//   kCell:     one unit per (modality, time step, dimension).
enum class Granularity { kFeature, kTimeStep, kCell };

std::string_view GranularityName(Granularity g);
std::optional<Granularity> ParseGranularity(std::string_view name);

struct Unit {
  Modality modality = Modality::kLanguage;
  Granularity granularity = Granularity::kFeature;
  std::size_t time = 0;  // unused for kFeature
  std::size_t dim = 0;   // unused for kTimeStep

  bool operator==(const Unit&) const = default;
};

nlohmann::json UnitToJson(const Unit& unit);
Unit UnitFromJson(const nlohmann::json& value, Granularity granularity);

// Units partitioning the instance at the given granularity, ordered by
// modality (language, audio, vision), then time, then dimension.
std::vector<Unit> MakeUnits(const Instance& x, Granularity granularity);

// What "absent" means for a unit: the per-dimension mean of the reference
// rows, broadcast over every time step of the explained instance.
class BackgroundSet {
 public:
  static BackgroundSet FromInstances(std::span<const Instance> references);
  static BackgroundSet FromMeans(PerModality<std::vector<double>> means,
                                 std::size_t reference_count = 1);
  static BackgroundSet Zero(const FeatureSchema& schema);

  const std::vector<double>& mean(Modality m) const { return means_[Index(m)]; }
  std::size_t reference_count() const { return reference_count_; }

  // A triple shaped like x with every row replaced by the means.
  FeatureTriple MeanTriple(const Instance& x) const;

  nlohmann::json ToJson() const;

 private:
  PerModality<std::vector<double>> means_;
  std::size_t reference_count_ = 0;
};

// Builds masked inputs for one instance. Units in the coalition keep x's
// values; the rest take the background mean.
class Masker {
 public:
  Masker(const Instance& x, const std::vector<Unit>& units,
         const BackgroundSet& background);

  std::size_t unit_count() const { return units_.size(); }

  // `present[i]` != 0 keeps unit i.
  FeatureTriple Mask(std::span<const std::uint8_t> present) const;
  FeatureTriple Mask(std::uint64_t present_bits) const;

 private:
  void CopyUnit(std::size_t unit, FeatureTriple& out) const;

  const Instance& x_;
  std::vector<Unit> units_;
  FeatureTriple absent_;
};

// Convenience form of Masker for a single coalition.
FeatureTriple MaskInput(const Instance& x, const std::vector<Unit>& units,
                        std::span<const std::uint8_t> present,
                        const BackgroundSet& background);

}  // namespace modallens::attribution

#endif  // MODALLENS_ATTRIBUTION_UNITS_H_
