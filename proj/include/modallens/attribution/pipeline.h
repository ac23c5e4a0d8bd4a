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

#ifndef MODALLENS_ATTRIBUTION_PIPELINE_H_
#define MODALLENS_ATTRIBUTION_PIPELINE_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "modallens/attribution/provider.h"
#include "modallens/attribution/shapley.h"
#include "modallens/core/dataset.h"
#include "modallens/store/store.h"

namespace modallens::attribution {

enum class Method { kAuto, kExact, kKernel, kLinear };

std::string_view MethodName(Method method);
std::optional<Method> ParseMethod(std::string_view name);

struct AttributionConfig {
  Granularity granularity = Granularity::kFeature;
  Method method = Method::kAuto;
  std::size_t n_samples = 2048;
  std::uint64_t seed = 0;
  // Reference instances averaged into the background; 0 means all.
  std::size_t background_size = 100;
  bool zero_background = false;
  // Also run the per-time-step pass used by the word-level views.
  bool time_step_pass = true;
  std::size_t jobs = 1;

  nlohmann::json ToJson() const;  // jobs excluded: it cannot change results
  static AttributionConfig FromJson(const nlohmann::json& doc);
};

// Units at or below this count use exact enumeration under kAuto.
inline constexpr std::size_t kAutoExactUnits = 12;

// Both granularities for one instance.
struct InstanceAttribution {
  AttributionRecord primary;
  std::optional<AttributionRecord> time_steps;
};

// The stored record at `target` granularity: whichever pass matches, or the
// cell-level primary coarsened on the fly. nullopt when neither can supply it.
std::optional<AttributionRecord> RecordAt(const InstanceAttribution& a, const Instance& x,
                                          Granularity target);

nlohmann::json InstanceAttributionToJson(const InstanceAttribution& a);
InstanceAttribution InstanceAttributionFromJson(const nlohmann::json& value);

struct AttributionFailure {
  std::string instance_id;
  std::string kind;
  std::string message;
};

struct AttributionRun {
  std::string config_fingerprint;
  std::string dataset_fingerprint;
  AttributionConfig config;
  std::map<std::string, InstanceAttribution> records;  // by instance id
  std::vector<AttributionFailure> failures;
  std::size_t total = 0;

  bool complete() const { return failures.empty() && records.size() == total; }
  const InstanceAttribution* Find(const std::string& id) const;
  // Fingerprint over every record in id order.
  std::string StoreFingerprint() const;
};

BackgroundSet MakeBackground(const Dataset& dataset, const FeatureSchema& schema,
                             const AttributionConfig& config);

// Attributes a single instance with the configured method.
InstanceAttribution AttributeInstance(PredictionProvider& provider, const Instance& x,
                                      const BackgroundSet& background,
                                      const AttributionConfig& config);

std::string ConfigFingerprint(const AttributionConfig& config, const PredictionProvider& provider,
                              const Dataset& dataset, const FeatureSchema& schema);

using ProgressFn = std::function<void(std::size_t done, std::size_t total)>;

// Attributes every instance. With a store, records are committed one file per
// instance as they finish, instances already on disk under the same config
// fingerprint are reused, and the index records failures and completeness.
// Failures never abort the pass.
AttributionRun AttributeDataset(PredictionProvider& provider, const Dataset& dataset,
                                const FeatureSchema& schema, const AttributionConfig& config,
                                const Store* store = nullptr, ProgressFn progress = {});

// The run named by attributions/current.json. IncompleteUpstream naming
// `attribute` when there is none.
AttributionRun LoadAttributions(const Store& store);
bool HasAttributions(const Store& store);

// "linear:<file.json>", "mlp-toy[:seed]", "subprocess:<command>",
// "http://host:port/path".
std::unique_ptr<PredictionProvider> MakeProvider(const std::string& spec,
                                                 const FeatureSchema& schema);

}  // namespace modallens::attribution

#endif  // MODALLENS_ATTRIBUTION_PIPELINE_H_
