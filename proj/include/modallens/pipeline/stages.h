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

// The pipeline stages behind the CLI commands. Each stage reads its upstream
// artifacts from the store, writes its own, and records a fingerprint over
// everything that affects its output in the manifest. A rerun whose
// fingerprint matches the manifest (and whose files exist) does nothing.

#ifndef MODALLENS_PIPELINE_STAGES_H_
#define MODALLENS_PIPELINE_STAGES_H_

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "modallens/attribution/pipeline.h"
#include "modallens/interactions/groups.h"
#include "modallens/interactions/interactions.h"
#include "modallens/interactions/threshold_search.h"
#include "modallens/projection/projection.h"
#include "modallens/store/store.h"
#include "modallens/templates/templates.h"

namespace modallens::pipeline {

inline constexpr const char* kStageOrder[] = {"ingest", "attribute", "analyze", "mine", "project"};

struct StageOutcome {
  std::string stage;
  bool skipped = false;  // fingerprint matched; nothing was rewritten
  std::string fingerprint;
  nlohmann::json summary;
};

// Fingerprint recorded by `stage` in the manifest, if it has run.
std::optional<std::string> StageFingerprint(const Store& store, const std::string& stage);

// ---- ingest ----

struct IngestOptions {
  std::filesystem::path schema_path;
  std::filesystem::path instances_path;
  // Snapshot the valid instances even when some lines fail validation.
  bool allow_invalid = false;
};

// Schema errors and (unless allow_invalid) any invalid instance line fail the
// stage before anything is written.
StageOutcome RunIngest(const Store& store, const IngestOptions& options);

// ---- attribute ----

struct AttributeOptions {
  std::string provider_spec;
  attribution::AttributionConfig config;
  attribution::ProgressFn progress;
};

// ProviderError when any instance failed (records that succeeded stay on disk
// and are reused by the next run).
StageOutcome RunAttribute(const Store& store, const AttributeOptions& options);

// Attributions for the ingested dataset; IncompleteUpstream naming
// `attribute` when missing or computed for different data.
attribution::AttributionRun LoadCurrentAttributions(const Store& store, const Dataset& dataset);

// ---- analyze ----

struct AnalysisConfig {
  double grid_step = 0.05;
  std::optional<interactions::Thresholds> thresholds;  // skips the search when set

  nlohmann::json ToJson() const;
};

struct AnalysisResult {
  std::vector<interactions::ImportanceTriple> triples;  // dataset order
  std::vector<interactions::InteractionLabel> labels;   // aligned with triples
  std::vector<interactions::GroupSummary> groups;       // by influence
  interactions::Thresholds thresholds;
  std::optional<interactions::ThresholdSearchResult> search;  // unset for fixed thresholds
  std::vector<std::string> missing;                     // instances without attributions
};

// Pure computation shared by the analyze stage and the service snapshot.
AnalysisResult Analyze(const Dataset& dataset, const attribution::AttributionRun& run,
                       const AnalysisConfig& config);

StageOutcome RunAnalyze(const Store& store, const AnalysisConfig& config);

// ---- mine ----

struct MiningConfig {
  double min_support = 0.05;
  double percentile = 90.0;
  templates::TemplateSort sort = templates::TemplateSort::kSupport;

  nlohmann::json ToJson() const;
  static MiningConfig FromJson(const nlohmann::json& value);
};

StageOutcome RunMine(const Store& store, const MiningConfig& config);

// ---- project ----

StageOutcome RunProject(const Store& store, const projection::ProjectionConfig& config);

// ---- demo ----

struct DemoOptions {
  std::uint64_t seed = 7;
  std::size_t per_class = 150;
  std::size_t jobs = 1;
  projection::ProjectionConfig projection;
};

// Writes the planted corpus (schema, instances, linear model) under
// <store>/demo_input and runs every stage on it.
std::vector<StageOutcome> RunDemo(const Store& store, const DemoOptions& options);

// Fingerprint over every artifact file in the store (relative path + bytes),
// excluding temporary files.
std::string StoreContentFingerprint(const Store& store);

}  // namespace modallens::pipeline

#endif  // MODALLENS_PIPELINE_STAGES_H_
