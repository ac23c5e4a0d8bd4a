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

// Per-modality 2-D projections of the dataset with glyphs and heat grids.

#ifndef MODALLENS_PROJECTION_PROJECTION_H_
#define MODALLENS_PROJECTION_PROJECTION_H_

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "modallens/attribution/pipeline.h"
#include "modallens/core/dataset.h"
#include "modallens/core/schema.h"
#include "modallens/projection/glyphs.h"
#include "modallens/projection/heatmap.h"
#include "modallens/projection/tsne.h"
#include "modallens/templates/templates.h"

namespace modallens::projection {

// What the language projection is computed from: the time-mean embedding
// rows, or an indicator vector over the dataset's influential words. Auto
// picks embeddings whenever the schema declares language dimensions.
enum class LanguageInput { kAuto, kEmbedding, kInfluentialWords };

std::string_view LanguageInputName(LanguageInput input);
std::optional<LanguageInput> ParseLanguageInput(std::string_view name);

struct ProjectionConfig {
  TsneOptions tsne;
  std::size_t heat_resolution = 64;
  double heat_bandwidth = 0.05;  // fraction of the larger embedding extent
  LanguageInput language_input = LanguageInput::kAuto;

  nlohmann::json ToJson() const;
  static ProjectionConfig FromJson(const nlohmann::json& value);
};

// Time-mean of the T x D matrix.
std::vector<double> InstanceFeatureVector(const Instance& x, Modality m);

// N x D input rows for one modality, in dataset order. `build` supplies the
// influential words for the indicator representation; without it every
// token counts. `representation` receives the name of what was used.
Matrix ProjectionInputs(const Dataset& dataset, Modality m, LanguageInput language_input,
                        const templates::ItemsetBuild* build, std::string* representation);

struct ProjectionPoint {
  std::string instance_id;
  double x = 0.0;
  double y = 0.0;
  Modality modality = Modality::kLanguage;
  Glyph glyph;
};

struct ModalityProjection {
  Modality modality = Modality::kLanguage;
  std::string representation;  // "embedding-mean", "feature-mean" or "influential-words"
  std::vector<ProjectionPoint> points;  // dataset order
  double perplexity = 0.0;
  double kl_after_exaggeration = 0.0;
  double kl_final = 0.0;
  Bounds bounds;
  double bandwidth = 0.0;  // absolute, in embedding units
};

// Runs t-SNE (perplexity clamped to what n allows) and attaches glyphs.
ModalityProjection ProjectModality(const Dataset& dataset, const FeatureSchema& schema,
                                   const attribution::AttributionRun* attributions,
                                   const templates::ItemsetBuild* build,
                                   const Normalization& normalization, Modality m,
                                   const ProjectionConfig& config);

struct ProjectionSet {
  PerModality<ModalityProjection> modalities;
  Normalization normalization;
};

// The three modality runs in parallel; the result does not depend on timing.
ProjectionSet ProjectAll(const Dataset& dataset, const FeatureSchema& schema,
                         const attribution::AttributionRun* attributions,
                         const templates::ItemsetBuild* build, const ProjectionConfig& config);

// Heat weights per instance id.
std::map<std::string, double> ErrorWeights(const Dataset& dataset);
// Sum of |phi| over each instance's influential (template-forming) units.
std::map<std::string, double> TemplateImportanceWeights(const templates::ItemsetBuild& build);

// Heat over the in-scope points only (all points when scope is null).
HeatGrid ScopedHeat(const ModalityProjection& projection, const std::map<std::string, double>& weights,
                    const std::set<std::string>* scope, HeatMode mode, std::size_t resolution);

// {modality, representation, points:[{id,x,y,dimmed,glyph}], heat, stats}.
nlohmann::json ProjectionPayload(const ModalityProjection& projection, const HeatGrid& heat,
                                 const std::set<std::string>* scope);

// Round trip for the stored form (points with glyph JSON and stats; no heat).
nlohmann::json ModalityProjectionToJson(const ModalityProjection& projection);
ModalityProjection ModalityProjectionFromJson(const nlohmann::json& value);

}  // namespace modallens::projection

#endif  // MODALLENS_PROJECTION_PROJECTION_H_
