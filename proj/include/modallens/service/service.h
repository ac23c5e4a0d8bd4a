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

// Read-only query layer over a finished store.
//
// Requests are answered from an immutable Snapshot built from the stage
// artifacts. When the manifest's stage fingerprints change the next request
// builds a new snapshot and swaps it in; requests already running keep the
// one they started with.

#ifndef MODALLENS_SERVICE_SERVICE_H_
#define MODALLENS_SERVICE_SERVICE_H_

#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "modallens/pipeline/stages.h"

namespace modallens::service {

struct Snapshot {
  std::string fingerprint;  // over every stage fingerprint
  nlohmann::json stages;    // manifest entries
  FeatureSchema schema;
  Dataset dataset;
  attribution::AttributionRun run;
  pipeline::AnalysisResult analysis;
  nlohmann::json thresholds_doc;  // analysis/thresholds.json
  pipeline::MiningConfig mining;
  templates::ItemsetBuild build;
  projection::ProjectionConfig projection_config;
  PerModality<projection::ModalityProjection> projections;
  projection::Normalization normalization;
  std::map<std::string, interactions::Label> label_of;
  std::map<std::string, std::size_t> triple_index;  // id -> analysis.triples index
};

// Composite fingerprint of the manifest's stage entries; nullopt until every
// stage has completed.
std::optional<std::string> ManifestFingerprint(const nlohmann::json& manifest);

// NotReady when a stage is missing.
std::shared_ptr<const Snapshot> LoadSnapshot(const Store& store);

// A brush over one group's barcode: members [start, end) in chain order,
// then optional closed ranges on modality importance and prediction.
struct BrushQuery {
  interactions::Label label = interactions::Label::kOthers;
  std::optional<std::pair<std::size_t, std::size_t>> range;
  PerModality<std::optional<std::pair<double, double>>> importance;
  std::optional<std::pair<double, double>> prediction;

  // ArgumentError on unknown keys/labels' types, RangeError on inverted or
  // non-finite bounds.
  static BrushQuery FromJson(const nlohmann::json& body);
};

// Instances the templates and projection views are restricted to.
struct Scope {
  std::optional<interactions::Label> group;
  std::optional<std::vector<std::string>> ids;
  bool all() const { return !group && !ids; }
};

struct Response {
  int status = 200;
  std::string body;  // compact JSON
  bool cache_hit = false;
};

// HTTP status used for an error kind.
int StatusFor(ErrorKind kind);
std::string ErrorBody(ErrorKind kind, const std::string& message,
                      const std::optional<std::string>& fingerprint = std::nullopt);

class AnalysisService {
 public:
  explicit AnalysisService(Store store);

  // The current snapshot, reloading first when the manifest moved on.
  // NotReady when the pipeline has not finished.
  std::shared_ptr<const Snapshot> Current();

  // Stage completion for the 409 body.
  nlohmann::json Progress() const;

  nlohmann::json Summary();
  nlohmann::json QueryGroup(const BrushQuery& query);
  nlohmann::json Templates(const Scope& scope, templates::TemplateSort sort,
                           std::optional<double> min_support, bool* cache_hit = nullptr);
  nlohmann::json Projection(Modality modality, projection::HeatMode mode, const Scope& scope);
  nlohmann::json InstanceDetail(const std::string& id, std::size_t k);
  nlohmann::json Metrics();
  nlohmann::json Meta();

  // Single dispatch used by both the HTTP server and `export`: the same
  // request always yields the same bytes. `query` holds URL parameters.
  Response Handle(const std::string& method, const std::string& path,
                  const std::map<std::string, std::string>& query, const std::string& body);

  const Store& store() const { return store_; }

 private:
  Store store_;
  mutable std::mutex mutex_;
  std::mutex load_mutex_;
  std::shared_ptr<const Snapshot> snapshot_;
  std::map<std::string, std::string> template_cache_;  // key -> body
};

// The member ids of `scope` (all ids when unrestricted), validated against
// the snapshot. NotFound for unknown ids.
std::set<std::string> ResolveScope(const Snapshot& snapshot, const Scope& scope);

// Parses "group=<label>" / "ids=a,b,c" URL parameters.
Scope ScopeFromQuery(const std::map<std::string, std::string>& query);

}  // namespace modallens::service

#endif  // MODALLENS_SERVICE_SERVICE_H_
