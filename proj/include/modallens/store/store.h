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

#ifndef MODALLENS_STORE_STORE_H_
#define MODALLENS_STORE_STORE_H_

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "modallens/core/dataset.h"
#include "modallens/core/schema.h"

namespace modallens {

// On-disk artifact store shared by the pipeline stages.
//
//   <root>/manifest.json
//   <root>/ingest/{schema.json, instances.jsonl, ingest.json}
//   <root>/attributions/current.json
//   <root>/attributions/<config fp>/{index.json, records/<id>.json}
//   <root>/analysis/{labels.jsonl, thresholds.json, threshold_trace.json, groups.json}
//   <root>/templates/templates.json
//   <root>/projection/{<modality>.json, normalization.json}
//
// Every file is written to a temporary sibling and renamed into place.
class Store {
 public:
  explicit Store(std::filesystem::path root);

  // $MODALLENS_STORE, or ./store.
  static std::filesystem::path DefaultRoot();

  const std::filesystem::path& root() const { return root_; }
  std::filesystem::path ingest_dir() const { return root_ / "ingest"; }
  std::filesystem::path attributions_dir() const { return root_ / "attributions"; }
  std::filesystem::path analysis_dir() const { return root_ / "analysis"; }
  std::filesystem::path templates_dir() const { return root_ / "templates"; }
  std::filesystem::path projection_dir() const { return root_ / "projection"; }

  nlohmann::json Manifest() const;
  // Records `info` under manifest["stages"][stage].
  void MarkStage(const std::string& stage, const nlohmann::json& info) const;

 private:
  std::filesystem::path root_;
};

void WriteFileAtomic(const std::filesystem::path& path, std::string_view contents);
void WriteJsonAtomic(const std::filesystem::path& path, const nlohmann::json& value);
std::string ReadFile(const std::filesystem::path& path);
// ParseError on malformed content, Io on a missing file.
nlohmann::json ReadJsonFile(const std::filesystem::path& path);

// File-name-safe encoding of an instance id: [A-Za-z0-9._-] pass through,
// everything else becomes %XX.
std::string SafeFileName(std::string_view id);

// Ingest stage.
struct IngestedData {
  FeatureSchema schema;
  Dataset dataset;
  std::vector<IngestFailure> failures;
};

void SaveIngest(const Store& store, const FeatureSchema& schema, const IngestResult& result);
bool HasIngest(const Store& store);
// IncompleteUpstream naming `ingest` when absent.
IngestedData LoadIngest(const Store& store);

nlohmann::json IngestFailureToJson(const IngestFailure& failure);

}  // namespace modallens

#endif  // MODALLENS_STORE_STORE_H_
