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
#ifndef MODALLENS_CORE_SCHEMA_H_
#define MODALLENS_CORE_SCHEMA_H_

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "modallens/core/modality.h"

namespace modallens {

struct FeatureSet {
  std::string name;
  std::vector<std::string> features;
};

// Feature names per modality plus their grouping into named feature sets.
//
// Audio and vision feature sets must partition the modality's feature list.
// Language sets are optional: language items are grouped by POS tag at the
// token level, so embedding dimensions without an explicit set fall into the
// implicit "Embedding" set.
class FeatureSchema {
 public:
  static constexpr std::string_view kImplicitLanguageSet = "Embedding";

  // Validates and builds. Throws ParseError for structurally wrong documents
  // and SchemaError for invariant violations.
  static FeatureSchema FromJson(const nlohmann::json& doc);
  nlohmann::json ToJson() const;

  const std::vector<std::string>& features(Modality m) const {
    return features_[Index(m)];
  }
  std::size_t dims(Modality m) const { return features_[Index(m)].size(); }
  const std::vector<FeatureSet>& feature_sets(Modality m) const {
    return sets_[Index(m)];
  }
  const std::vector<std::string>& pos_tagset() const { return pos_tagset_; }

  // Name of the feature set holding dimension `dim` of modality `m`.
  const std::string& SetOf(Modality m, std::size_t dim) const {
    return sets_[Index(m)][set_of_dim_[Index(m)][dim]].name;
  }
  std::optional<std::size_t> FeatureIndex(Modality m, std::string_view name) const;
  const FeatureSet* FindSet(Modality m, std::string_view name) const;
  bool HasPosTag(std::string_view tag) const;

  std::string Fingerprint() const;

 private:
  PerModality<std::vector<std::string>> features_;
  PerModality<std::vector<FeatureSet>> sets_;
  PerModality<std::vector<std::size_t>> set_of_dim_;
  PerModality<std::unordered_map<std::string, std::size_t>> feature_index_;
  std::vector<std::string> pos_tagset_;
};

FeatureSchema LoadSchema(const std::filesystem::path& path);

}  // namespace modallens

#endif  // MODALLENS_CORE_SCHEMA_H_
