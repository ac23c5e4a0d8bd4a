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

#include "modallens/core/schema.h"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "modallens/common/error.h"
#include "modallens/common/fingerprint.h"

namespace modallens {
namespace {

using nlohmann::json;

std::vector<std::string> StringList(const json& value, const std::string& what) {
  if (!value.is_array()) Throw(ErrorKind::kParse, what + " must be an array");
  std::vector<std::string> out;
  out.reserve(value.size());
  for (const json& item : value) {
    if (!item.is_string()) {
      Throw(ErrorKind::kParse, what + " must contain only strings");
    }
    out.push_back(item.get<std::string>());
  }
  return out;
}

std::vector<FeatureSet> ParseSets(const json& value, const std::string& where) {
  std::vector<FeatureSet> sets;
  if (value.is_object()) {
    for (const auto& [name, features] : value.items()) {
      sets.push_back({name, StringList(features, where + "." + name)});
    }
  } else if (value.is_array()) {
    for (const json& entry : value) {
      if (!entry.is_object() || !entry.contains("name") ||
          !entry.contains("features") || !entry["name"].is_string()) {
        Throw(ErrorKind::kParse,
              where + " entries must be {name, features} objects");
      }
      const std::string name = entry["name"].get<std::string>();
      sets.push_back({name, StringList(entry["features"], where + "." + name)});
    }
  } else {
    Throw(ErrorKind::kParse, where + " must be an object or an array");
  }
  return sets;
}

}  // namespace

FeatureSchema FeatureSchema::FromJson(const json& doc) {
  if (!doc.is_object()) Throw(ErrorKind::kParse, "schema must be an object");
  if (!doc.contains("modalities") || !doc["modalities"].is_object()) {
    Throw(ErrorKind::kParse, "schema needs a \"modalities\" object");
  }

  FeatureSchema schema;
  const json& modalities = doc["modalities"];
  for (const auto& [key, value] : modalities.items()) {
    if (!ParseModality(key)) {
      Throw(ErrorKind::kSchema, "unknown modality id \"" + key + "\"");
    }
  }
  for (Modality m : kModalities) {
    const std::string name(ModalityName(m));
    if (!modalities.contains(name)) {
      Throw(ErrorKind::kSchema, "modality \"" + name + "\" is missing");
    }
    auto features = StringList(modalities[name], "modalities." + name);
    if (features.empty()) {
      Throw(ErrorKind::kSchema, "modality \"" + name + "\" has no features");
    }
    auto& index = schema.feature_index_[Index(m)];
    for (std::size_t d = 0; d < features.size(); ++d) {
      if (!index.emplace(features[d], d).second) {
        Throw(ErrorKind::kSchema, "feature \"" + features[d] +
                                      "\" listed twice in " + name);
      }
    }
    schema.features_[Index(m)] = std::move(features);
  }

  const json empty = json::object();
  const json& all_sets = doc.contains("feature_sets") ? doc["feature_sets"] : empty;
  if (!all_sets.is_object()) {
    Throw(ErrorKind::kParse, "\"feature_sets\" must be an object");
  }
  for (const auto& [key, value] : all_sets.items()) {
    if (!ParseModality(key)) {
      Throw(ErrorKind::kSchema, "unknown modality id \"" + key +
                                    "\" in feature_sets");
    }
  }

  for (Modality m : kModalities) {
    const std::string name(ModalityName(m));
    const std::size_t dims = schema.features_[Index(m)].size();
    std::vector<FeatureSet> sets;
    if (all_sets.contains(name)) {
      sets = ParseSets(all_sets[name], "feature_sets." + name);
    }
    if (sets.empty()) {
      if (m != Modality::kLanguage) {
        Throw(ErrorKind::kSchema, "modality \"" + name + "\" has no feature sets");
      }
      sets.push_back({std::string(kImplicitLanguageSet), schema.features_[Index(m)]});
    }

    constexpr std::size_t kUnassigned = static_cast<std::size_t>(-1);
    std::vector<std::size_t> owner(dims, kUnassigned);
    std::set<std::string> set_names;
    for (std::size_t s = 0; s < sets.size(); ++s) {
      const FeatureSet& set = sets[s];
      if (!set_names.insert(set.name).second) {
        Throw(ErrorKind::kSchema, "feature set \"" + set.name +
                                      "\" defined twice in " + name);
      }
      if (set.features.empty()) {
        Throw(ErrorKind::kSchema, "feature set \"" + set.name + "\" is empty");
      }
      for (const std::string& feature : set.features) {
        auto it = schema.feature_index_[Index(m)].find(feature);
        if (it == schema.feature_index_[Index(m)].end()) {
          Throw(ErrorKind::kSchema, "feature set \"" + set.name +
                                        "\" names unknown " + name +
                                        " feature \"" + feature + "\"");
        }
        if (owner[it->second] != kUnassigned) {
          Throw(ErrorKind::kSchema,
                "feature \"" + feature + "\" appears in both \"" +
                    sets[owner[it->second]].name + "\" and \"" + set.name + "\"");
        }
        owner[it->second] = s;
      }
    }
    for (std::size_t d = 0; d < dims; ++d) {
      if (owner[d] == kUnassigned) {
        Throw(ErrorKind::kSchema, name + " feature \"" +
                                      schema.features_[Index(m)][d] +
                                      "\" belongs to no feature set");
      }
    }
    schema.sets_[Index(m)] = std::move(sets);
    schema.set_of_dim_[Index(m)] = std::move(owner);
  }

  if (doc.contains("pos_tagset")) {
    // Duplicates are dropped; the published tag list repeats a few entries.
    std::set<std::string> seen;
    for (std::string& tag : StringList(doc["pos_tagset"], "pos_tagset")) {
      if (seen.insert(tag).second) schema.pos_tagset_.push_back(std::move(tag));
    }
  }
  return schema;
}

json FeatureSchema::ToJson() const {
  json doc;
  for (Modality m : kModalities) {
    const std::string name(ModalityName(m));
    doc["modalities"][name] = features_[Index(m)];
    json sets = json::array();
    for (const FeatureSet& set : sets_[Index(m)]) {
      sets.push_back({{"name", set.name}, {"features", set.features}});
    }
    doc["feature_sets"][name] = std::move(sets);
  }
  doc["pos_tagset"] = pos_tagset_;
  return doc;
}

std::optional<std::size_t> FeatureSchema::FeatureIndex(Modality m,
                                                       std::string_view name) const {
  const auto& index = feature_index_[Index(m)];
  auto it = index.find(std::string(name));
  if (it == index.end()) return std::nullopt;
  return it->second;
}

const FeatureSet* FeatureSchema::FindSet(Modality m, std::string_view name) const {
  for (const FeatureSet& set : sets_[Index(m)]) {
    if (set.name == name) return &set;
  }
  return nullptr;
}

bool FeatureSchema::HasPosTag(std::string_view tag) const {
  return std::find(pos_tagset_.begin(), pos_tagset_.end(), tag) !=
         pos_tagset_.end();
}

std::string FeatureSchema::Fingerprint() const { return FingerprintOf(ToJson()); }

FeatureSchema LoadSchema(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) Throw(ErrorKind::kIo, "cannot open schema file " + path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::parse_error& e) {
    Throw(ErrorKind::kParse, path.string() + ": " + e.what());
  }
  return FeatureSchema::FromJson(doc);
}

}  // namespace modallens
