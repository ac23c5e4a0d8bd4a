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

#include "modallens/projection/glyphs.h"

#include <algorithm>
#include <cctype>
#include <cmath>

namespace modallens::projection {
namespace {

std::string Lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

const FeatureSet* FindSetCaseless(const FeatureSchema& schema, Modality m, std::string_view name) {
  for (const FeatureSet& set : schema.feature_sets(m)) {
    if (Lower(set.name) == Lower(name)) return &set;
  }
  return nullptr;
}

// Time-mean of one named feature.
std::optional<double> FeatureMean(const FeatureSchema& schema, Modality m, std::string_view feature,
                                  const std::vector<double>& means) {
  const auto dim = schema.FeatureIndex(m, feature);
  if (!dim || *dim >= means.size()) return std::nullopt;
  return means[*dim];
}

// Mean of the time-means of a set's features.
std::optional<double> SetMean(const FeatureSchema& schema, Modality m, std::string_view set_name,
                              const std::vector<double>& means) {
  const FeatureSet* set = FindSetCaseless(schema, m, set_name);
  if (set == nullptr || set->features.empty()) return std::nullopt;
  double total = 0.0;
  for (const std::string& f : set->features) total += means[*schema.FeatureIndex(m, f)];
  return total / static_cast<double>(set->features.size());
}

// Raw (unnormalized) glyph scalars of one instance, keyed like Normalization.
std::map<std::string, double> RawComponents(const Instance& x, const FeatureSchema& schema) {
  std::map<std::string, double> raw;
  const auto vision = x.features[Index(Modality::kVision)].ColumnMeans();
  const auto audio = x.features[Index(Modality::kAudio)].ColumnMeans();
  for (std::string_view part : kFaceParts) {
    if (auto v = SetMean(schema, Modality::kVision, part, vision)) raw["face/" + std::string(part)] = *v;
  }
  if (auto v = SetMean(schema, Modality::kVision, kFaceEmotionSet, vision)) raw["face/ring"] = *v;
  if (const FeatureSet* head = FindSetCaseless(schema, Modality::kVision, kHeadMovementSet)) {
    for (std::string_view axis : kHeadAxes) {
      for (const std::string& f : head->features) {
        if (Lower(f) != Lower(axis)) continue;
        if (auto v = FeatureMean(schema, Modality::kVision, f, vision)) {
          raw["face/sticks/" + std::string(axis)] = *v;
        }
      }
    }
  }
  for (std::string_view cls : kAudioClasses) {
    const FeatureSet* set = FindSetCaseless(schema, Modality::kAudio, cls);
    if (set == nullptr) continue;
    if (auto v = SetMean(schema, Modality::kAudio, cls, audio)) raw["audio/" + std::string(cls)] = *v;
    for (const std::string& f : set->features) {
      raw["audio/" + std::string(cls) + "/" + f] = audio[*schema.FeatureIndex(Modality::kAudio, f)];
    }
  }
  return raw;
}

nlohmann::json Optional(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

}  // namespace

double MinMax::Normalize(double v) const {
  if (!(max > min)) return 0.0;
  return std::clamp((v - min) / (max - min), 0.0, 1.0);
}

double Normalization::Normalize(const std::string& key, double raw) const {
  auto it = ranges.find(key);
  return it == ranges.end() ? 0.0 : it->second.Normalize(raw);
}

nlohmann::json Normalization::ToJson() const {
  nlohmann::json out = nlohmann::json::object();
  for (const auto& [key, r] : ranges) out[key] = {{"min", r.min}, {"max", r.max}};
  return out;
}

Normalization Normalization::FromJson(const nlohmann::json& value) {
  Normalization n;
  for (const auto& [key, r] : value.items()) {
    n.ranges[key] = MinMax{r.at("min").get<double>(), r.at("max").get<double>()};
  }
  return n;
}

Normalization FitNormalization(const Dataset& dataset, const FeatureSchema& schema) {
  Normalization n;
  for (const Instance& x : dataset.instances()) {
    for (const auto& [key, v] : RawComponents(x, schema)) {
      auto [it, inserted] = n.ranges.emplace(key, MinMax{v, v});
      if (!inserted) {
        it->second.min = std::min(it->second.min, v);
        it->second.max = std::max(it->second.max, v);
      }
    }
  }
  return n;
}

FaceGlyph MakeFaceGlyph(const Instance& x, const FeatureSchema& schema, const Normalization& norm) {
  const auto raw = RawComponents(x, schema);
  const auto get = [&](const std::string& key) -> std::optional<double> {
    auto it = raw.find(key);
    if (it == raw.end()) return std::nullopt;
    return norm.Normalize(key, it->second);
  };
  FaceGlyph g;
  for (std::string_view part : kFaceParts) {
    g.part_intensity[Lower(part)] = get("face/" + std::string(part));
  }
  g.ring = get("face/ring");
  std::array<double, 3> sticks{};
  bool complete = true;
  for (std::size_t i = 0; i < kHeadAxes.size(); ++i) {
    auto v = get("face/sticks/" + std::string(kHeadAxes[i]));
    complete = complete && v.has_value();
    if (v) sticks[i] = *v;
  }
  if (complete) g.sticks = sticks;
  g.background = x.prediction;
  return g;
}

AudioGlyph MakeAudioGlyph(const Instance& x, const FeatureSchema& schema, const Normalization& norm) {
  const auto raw = RawComponents(x, schema);
  AudioGlyph g;
  for (std::string_view cls : kAudioClasses) {
    const std::string key = "audio/" + std::string(cls);
    auto it = raw.find(key);
    g.sector_radius[std::string(cls)] =
        it == raw.end() ? std::nullopt : std::optional<double>(norm.Normalize(key, it->second));
    const FeatureSet* set = FindSetCaseless(schema, Modality::kAudio, cls);
    if (set == nullptr) continue;
    auto& detail = g.detail_radii[std::string(cls)];
    for (const std::string& f : set->features) {
      const std::string fkey = key + "/" + f;
      detail.push_back(norm.Normalize(fkey, raw.at(fkey)));
    }
  }
  g.inner = x.prediction;
  return g;
}

WordGlyph MakeWordGlyph(const Instance& x, const attribution::AttributionRecord* word_level) {
  WordGlyph g;
  g.circle = x.prediction;
  if (word_level == nullptr) return g;
  double best = -1.0;
  for (std::size_t i = 0; i < word_level->units.size(); ++i) {
    const auto& unit = word_level->units[i];
    if (unit.modality != Modality::kLanguage || unit.time >= x.tokens.size()) continue;
    const double magnitude = std::abs(word_level->values[i]);
    if (magnitude > best) {
      best = magnitude;
      g.word = x.tokens[unit.time].text;
      g.token_index = unit.time;
      g.phi = word_level->values[i];
    }
  }
  return g;
}

nlohmann::json GlyphToJson(const Glyph& glyph) {
  if (const auto* face = std::get_if<FaceGlyph>(&glyph)) {
    nlohmann::json parts = nlohmann::json::object();
    for (const auto& [k, v] : face->part_intensity) parts[k] = Optional(v);
    return {{"type", "face"},
            {"part_intensity", parts},
            {"ring", Optional(face->ring)},
            {"sticks", face->sticks ? nlohmann::json(*face->sticks) : nlohmann::json(nullptr)},
            {"background", face->background}};
  }
  if (const auto* audio = std::get_if<AudioGlyph>(&glyph)) {
    nlohmann::json sectors = nlohmann::json::object();
    for (const auto& [k, v] : audio->sector_radius) sectors[k] = Optional(v);
    nlohmann::json detail = nlohmann::json::object();
    for (const auto& [k, v] : audio->detail_radii) detail[k] = v;
    return {{"type", "audio"},
            {"sector_radius", sectors},
            {"detail_radii", detail},
            {"inner", audio->inner}};
  }
  const auto& word = std::get<WordGlyph>(glyph);
  return {{"type", "word"},
          {"word", word.word ? nlohmann::json(*word.word) : nlohmann::json(nullptr)},
          {"token_index", word.token_index ? nlohmann::json(*word.token_index) : nlohmann::json(nullptr)},
          {"phi", word.phi},
          {"circle", word.circle}};
}

Glyph GlyphFromJson(const nlohmann::json& value) {
  const auto opt = [](const nlohmann::json& v) {
    return v.is_null() ? std::nullopt : std::optional<double>(v.get<double>());
  };
  const std::string type = value.at("type").get<std::string>();
  if (type == "face") {
    FaceGlyph g;
    for (const auto& [k, v] : value.at("part_intensity").items()) g.part_intensity[k] = opt(v);
    g.ring = opt(value.at("ring"));
    if (!value.at("sticks").is_null()) g.sticks = value.at("sticks").get<std::array<double, 3>>();
    g.background = value.at("background").get<double>();
    return g;
  }
  if (type == "audio") {
    AudioGlyph g;
    for (const auto& [k, v] : value.at("sector_radius").items()) g.sector_radius[k] = opt(v);
    for (const auto& [k, v] : value.at("detail_radii").items()) {
      g.detail_radii[k] = v.get<std::vector<double>>();
    }
    g.inner = value.at("inner").get<double>();
    return g;
  }
  WordGlyph g;
  if (!value.at("word").is_null()) g.word = value.at("word").get<std::string>();
  if (!value.at("token_index").is_null()) g.token_index = value.at("token_index").get<std::size_t>();
  g.phi = value.at("phi").get<double>();
  g.circle = value.at("circle").get<double>();
  return g;
}

}  // namespace modallens::projection
