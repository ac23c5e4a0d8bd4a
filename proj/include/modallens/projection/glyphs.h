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

// Glyph parameters for the projection view. Every scalar is min-max
// normalized with constants fitted once over the whole dataset, so glyphs of
// a brushed subset stay comparable with the rest.

#ifndef MODALLENS_PROJECTION_GLYPHS_H_
#define MODALLENS_PROJECTION_GLYPHS_H_

#include <array>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"
#include "modallens/attribution/shapley.h"
#include "modallens/core/dataset.h"
#include "modallens/core/schema.h"

namespace modallens::projection {

// Face parts drawn as strokes, in drawing order.
inline constexpr std::array<std::string_view, 5> kFaceParts = {"Brow", "Eye", "Nose", "Lip", "Chin"};
inline constexpr std::string_view kFaceEmotionSet = "Face emotion";
inline constexpr std::string_view kHeadMovementSet = "Head movement";
inline constexpr std::array<std::string_view, 3> kHeadAxes = {"Pitch", "Yaw", "Roll"};
inline constexpr std::array<std::string_view, 4> kAudioClasses = {"Pitch", "Glottal", "Amplitude", "Phase"};

struct MinMax {
  double min = 0.0;
  double max = 0.0;

  // (v - min) / (max - min) clamped to [0, 1]; 0 when the range is empty.
  double Normalize(double v) const;
};

// Ranges keyed by glyph component, e.g. "face/Brow", "audio/Glottal/NAQ".
struct Normalization {
  std::map<std::string, MinMax> ranges;

  double Normalize(const std::string& key, double raw) const;
  nlohmann::json ToJson() const;
  static Normalization FromJson(const nlohmann::json& value);
};

Normalization FitNormalization(const Dataset& dataset, const FeatureSchema& schema);

// Absent components (the schema has no such set) are nullopt, never zero.
struct FaceGlyph {
  std::map<std::string, std::optional<double>> part_intensity;  // lower-case part names
  std::optional<double> ring;
  std::optional<std::array<double, 3>> sticks;  // pitch, yaw, roll
  double background = 0.0;                      // prediction
};

struct AudioGlyph {
  std::map<std::string, std::optional<double>> sector_radius;
  std::map<std::string, std::vector<double>> detail_radii;  // per class, schema feature order
  double inner = 0.0;                                       // prediction
};

struct WordGlyph {
  std::optional<std::string> word;  // token with the largest |word-level phi|
  std::optional<std::size_t> token_index;
  double phi = 0.0;
  double circle = 0.0;  // prediction
};

using Glyph = std::variant<FaceGlyph, AudioGlyph, WordGlyph>;

FaceGlyph MakeFaceGlyph(const Instance& x, const FeatureSchema& schema, const Normalization& norm);
AudioGlyph MakeAudioGlyph(const Instance& x, const FeatureSchema& schema, const Normalization& norm);
// `word_level` is a per-time-step record for x, or null when none exists.
WordGlyph MakeWordGlyph(const Instance& x, const attribution::AttributionRecord* word_level);

nlohmann::json GlyphToJson(const Glyph& glyph);
Glyph GlyphFromJson(const nlohmann::json& value);

}  // namespace modallens::projection

#endif  // MODALLENS_PROJECTION_GLYPHS_H_
