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

// Synthetic corpus with planted modality interactions.
//
// Every instance is explained by a linear model whose per-modality
// contributions are chosen up front, so exact attributions against a zero
// background recover them and the interaction type of each instance is known.

#ifndef MODALLENS_DEMO_PLANTED_H_
#define MODALLENS_DEMO_PLANTED_H_

#include <cstdint>
#include <map>
#include <optional>
#include <string>

#include "modallens/attribution/provider.h"
#include "modallens/core/dataset.h"
#include "modallens/core/schema.h"
#include "modallens/interactions/interactions.h"

namespace modallens::demo {

struct PlantedOptions {
  std::uint64_t seed = 7;
  std::size_t per_class = 150;  // instances per interaction type
  // Probability that an instance pushes the prediction up.
  double positive_fraction = 1.0;
  // Modality that dominates dominance instances; random per instance if unset.
  std::optional<Modality> dominant = Modality::kLanguage;
  std::size_t min_tokens = 3;
  std::size_t max_tokens = 6;
};

struct PlantedCorpus {
  FeatureSchema schema;
  Dataset dataset;
  attribution::LinearProvider model;
  std::map<std::string, interactions::Label> truth;
  std::map<std::string, PerModality<double>> contributions;
};

// language: 4 embedding dims; audio: Pitch[F0, F0_delta], Glottal[NAQ, QOQ];
// vision: Brow[AU1, AU4], Face emotion[Joy], Head movement[Yaw].
FeatureSchema PlantedSchema();

PlantedCorpus GeneratePlanted(const PlantedOptions& options);

}  // namespace modallens::demo

#endif  // MODALLENS_DEMO_PLANTED_H_
