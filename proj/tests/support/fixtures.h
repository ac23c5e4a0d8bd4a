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

// Small schemas and synthetic instances shared by the unit tests.

#ifndef MODALLENS_TESTS_SUPPORT_FIXTURES_H_
#define MODALLENS_TESTS_SUPPORT_FIXTURES_H_

#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "json.hpp"
#include "modallens/core/dataset.h"
#include "modallens/core/schema.h"

namespace modallens::testing {

// language: 2 embedding dims; audio: Pitch[F0], Glottal[NAQ, QOQ];
// vision: Brow[AU1, AU2, AU4], Face emotion[Joy], Head movement[Pitch, Yaw, Roll].
inline nlohmann::json TinySchemaJson() {
  return nlohmann::json::parse(R"({
    "modalities": {
      "language": ["glove_0", "glove_1"],
      "audio": ["F0", "NAQ", "QOQ"],
      "vision": ["AU1", "AU2", "AU4", "Joy", "Pitch", "Yaw", "Roll"]
    },
    "feature_sets": {
      "audio": {"Pitch": ["F0"], "Glottal": ["NAQ", "QOQ"]},
      "vision": [
        {"name": "Brow", "features": ["AU1", "AU2", "AU4"]},
        {"name": "Face emotion", "features": ["Joy"]},
        {"name": "Head movement", "features": ["Pitch", "Yaw", "Roll"]}
      ]
    },
    "pos_tagset": ["ADJ", "NOUN", "PART", "PRON", "VERB"]
  })");
}

inline FeatureSchema TinySchema() { return FeatureSchema::FromJson(TinySchemaJson()); }

inline Instance RandomInstance(std::mt19937_64& rng, const FeatureSchema& schema,
                               const std::string& id, std::size_t tokens) {
  static const char* kWords[] = {"i", "do", "not", "like", "it", "good", "movie"};
  static const char* kTags[] = {"PRON", "VERB", "PART", "VERB", "PRON", "ADJ", "NOUN"};
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_int_distribution<int> word(0, 6);
  Instance instance;
  instance.id = id;
  double t = 0.0;
  for (std::size_t i = 0; i < tokens; ++i) {
    const int w = word(rng);
    Token token{kWords[w], t, t + 0.25, std::nullopt};
    if (w != 6 || i % 2 == 0) token.pos = kTags[w];
    t += 0.3;
    instance.tokens.push_back(token);
  }
  for (Modality m : kModalities) {
    Matrix matrix(tokens, schema.dims(m));
    for (double& v : matrix.data()) v = unit(rng);
    instance.features[Index(m)] = std::move(matrix);
  }
  instance.label = 3.0 * unit(rng);
  instance.prediction = 3.0 * unit(rng);
  return instance;
}

inline Dataset RandomDataset(std::uint64_t seed, const FeatureSchema& schema,
                             std::size_t n) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> len(1, 6);
  std::vector<Instance> instances;
  for (std::size_t i = 0; i < n; ++i) {
    instances.push_back(RandomInstance(rng, schema, "clip_" + std::to_string(i), len(rng)));
  }
  return Dataset(std::move(instances));
}

inline std::filesystem::path TempDir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("modallens_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

// Kind of the Error thrown by `fn`; records a failure when nothing is thrown.
inline ErrorKind ErrorKindOf(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "expected an Error";
  return ErrorKind::kIo;
}

inline void WriteText(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
}

}  // namespace modallens::testing

#endif  // MODALLENS_TESTS_SUPPORT_FIXTURES_H_
