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

#ifndef MODALLENS_CORE_DATASET_H_
#define MODALLENS_CORE_DATASET_H_

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "modallens/common/error.h"
#include "modallens/core/matrix.h"
#include "modallens/core/schema.h"

namespace modallens {

inline constexpr double kSentimentMin = -3.0;
inline constexpr double kSentimentMax = 3.0;

struct Token {
  std::string text;
  double start_s = 0.0;
  double end_s = 0.0;
  std::optional<std::string> pos;

  bool operator==(const Token&) const = default;
};

// One video clip: word-aligned features for every modality.
struct Instance {
  std::string id;
  std::vector<Token> tokens;
  FeatureTriple features;
  double label = 0.0;
  double prediction = 0.0;

  std::size_t length() const { return tokens.size(); }
  double AbsoluteError() const;

  bool operator==(const Instance&) const = default;
};

// Immutable after construction; lookups by id are O(1).
class Dataset {
 public:
  Dataset() = default;
  explicit Dataset(std::vector<Instance> instances);

  const std::vector<Instance>& instances() const { return instances_; }
  std::size_t size() const { return instances_.size(); }
  bool empty() const { return instances_.empty(); }
  const Instance& operator[](std::size_t i) const { return instances_[i]; }

  const Instance* Find(const std::string& id) const;
  std::optional<std::size_t> IndexOf(const std::string& id) const;

  std::string Fingerprint() const;

  bool operator==(const Dataset& other) const {
    return instances_ == other.instances_;
  }

 private:
  std::vector<Instance> instances_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Parses one instance record and validates it against the schema. Throws
// ShapeError, RangeError, SchemaError or ParseError.
Instance InstanceFromJson(const nlohmann::json& record,
                          const FeatureSchema& schema);
nlohmann::json InstanceToJson(const Instance& instance);

struct IngestFailure {
  std::size_t line = 0;  // 1-based
  ErrorKind kind = ErrorKind::kParse;
  std::string message;
};

struct IngestResult {
  Dataset dataset;
  std::vector<IngestFailure> failures;
};

// Reads every line and collects per-line failures instead of stopping.
IngestResult LoadInstancesLenient(const std::filesystem::path& path,
                                  const FeatureSchema& schema);

// Strict variant: the first failing line is rethrown with its line number.
Dataset LoadInstances(const std::filesystem::path& path,
                      const FeatureSchema& schema);

// Same, reading from an in-memory line-delimited string.
IngestResult ParseInstancesLenient(const std::string& text,
                                   const FeatureSchema& schema);

std::string SerializeInstances(const Dataset& dataset);
void WriteInstances(const std::filesystem::path& path, const Dataset& dataset);

}  // namespace modallens

#endif  // MODALLENS_CORE_DATASET_H_
