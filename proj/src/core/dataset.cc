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

#include "modallens/core/dataset.h"

#include <cmath>
#include <fstream>
#include <sstream>

#include "modallens/common/fingerprint.h"

namespace modallens {
namespace {

using nlohmann::json;

double RequireNumber(const json& record, const char* key) {
  if (!record.contains(key) || !record[key].is_number()) {
    Throw(ErrorKind::kParse, std::string("missing numeric field \"") + key + "\"");
  }
  const double value = record[key].get<double>();
  if (!std::isfinite(value)) {
    Throw(ErrorKind::kRange, std::string("field \"") + key + "\" is not finite");
  }
  return value;
}

Token TokenFromJson(const json& value, const FeatureSchema& schema,
                    std::size_t index) {
  if (!value.is_object() || !value.contains("text") || !value["text"].is_string()) {
    Throw(ErrorKind::kParse, "token " + std::to_string(index) + " needs a text");
  }
  Token token;
  token.text = value["text"].get<std::string>();
  token.start_s = RequireNumber(value, "start_s");
  token.end_s = RequireNumber(value, "end_s");
  if (token.start_s < 0.0 || token.end_s < token.start_s) {
    Throw(ErrorKind::kRange, "token " + std::to_string(index) +
                                 " has an invalid time span");
  }
  if (value.contains("pos") && !value["pos"].is_null()) {
    if (!value["pos"].is_string()) {
      Throw(ErrorKind::kParse, "token " + std::to_string(index) + " pos must be a string");
    }
    token.pos = value["pos"].get<std::string>();
    if (!schema.HasPosTag(*token.pos)) {
      Throw(ErrorKind::kSchema, "token " + std::to_string(index) +
                                    " has POS tag \"" + *token.pos +
                                    "\" outside the schema tagset");
    }
  }
  return token;
}

Matrix MatrixFromJson(const json& value, std::size_t expected_cols,
                      const std::string& name) {
  if (!value.is_array()) Throw(ErrorKind::kParse, name + " features must be an array");
  const std::size_t rows = value.size();
  std::vector<double> data;
  data.reserve(rows * expected_cols);
  for (std::size_t r = 0; r < rows; ++r) {
    const json& row = value[r];
    if (!row.is_array()) {
      Throw(ErrorKind::kParse, name + " row " + std::to_string(r) + " is not an array");
    }
    if (row.size() != expected_cols) {
      Throw(ErrorKind::kShape, name + " row " + std::to_string(r) + " has " +
                                   std::to_string(row.size()) + " values, schema has " +
                                   std::to_string(expected_cols) + " features");
    }
    for (const json& cell : row) {
      if (!cell.is_number()) {
        Throw(ErrorKind::kParse, name + " row " + std::to_string(r) +
                                     " contains a non-number");
      }
      const double v = cell.get<double>();
      if (!std::isfinite(v)) Throw(ErrorKind::kRange, name + " value is not finite");
      data.push_back(v);
    }
  }
  return Matrix(rows, expected_cols, std::move(data));
}

}  // namespace

double Instance::AbsoluteError() const { return std::abs(prediction - label); }

Dataset::Dataset(std::vector<Instance> instances) : instances_(std::move(instances)) {
  for (std::size_t i = 0; i < instances_.size(); ++i) {
    if (!index_.emplace(instances_[i].id, i).second) {
      Throw(ErrorKind::kSchema, "duplicate instance id \"" + instances_[i].id + "\"");
    }
  }
}

const Instance* Dataset::Find(const std::string& id) const {
  auto it = index_.find(id);
  return it == index_.end() ? nullptr : &instances_[it->second];
}

std::optional<std::size_t> Dataset::IndexOf(const std::string& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::string Dataset::Fingerprint() const {
  Fingerprinter fp;
  for (const Instance& instance : instances_) fp.AddJson(InstanceToJson(instance));
  return fp.Hex();
}

Instance InstanceFromJson(const json& record, const FeatureSchema& schema) {
  if (!record.is_object()) Throw(ErrorKind::kParse, "record must be an object");
  if (!record.contains("id") || !record["id"].is_string()) {
    Throw(ErrorKind::kParse, "record needs a string id");
  }
  Instance instance;
  instance.id = record["id"].get<std::string>();
  if (instance.id.empty()) Throw(ErrorKind::kParse, "record id is empty");

  if (!record.contains("tokens") || !record["tokens"].is_array()) {
    Throw(ErrorKind::kParse, "record needs a tokens array");
  }
  const json& tokens = record["tokens"];
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    Token token = TokenFromJson(tokens[t], schema, t);
    if (t > 0 && token.start_s < instance.tokens.back().end_s) {
      Throw(ErrorKind::kRange, "token " + std::to_string(t) +
                                   " overlaps or precedes its predecessor");
    }
    instance.tokens.push_back(std::move(token));
  }

  if (!record.contains("features") || !record["features"].is_object()) {
    Throw(ErrorKind::kParse, "record needs a features object");
  }
  const json& features = record["features"];
  for (const auto& [key, value] : features.items()) {
    if (!ParseModality(key)) {
      Throw(ErrorKind::kSchema, "unknown modality \"" + key + "\" in features");
    }
  }
  for (Modality m : kModalities) {
    const std::string name(ModalityName(m));
    if (!features.contains(name)) {
      Throw(ErrorKind::kParse, "features lack modality \"" + name + "\"");
    }
    Matrix matrix = MatrixFromJson(features[name], schema.dims(m), name);
    if (matrix.rows() != instance.tokens.size()) {
      Throw(ErrorKind::kShape, name + " has " + std::to_string(matrix.rows()) +
                                   " feature rows but the instance has " +
                                   std::to_string(instance.tokens.size()) + " tokens");
    }
    instance.features[Index(m)] = std::move(matrix);
  }

  instance.label = RequireNumber(record, "label");
  instance.prediction = RequireNumber(record, "prediction");
  for (auto [key, value] : {std::pair{"label", instance.label},
                            std::pair{"prediction", instance.prediction}}) {
    if (value < kSentimentMin || value > kSentimentMax) {
      std::ostringstream msg;
      msg << key << " " << value << " is outside [-3, 3]";
      Throw(ErrorKind::kRange, msg.str());
    }
  }
  return instance;
}

json InstanceToJson(const Instance& instance) {
  json tokens = json::array();
  for (const Token& token : instance.tokens) {
    json t = {{"text", token.text}, {"start_s", token.start_s}, {"end_s", token.end_s}};
    if (token.pos) t["pos"] = *token.pos;
    tokens.push_back(std::move(t));
  }
  json features = json::object();
  for (Modality m : kModalities) {
    const Matrix& matrix = instance.features[Index(m)];
    json rows = json::array();
    for (std::size_t r = 0; r < matrix.rows(); ++r) {
      auto row = matrix.row(r);
      rows.push_back(std::vector<double>(row.begin(), row.end()));
    }
    features[std::string(ModalityName(m))] = std::move(rows);
  }
  return {{"id", instance.id},
          {"tokens", std::move(tokens)},
          {"features", std::move(features)},
          {"label", instance.label},
          {"prediction", instance.prediction}};
}

IngestResult ParseInstancesLenient(const std::string& text,
                                   const FeatureSchema& schema) {
  IngestResult result;
  std::vector<Instance> instances;
  std::unordered_map<std::string, std::size_t> seen;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      json record;
      try {
        record = json::parse(line);
      } catch (const json::parse_error& e) {
        Throw(ErrorKind::kParse, e.what());
      }
      Instance instance = InstanceFromJson(record, schema);
      if (!seen.emplace(instance.id, line_no).second) {
        Throw(ErrorKind::kSchema, "duplicate instance id \"" + instance.id + "\"");
      }
      instances.push_back(std::move(instance));
    } catch (const Error& e) {
      result.failures.push_back({line_no, e.kind(), e.what()});
    }
  }
  result.dataset = Dataset(std::move(instances));
  return result;
}

IngestResult LoadInstancesLenient(const std::filesystem::path& path,
                                  const FeatureSchema& schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Throw(ErrorKind::kIo, "cannot open instances file " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return ParseInstancesLenient(buffer.str(), schema);
}

Dataset LoadInstances(const std::filesystem::path& path, const FeatureSchema& schema) {
  IngestResult result = LoadInstancesLenient(path, schema);
  if (!result.failures.empty()) {
    const IngestFailure& first = result.failures.front();
    throw Error(first.kind, path.filename().string() + " line " +
                                std::to_string(first.line) + ": " + first.message);
  }
  return std::move(result.dataset);
}

std::string SerializeInstances(const Dataset& dataset) {
  std::string out;
  for (const Instance& instance : dataset.instances()) {
    out += InstanceToJson(instance).dump();
    out += '\n';
  }
  return out;
}

void WriteInstances(const std::filesystem::path& path, const Dataset& dataset) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) Throw(ErrorKind::kIo, "cannot write " + path.string());
  out << SerializeInstances(dataset);
}

}  // namespace modallens
