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

#include "modallens/store/store.h"

#include <unistd.h>

#include <atomic>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "modallens/common/error.h"
#include "modallens/common/fingerprint.h"

namespace modallens {
namespace fs = std::filesystem;

Store::Store(fs::path root) : root_(std::move(root)) {}

fs::path Store::DefaultRoot() {
  if (const char* env = std::getenv("MODALLENS_STORE"); env != nullptr && *env != '\0') {
    return env;
  }
  return "store";
}

nlohmann::json Store::Manifest() const {
  const fs::path path = root_ / "manifest.json";
  if (!fs::exists(path)) return {{"stages", nlohmann::json::object()}};
  return ReadJsonFile(path);
}

void Store::MarkStage(const std::string& stage, const nlohmann::json& info) const {
  nlohmann::json manifest = Manifest();
  manifest["stages"][stage] = info;
  WriteJsonAtomic(root_ / "manifest.json", manifest);
}

void WriteFileAtomic(const fs::path& path, std::string_view contents) {
  static std::atomic<unsigned> counter{0};
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  fs::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid()) + "." + std::to_string(counter++);
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) Throw(ErrorKind::kIo, "cannot write " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) Throw(ErrorKind::kIo, "short write to " + tmp.string());
  }
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    Throw(ErrorKind::kIo, "cannot move " + tmp.string() + " into place: " + ec.message());
  }
}

void WriteJsonAtomic(const fs::path& path, const nlohmann::json& value) {
  WriteFileAtomic(path, value.dump(1) + "\n");
}

std::string ReadFile(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Throw(ErrorKind::kIo, "cannot read " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

nlohmann::json ReadJsonFile(const fs::path& path) {
  const std::string text = ReadFile(path);
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    Throw(ErrorKind::kParse, path.string() + ": " + e.what());
  }
}

std::string SafeFileName(std::string_view id) {
  static const char kHex[] = "0123456789ABCDEF";
  std::string out;
  for (unsigned char c : id) {
    const bool plain = (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') ||
                       (c >= '0' && c <= '9') || c == '_' || c == '-' ||
                       (c == '.' && !out.empty());
    if (plain) {
      out.push_back(static_cast<char>(c));
    } else {
      out.push_back('%');
      out.push_back(kHex[c >> 4]);
      out.push_back(kHex[c & 15]);
    }
  }
  if (out.empty()) out = "%";
  return out;
}

nlohmann::json IngestFailureToJson(const IngestFailure& failure) {
  return {{"line", failure.line},
          {"kind", std::string(ErrorKindName(failure.kind))},
          {"message", failure.message}};
}

void SaveIngest(const Store& store, const FeatureSchema& schema, const IngestResult& result) {
  const fs::path dir = store.ingest_dir();
  WriteJsonAtomic(dir / "schema.json", schema.ToJson());
  WriteFileAtomic(dir / "instances.jsonl", SerializeInstances(result.dataset));
  nlohmann::json failures = nlohmann::json::array();
  for (const IngestFailure& f : result.failures) failures.push_back(IngestFailureToJson(f));
  const nlohmann::json info = {{"schema_fingerprint", schema.Fingerprint()},
                               {"dataset_fingerprint", result.dataset.Fingerprint()},
                               {"instances", result.dataset.size()},
                               {"failures", failures}};
  WriteJsonAtomic(dir / "ingest.json", info);
  store.MarkStage("ingest", {{"dataset_fingerprint", result.dataset.Fingerprint()},
                             {"instances", result.dataset.size()}});
}

bool HasIngest(const Store& store) {
  const fs::path dir = store.ingest_dir();
  return fs::exists(dir / "ingest.json") && fs::exists(dir / "schema.json") &&
         fs::exists(dir / "instances.jsonl");
}

IngestedData LoadIngest(const Store& store) {
  if (!HasIngest(store)) {
    Throw(ErrorKind::kIncompleteUpstream,
          "no ingested dataset in " + store.root().string() + "; run `ingest` first");
  }
  const fs::path dir = store.ingest_dir();
  IngestedData out{FeatureSchema::FromJson(ReadJsonFile(dir / "schema.json")), Dataset{}, {}};
  out.dataset = LoadInstances(dir / "instances.jsonl", out.schema);
  const nlohmann::json info = ReadJsonFile(dir / "ingest.json");
  for (const nlohmann::json& f : info.value("failures", nlohmann::json::array())) {
    IngestFailure failure;
    failure.line = f.value("line", std::size_t{0});
    failure.message = f.value("message", std::string());
    out.failures.push_back(failure);
  }
  return out;
}

}  // namespace modallens
