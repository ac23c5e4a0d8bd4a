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

// Providers that reach a model running outside this process.
//
// Subprocess protocol, one JSON document per line on the child's standard
// streams:
//   child -> parent, once:  {"protocol": "modallens-provider/1",
//                            "schema_fingerprint": "...", "max_batch": N,
//                            "max_in_flight": 1}
//   parent -> child:        {"batch_id": K, "inputs": [triple, ...]}
//   child -> parent:        {"batch_id": K, "outputs": [real, ...]}
//                        or {"batch_id": K, "error": "message"}
// A triple is {"language": [[...]], "audio": [[...]], "vision": [[...]]}.
//
// The HTTP callback provider POSTs the same request document to one URL and
// expects the same response document.

#ifndef MODALLENS_ATTRIBUTION_REMOTE_PROVIDER_H_
#define MODALLENS_ATTRIBUTION_REMOTE_PROVIDER_H_

#include <sys/types.h>

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <mutex>
#include <string>

#include "modallens/attribution/provider.h"

namespace modallens::attribution {

inline constexpr char kProviderProtocol[] = "modallens-provider/1";

class SubprocessProvider : public PredictionProvider {
 public:
  // Launches `command` through /bin/sh and reads the handshake. A non-empty
  // `expected_schema_fingerprint` must match the one the child declares (if
  // it declares one).
  SubprocessProvider(std::string command, std::string expected_schema_fingerprint,
                     std::chrono::milliseconds timeout = std::chrono::seconds(60));
  ~SubprocessProvider() override;

  SubprocessProvider(const SubprocessProvider&) = delete;
  SubprocessProvider& operator=(const SubprocessProvider&) = delete;

  std::vector<double> Predict(std::span<const FeatureTriple> batch) override;
  ProviderInfo info() const override { return info_; }
  nlohmann::json Describe() const override;

 private:
  std::string ReadLine();
  void WriteLine(const std::string& line);
  void Shutdown();

  std::string command_;
  std::chrono::milliseconds timeout_;
  ProviderInfo info_;
  pid_t pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  std::string read_buffer_;
  std::uint64_t next_batch_id_ = 0;
  std::mutex mutex_;
};

class HttpProvider : public PredictionProvider {
 public:
  // `url` is http://host[:port]/path.
  explicit HttpProvider(std::string url, std::size_t max_batch = 256,
                        std::size_t max_in_flight = 4);

  std::vector<double> Predict(std::span<const FeatureTriple> batch) override;
  ProviderInfo info() const override;
  nlohmann::json Describe() const override { return {{"kind", "http"}, {"url", url_}}; }

 private:
  std::string url_;
  std::string host_;
  int port_ = 80;
  std::string path_;
  std::size_t max_batch_;
  std::size_t max_in_flight_;
  std::uint64_t next_batch_id_ = 0;
  std::mutex id_mutex_;
};

// Shared by both transports: builds a request and validates a response.
nlohmann::json MakeBatchRequest(std::uint64_t batch_id,
                                std::span<const FeatureTriple> batch);
std::vector<double> ParseBatchResponse(const nlohmann::json& response,
                                       std::uint64_t batch_id, std::size_t expected);

}  // namespace modallens::attribution

#endif  // MODALLENS_ATTRIBUTION_REMOTE_PROVIDER_H_
