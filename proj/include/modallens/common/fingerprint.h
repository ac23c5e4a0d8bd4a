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

#ifndef MODALLENS_COMMON_FINGERPRINT_H_
#define MODALLENS_COMMON_FINGERPRINT_H_

#include <cstdint>
#include <string>
#include <string_view>

#include "json.hpp"

namespace modallens {

// Streaming 64-bit FNV-1a. Stable across platforms and runs, which is all the
// artifact store needs; it is not a cryptographic digest.
class Fingerprinter {
 public:
  Fingerprinter& Add(std::string_view bytes);
  Fingerprinter& AddJson(const nlohmann::json& value);
  Fingerprinter& Add(std::uint64_t value);

  std::uint64_t value() const { return state_; }
  std::string Hex() const;

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

std::string FingerprintOf(std::string_view bytes);
std::string FingerprintOf(const nlohmann::json& value);

// Compact serialization with sorted keys; the input to every fingerprint.
std::string CanonicalDump(const nlohmann::json& value);

}  // namespace modallens

#endif  // MODALLENS_COMMON_FINGERPRINT_H_
