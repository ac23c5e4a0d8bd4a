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
#include "modallens/common/fingerprint.h"

#include <cstdio>

namespace modallens {

Fingerprinter& Fingerprinter::Add(std::string_view bytes) {
  for (unsigned char c : bytes) {
    state_ ^= c;
    state_ *= 0x100000001b3ULL;
  }
  // Length suffix keeps Add("ab").Add("c") distinct from Add("a").Add("bc").
  for (int shift = 0; shift < 64; shift += 8) {
    state_ ^= (bytes.size() >> shift) & 0xff;
    state_ *= 0x100000001b3ULL;
  }
  return *this;
}

Fingerprinter& Fingerprinter::AddJson(const nlohmann::json& value) {
  return Add(CanonicalDump(value));
}

Fingerprinter& Fingerprinter::Add(std::uint64_t value) {
  char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((value >> (8 * i)) & 0xff);
  return Add(std::string_view(buf, 8));
}

std::string Fingerprinter::Hex() const {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(state_));
  return buf;
}

std::string FingerprintOf(std::string_view bytes) {
  return Fingerprinter().Add(bytes).Hex();
}

std::string FingerprintOf(const nlohmann::json& value) {
  return Fingerprinter().AddJson(value).Hex();
}

std::string CanonicalDump(const nlohmann::json& value) {
  // nlohmann::json objects are std::map backed, so keys are already sorted.
  return value.dump();
}

}  // namespace modallens
