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

#include "modallens/core/modality.h"

namespace modallens {

std::string_view ModalityName(Modality m) {
  switch (m) {
    case Modality::kLanguage: return "language";
    case Modality::kAudio: return "audio";
    case Modality::kVision: return "vision";
  }
  return "unknown";
}

std::optional<Modality> ParseModality(std::string_view name) {
  for (Modality m : kModalities) {
    if (ModalityName(m) == name) return m;
  }
  return std::nullopt;
}

}  // namespace modallens
