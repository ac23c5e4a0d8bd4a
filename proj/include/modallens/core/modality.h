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
#ifndef MODALLENS_CORE_MODALITY_H_
#define MODALLENS_CORE_MODALITY_H_

#include <array>
#include <cstddef>
#include <optional>
#include <string_view>

namespace modallens {

enum class Modality { kLanguage = 0, kAudio = 1, kVision = 2 };

inline constexpr std::array<Modality, 3> kModalities = {
    Modality::kLanguage, Modality::kAudio, Modality::kVision};

inline constexpr std::size_t Index(Modality m) {
  return static_cast<std::size_t>(m);
}

std::string_view ModalityName(Modality m);
std::optional<Modality> ParseModality(std::string_view name);

// Values indexed by modality.
template <typename T>
using PerModality = std::array<T, 3>;

}  // namespace modallens

#endif  // MODALLENS_CORE_MODALITY_H_
