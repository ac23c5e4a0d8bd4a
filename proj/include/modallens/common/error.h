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

#ifndef MODALLENS_COMMON_ERROR_H_
#define MODALLENS_COMMON_ERROR_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace modallens {

enum class ErrorKind {
  kParse,
  kSchema,
  kShape,
  kRange,
  kArgument,
  kDegenerate,
  kTooManyUnits,
  kProvider,
  kSingularSystem,
  kMissingAttribution,
  kMissingFeature,
  kNotFound,
  kNotReady,
  kIncompleteUpstream,
  kIo,
};

std::string_view ErrorKindName(ErrorKind kind);

// All library failures are reported through this type. The kind selects the
// CLI exit code and the HTTP status.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] void Throw(ErrorKind kind, const std::string& message);

}  // namespace modallens

#endif  // MODALLENS_COMMON_ERROR_H_
