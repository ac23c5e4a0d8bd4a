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
#include "modallens/common/error.h"

namespace modallens {

std::string_view ErrorKindName(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kParse: return "ParseError";
    case ErrorKind::kSchema: return "SchemaError";
    case ErrorKind::kShape: return "ShapeError";
    case ErrorKind::kRange: return "RangeError";
    case ErrorKind::kArgument: return "ArgumentError";
    case ErrorKind::kDegenerate: return "DegenerateError";
    case ErrorKind::kTooManyUnits: return "TooManyUnits";
    case ErrorKind::kProvider: return "ProviderError";
    case ErrorKind::kSingularSystem: return "SingularSystem";
    case ErrorKind::kMissingAttribution: return "MissingAttribution";
    case ErrorKind::kMissingFeature: return "MissingFeature";
    case ErrorKind::kNotFound: return "NotFound";
    case ErrorKind::kNotReady: return "NotReady";
    case ErrorKind::kIncompleteUpstream: return "IncompleteUpstream";
    case ErrorKind::kIo: return "IoError";
  }
  return "Error";
}

void Throw(ErrorKind kind, const std::string& message) {
  throw Error(kind, std::string(ErrorKindName(kind)) + ": " + message);
}

}  // namespace modallens
