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

// The `modallens` command line, callable in-process for tests.

#ifndef MODALLENS_TOOLS_CLI_H_
#define MODALLENS_TOOLS_CLI_H_

#include <ostream>
#include <string>
#include <vector>

#include "modallens/common/error.h"

namespace modallens::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitProvider = 3;
inline constexpr int kExitUpstream = 4;

int ExitCodeFor(ErrorKind kind);

// args excludes the program name.
int Run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace modallens::cli

#endif  // MODALLENS_TOOLS_CLI_H_
