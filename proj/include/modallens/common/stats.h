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

#ifndef MODALLENS_COMMON_STATS_H_
#define MODALLENS_COMMON_STATS_H_

#include <span>
#include <vector>

#include "json.hpp"

namespace modallens {

// Linear-interpolation percentile (the "linear" method of numpy). `q` is in
// [0, 100]. Returns 0 for an empty input.
double Percentile(std::span<const double> values, double q);

struct SummaryStats {
  double min = 0.0;
  double max = 0.0;
  double mean = 0.0;
  std::vector<double> values;
};

SummaryStats Summarize(std::vector<double> values);
nlohmann::json ToJson(const SummaryStats& stats);

}  // namespace modallens

#endif  // MODALLENS_COMMON_STATS_H_
