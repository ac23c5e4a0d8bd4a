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

#ifndef MODALLENS_CORE_METRICS_H_
#define MODALLENS_CORE_METRICS_H_

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "json.hpp"
#include "modallens/core/dataset.h"

namespace modallens {

struct MetricsReport {
  double mae = 0.0;
  // Undefined (nullopt) when either series is constant or n < 2.
  std::optional<double> corr;
  double f1 = 0.0;
  double acc7 = 0.0;
  double acc2 = 0.0;
  std::size_t n = 0;
};

// Integer sentiment class: round half away from zero, clamped to [-3, 3].
int SentimentClass(double value);

// Binary polarity; zero is the negative class.
inline bool IsPositive(double value) { return value > 0.0; }

// Throws DegenerateError for constant inputs or fewer than two samples.
double Pearson(std::span<const double> a, std::span<const double> b);

MetricsReport ComputeMetrics(std::span<const double> predictions,
                             std::span<const double> labels);
MetricsReport ComputeMetrics(const Dataset& dataset);

nlohmann::json ToJson(const MetricsReport& report);

struct Histogram {
  double lo = 0.0;
  double hi = 0.0;
  std::vector<std::size_t> counts;
  std::size_t underflow = 0;
  std::size_t overflow = 0;

  std::size_t InRange() const;
};

// Half-open bins [lo_i, hi_i) with the last bin closed at hi.
Histogram BinDistribution(std::span<const double> values, std::size_t bins,
                          double lo, double hi);

nlohmann::json ToJson(const Histogram& histogram);

}  // namespace modallens

#endif  // MODALLENS_CORE_METRICS_H_
