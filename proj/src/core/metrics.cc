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

#include "modallens/core/metrics.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "modallens/common/error.h"

namespace modallens {

int SentimentClass(double value) {
  // std::round rounds halfway cases away from zero.
  const double rounded = std::round(value);
  return static_cast<int>(std::clamp(rounded, kSentimentMin, kSentimentMax));
}

double Pearson(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) Throw(ErrorKind::kShape, "series lengths differ");
  const std::size_t n = a.size();
  if (n < 2) Throw(ErrorKind::kDegenerate, "correlation needs at least two samples");
  const double mean_a = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mean_b = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double cov = 0.0, var_a = 0.0, var_b = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double da = a[i] - mean_a;
    const double db = b[i] - mean_b;
    cov += da * db;
    var_a += da * da;
    var_b += db * db;
  }
  if (var_a <= 0.0 || var_b <= 0.0) {
    Throw(ErrorKind::kDegenerate, "correlation undefined for a constant series");
  }
  return std::clamp(cov / std::sqrt(var_a * var_b), -1.0, 1.0);
}

MetricsReport ComputeMetrics(std::span<const double> predictions,
                             std::span<const double> labels) {
  if (predictions.size() != labels.size()) {
    Throw(ErrorKind::kShape, "predictions and labels differ in length");
  }
  if (predictions.empty()) Throw(ErrorKind::kArgument, "metrics need n >= 1");
  MetricsReport report;
  report.n = predictions.size();
  double abs_err = 0.0;
  std::size_t acc7_hits = 0, acc2_hits = 0, tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < report.n; ++i) {
    abs_err += std::abs(predictions[i] - labels[i]);
    if (SentimentClass(predictions[i]) == SentimentClass(labels[i])) ++acc7_hits;
    const bool pred_pos = IsPositive(predictions[i]);
    const bool true_pos = IsPositive(labels[i]);
    if (pred_pos == true_pos) ++acc2_hits;
    if (pred_pos && true_pos) ++tp;
    if (pred_pos && !true_pos) ++fp;
    if (!pred_pos && true_pos) ++fn;
  }
  const double n = static_cast<double>(report.n);
  report.mae = abs_err / n;
  report.acc7 = acc7_hits / n;
  report.acc2 = acc2_hits / n;
  // No positives on either side: the classifier agrees perfectly.
  const std::size_t denom = 2 * tp + fp + fn;
  report.f1 = denom == 0 ? 1.0 : 2.0 * tp / static_cast<double>(denom);
  try {
    report.corr = Pearson(predictions, labels);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::kDegenerate) throw;
  }
  return report;
}

MetricsReport ComputeMetrics(const Dataset& dataset) {
  std::vector<double> predictions, labels;
  predictions.reserve(dataset.size());
  labels.reserve(dataset.size());
  for (const Instance& instance : dataset.instances()) {
    predictions.push_back(instance.prediction);
    labels.push_back(instance.label);
  }
  return ComputeMetrics(predictions, labels);
}

nlohmann::json ToJson(const MetricsReport& report) {
  return {{"mae", report.mae},
          {"corr", report.corr ? nlohmann::json(*report.corr) : nlohmann::json()},
          {"f1", report.f1},
          {"acc7", report.acc7},
          {"acc2", report.acc2},
          {"n", report.n}};
}

std::size_t Histogram::InRange() const {
  return std::accumulate(counts.begin(), counts.end(), std::size_t{0});
}

Histogram BinDistribution(std::span<const double> values, std::size_t bins,
                          double lo, double hi) {
  if (bins == 0) Throw(ErrorKind::kArgument, "histogram needs at least one bin");
  if (!(lo < hi)) Throw(ErrorKind::kArgument, "histogram range must have lo < hi");
  Histogram h;
  h.lo = lo;
  h.hi = hi;
  h.counts.assign(bins, 0);
  const double width = (hi - lo) / static_cast<double>(bins);
  for (double v : values) {
    if (v < lo) {
      ++h.underflow;
    } else if (v > hi) {
      ++h.overflow;
    } else if (v == hi) {
      ++h.counts.back();
    } else {
      auto bin = static_cast<std::size_t>(std::floor((v - lo) / width));
      ++h.counts[std::min(bin, bins - 1)];
    }
  }
  return h;
}

nlohmann::json ToJson(const Histogram& histogram) {
  return {{"lo", histogram.lo},
          {"hi", histogram.hi},
          {"counts", histogram.counts},
          {"underflow", histogram.underflow},
          {"overflow", histogram.overflow}};
}

}  // namespace modallens
