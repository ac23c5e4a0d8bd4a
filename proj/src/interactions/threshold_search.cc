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

#include "modallens/interactions/threshold_search.h"

#include <cmath>

#include "modallens/common/error.h"

namespace modallens::interactions {
namespace {

// Everything the rules need from one triple, computed once per search.
struct Prepared {
  double l1 = 0.0;
  bool gated = false;       // l1 == 0 or below the magnitude gate
  double min_share = 0.0;
  double dom_share = -1.0;  // largest share agreeing in sign with net
  double balance = 0.0;     // |net| / l1
  bool opposite = false;
  bool same = false;
  ShareVector signed_share{};
};

std::vector<Prepared> Prepare(std::span<const ImportanceTriple> triples) {
  const double gate = MagnitudeGate(triples);
  std::vector<Prepared> out(triples.size());
  for (std::size_t k = 0; k < triples.size(); ++k) {
    const ImportanceTriple& t = triples[k];
    Prepared& p = out[k];
    p.l1 = t.l1();
    if (!(p.l1 > 0.0) || p.l1 < gate) {
      p.gated = true;
    }
    if (!(p.l1 > 0.0)) continue;
    const auto& I = t.importance;
    const double net = t.net();
    p.min_share = 2.0;
    for (std::size_t m = 0; m < 3; ++m) {
      const double share = std::abs(I[m]) / p.l1;
      p.min_share = std::min(p.min_share, share);
      if (I[m] * net > 0.0) p.dom_share = std::max(p.dom_share, share);
      p.signed_share[m] = I[m] / p.l1;
      for (std::size_t j = m + 1; j < 3; ++j) {
        if (I[m] * I[j] < 0.0) p.opposite = true;
        if (I[m] * I[j] > 0.0) p.same = true;
      }
    }
    p.balance = std::abs(net) / p.l1;
  }
  return out;
}

Label Classify(const Prepared& p, const Thresholds& th) {
  if (p.gated) return Label::kOthers;
  if (p.min_share <= th.sig + kThresholdSlack) return Label::kOthers;
  if (p.dom_share >= th.dom - kThresholdSlack) return Label::kDominance;
  if (p.opposite && p.balance <= th.confl + kThresholdSlack) return Label::kConflict;
  if (p.same) return Label::kComplement;
  return Label::kOthers;
}

ObjectiveValue Evaluate(const std::vector<Prepared>& prepared, double mean_l1,
                        const Thresholds& th) {
  ObjectiveValue v;
  std::array<ShareVector, 4> sums{};
  double others_l1 = 0.0;
  for (const Prepared& p : prepared) {
    const std::size_t g = LabelIndex(Classify(p, th));
    ++v.sizes[g];
    for (std::size_t m = 0; m < 3; ++m) sums[g][m] += p.signed_share[m];
    if (g == LabelIndex(Label::kOthers)) others_l1 += p.l1;
  }
  for (std::size_t g = 0; g < 4; ++g) {
    if (v.sizes[g] == 0) continue;
    ShareVector mean;
    for (std::size_t m = 0; m < 3; ++m) mean[m] = sums[g][m] / static_cast<double>(v.sizes[g]);
    v.group_means[g] = mean;
  }
  double total = 0.0;
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = 0; j < 4; ++j) {
      if (!v.group_means[i] || !v.group_means[j]) continue;
      double d2 = 0.0;
      for (std::size_t m = 0; m < 3; ++m) {
        const double d = (*v.group_means[i])[m] - (*v.group_means[j])[m];
        d2 += d * d;
      }
      total += std::sqrt(d2);
    }
  }
  v.separation = total / 16.0;
  const std::size_t n_others = v.sizes[LabelIndex(Label::kOthers)];
  if (n_others > 0 && mean_l1 > 0.0) {
    v.others_magnitude = (others_l1 / static_cast<double>(n_others)) / mean_l1;
  }
  v.objective = v.separation - v.others_magnitude;
  return v;
}

double MeanL1(const std::vector<Prepared>& prepared) {
  double s = 0.0;
  for (const Prepared& p : prepared) s += p.l1;
  return prepared.empty() ? 0.0 : s / static_cast<double>(prepared.size());
}

}  // namespace

ObjectiveValue EvaluateObjective(std::span<const ImportanceTriple> triples,
                                 const Thresholds& th) {
  const auto prepared = Prepare(triples);
  return Evaluate(prepared, MeanL1(prepared), th);
}

std::vector<double> GridValues(double grid_step) {
  if (!(grid_step > 0.0 && grid_step < 1.0)) {
    Throw(ErrorKind::kArgument, "grid_step must lie in (0, 1)");
  }
  std::vector<double> values;
  for (std::size_t k = 1;; ++k) {
    const double v = static_cast<double>(k) * grid_step;
    if (v >= 1.0 - 1e-9) break;
    values.push_back(v);
  }
  return values;
}

ThresholdSearchResult OptimizeThresholds(std::span<const ImportanceTriple> triples,
                                         std::span<const Thresholds> candidates) {
  if (triples.empty()) Throw(ErrorKind::kArgument, "threshold search needs at least one triple");
  if (candidates.empty()) Throw(ErrorKind::kArgument, "threshold search needs a candidate");
  const auto prepared = Prepare(triples);
  const double mean_l1 = MeanL1(prepared);
  ThresholdSearchResult result;
  result.trace.reserve(candidates.size());
  bool have = false;
  for (const Thresholds& th : candidates) {
    ObjectiveValue v = Evaluate(prepared, mean_l1, th);
    result.trace.push_back({th, v.objective, v.sizes});
    if (!have || v.objective > result.at_best.objective) {
      have = true;
      result.best = th;
      result.at_best = std::move(v);
    }
  }
  return result;
}

ThresholdSearchResult OptimizeThresholds(std::span<const ImportanceTriple> triples,
                                         double grid_step) {
  const std::vector<double> values = GridValues(grid_step);
  std::vector<Thresholds> candidates;
  candidates.reserve(values.size() * values.size() * values.size());
  for (double sig : values) {
    for (double dom : values) {
      for (double confl : values) candidates.push_back({sig, dom, confl});
    }
  }
  ThresholdSearchResult result = OptimizeThresholds(triples, candidates);
  result.grid_step = grid_step;
  return result;
}

namespace {

nlohmann::json SizesJson(const std::array<std::size_t, 4>& sizes) {
  nlohmann::json out = nlohmann::json::object();
  for (Label l : kLabels) out[std::string(LabelName(l))] = sizes[LabelIndex(l)];
  return out;
}

}  // namespace

nlohmann::json SearchSummaryJson(const ThresholdSearchResult& result) {
  nlohmann::json out = result.best.ToJson();
  out["objective"] = result.at_best.objective;
  out["separation"] = result.at_best.separation;
  out["others_magnitude"] = result.at_best.others_magnitude;
  out["grid_step"] = result.grid_step;
  out["group_sizes"] = SizesJson(result.at_best.sizes);
  nlohmann::json means = nlohmann::json::object();
  for (Label l : kLabels) {
    const auto& mean = result.at_best.group_means[LabelIndex(l)];
    means[std::string(LabelName(l))] =
        mean ? nlohmann::json{(*mean)[0], (*mean)[1], (*mean)[2]} : nlohmann::json(nullptr);
  }
  out["group_means"] = means;
  return out;
}

nlohmann::json TraceJson(const ThresholdSearchResult& result) {
  nlohmann::json points = nlohmann::json::array();
  for (const GridPoint& p : result.trace) {
    points.push_back({{"th_sig", p.thresholds.sig},
                      {"th_dom", p.thresholds.dom},
                      {"th_confl", p.thresholds.confl},
                      {"objective", p.objective},
                      {"sizes", SizesJson(p.sizes)}});
  }
  return {{"grid_step", result.grid_step}, {"points", points}};
}

}  // namespace modallens::interactions
