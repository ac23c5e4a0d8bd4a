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

#include "modallens/interactions/groups.h"

#include <algorithm>
#include <cmath>

#include "modallens/common/error.h"

namespace modallens::interactions {

double ChebyshevDistance(const ImportanceTriple& p, const ImportanceTriple& q) {
  double d = 0.0;
  for (std::size_t m = 0; m < 3; ++m) {
    d = std::max(d, std::abs(p.importance[m] - q.importance[m]));
  }
  return d;
}

std::vector<std::size_t> NearestNeighbourChain(std::span<const ImportanceTriple> triples) {
  const std::size_t n = triples.size();
  std::vector<std::size_t> order;
  if (n == 0) return order;
  order.reserve(n);
  std::vector<bool> used(n, false);
  std::size_t current = 0;
  for (std::size_t i = 1; i < n; ++i) {
    if (triples[i].l1() > triples[current].l1()) current = i;
  }
  for (;;) {
    used[current] = true;
    order.push_back(current);
    if (order.size() == n) break;
    std::size_t best = n;
    double best_d = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (used[j]) continue;
      const double d = ChebyshevDistance(triples[current], triples[j]);
      if (best == n || d < best_d) {
        best = j;
        best_d = d;
      }
    }
    current = best;
  }
  return order;
}

std::vector<GroupSummary> SummarizeGroups(std::span<const ImportanceTriple> triples,
                                          std::span<const InteractionLabel> labels,
                                          const Dataset& dataset) {
  if (triples.size() != labels.size()) {
    Throw(ErrorKind::kArgument, "labels and triples differ in length");
  }
  std::array<std::vector<ImportanceTriple>, 4> members;
  for (std::size_t i = 0; i < triples.size(); ++i) {
    if (labels[i].instance_id != triples[i].instance_id) {
      Throw(ErrorKind::kArgument, "label " + labels[i].instance_id +
                                      " does not align with triple " + triples[i].instance_id);
    }
    members[LabelIndex(labels[i].label)].push_back(triples[i]);
  }

  std::vector<GroupSummary> groups;
  for (Label label : kLabels) {
    const auto& group = members[LabelIndex(label)];
    GroupSummary s;
    s.label = label;
    for (std::size_t k : NearestNeighbourChain(group)) {
      const ImportanceTriple& t = group[k];
      const Instance* x = dataset.Find(t.instance_id);
      if (x == nullptr) Throw(ErrorKind::kNotFound, "no instance " + t.instance_id);
      s.members.push_back(t.instance_id);
      s.errors.push_back(x->AbsoluteError());
      s.predictions.push_back(x->prediction);
      for (std::size_t m = 0; m < 3; ++m) {
        s.importance[m].push_back(t.importance[m]);
        s.influence[m] += std::abs(t.importance[m]);
      }
      s.total_influence += t.l1();
    }
    s.prediction_histogram =
        BinDistribution(s.predictions, kPredictionBins, kSentimentMin, kSentimentMax);
    if (!s.errors.empty()) {
      double sum = 0.0;
      for (double e : s.errors) sum += e;
      s.mean_error = sum / static_cast<double>(s.errors.size());
    }
    groups.push_back(std::move(s));
  }
  std::stable_sort(groups.begin(), groups.end(), [](const GroupSummary& a, const GroupSummary& b) {
    return a.total_influence > b.total_influence;
  });
  return groups;
}

nlohmann::json GroupToJson(const GroupSummary& group) {
  nlohmann::json importance = nlohmann::json::object();
  nlohmann::json influence = nlohmann::json::object();
  for (Modality m : kModalities) {
    importance[std::string(ModalityName(m))] = group.importance[Index(m)];
    influence[std::string(ModalityName(m))] = group.influence[Index(m)];
  }
  return {{"label", LabelName(group.label)},
          {"size", group.members.size()},
          {"members", group.members},
          {"errors", group.errors},
          {"predictions", group.predictions},
          {"prediction_histogram", ToJson(group.prediction_histogram)},
          {"importance", importance},
          {"influence", influence},
          {"total_influence", group.total_influence},
          {"mean_error", group.mean_error ? nlohmann::json(*group.mean_error)
                                          : nlohmann::json(nullptr)}};
}

}  // namespace modallens::interactions
