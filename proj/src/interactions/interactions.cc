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

#include "modallens/interactions/interactions.h"

#include <cmath>
#include <cstdio>

#include "modallens/common/error.h"
#include "modallens/common/stats.h"

namespace modallens::interactions {
namespace {

std::string Fmt(const char* format, double a, double b) {
  char buffer[160];
  std::snprintf(buffer, sizeof buffer, format, a, b);
  return buffer;
}

// Sum of pairwise products sign tests on nonzero importances.
bool HasOppositePair(const PerModality<double>& I) {
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = i + 1; j < 3; ++j) {
      if (I[i] * I[j] < 0.0) return true;
    }
  }
  return false;
}

bool HasSameSignPair(const PerModality<double>& I) {
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = i + 1; j < 3; ++j) {
      if (I[i] * I[j] > 0.0) return true;
    }
  }
  return false;
}

}  // namespace

double ImportanceTriple::l1() const {
  return std::abs(importance[0]) + std::abs(importance[1]) + std::abs(importance[2]);
}

double ImportanceTriple::net() const { return importance[0] + importance[1] + importance[2]; }

std::optional<PerModality<double>> ImportanceTriple::shares() const {
  const double total = l1();
  if (!(total > 0.0)) return std::nullopt;
  return PerModality<double>{std::abs(importance[0]) / total, std::abs(importance[1]) / total,
                             std::abs(importance[2]) / total};
}

std::optional<PerModality<double>> ImportanceTriple::signed_shares() const {
  const double total = l1();
  if (!(total > 0.0)) return std::nullopt;
  return PerModality<double>{importance[0] / total, importance[1] / total,
                             importance[2] / total};
}

ImportanceTriple AggregateModalityImportance(const attribution::AttributionRecord& record) {
  ImportanceTriple t;
  t.instance_id = record.instance_id;
  for (std::size_t i = 0; i < record.units.size(); ++i) {
    t.importance[Index(record.units[i].modality)] += record.values[i];
  }
  return t;
}

nlohmann::json TripleToJson(const ImportanceTriple& t) {
  nlohmann::json out = {{"id", t.instance_id},
                        {"I_l", t.importance[0]},
                        {"I_a", t.importance[1]},
                        {"I_v", t.importance[2]},
                        {"l1", t.l1()},
                        {"net", t.net()}};
  if (auto s = t.shares()) {
    out["shares"] = {(*s)[0], (*s)[1], (*s)[2]};
  } else {
    out["shares"] = nullptr;
  }
  return out;
}

bool Thresholds::Valid() const {
  auto open = [](double v) { return v > 0.0 && v < 1.0; };
  return open(sig) && open(dom) && open(confl);
}

nlohmann::json Thresholds::ToJson() const {
  return {{"th_sig", sig}, {"th_dom", dom}, {"th_confl", confl}};
}

Thresholds Thresholds::FromJson(const nlohmann::json& doc) {
  Thresholds th;
  th.sig = doc.at("th_sig").get<double>();
  th.dom = doc.at("th_dom").get<double>();
  th.confl = doc.at("th_confl").get<double>();
  if (!th.Valid()) Throw(ErrorKind::kRange, "thresholds must lie in (0, 1)");
  return th;
}

std::string_view LabelName(Label label) {
  switch (label) {
    case Label::kDominance: return "dominance";
    case Label::kConflict: return "conflict";
    case Label::kComplement: return "complement";
    case Label::kOthers: return "others";
  }
  return "others";
}

std::optional<Label> ParseLabel(std::string_view name) {
  for (Label l : kLabels) {
    if (LabelName(l) == name) return l;
  }
  return std::nullopt;
}

Label ClassifyInteraction(const ImportanceTriple& t, const Thresholds& th) {
  const double total = t.l1();
  if (!(total > 0.0)) return Label::kOthers;
  const auto& I = t.importance;
  for (std::size_t m = 0; m < 3; ++m) {
    if (std::abs(I[m]) / total <= th.sig + kThresholdSlack) return Label::kOthers;
  }
  const double net = t.net();
  for (std::size_t m = 0; m < 3; ++m) {
    if (I[m] * net > 0.0 && std::abs(I[m]) / total >= th.dom - kThresholdSlack) {
      return Label::kDominance;
    }
  }
  if (HasOppositePair(I) && std::abs(net) / total <= th.confl + kThresholdSlack) {
    return Label::kConflict;
  }
  if (HasSameSignPair(I)) return Label::kComplement;
  return Label::kOthers;
}

InteractionLabel LabelInteraction(const ImportanceTriple& t, const Thresholds& th) {
  InteractionLabel out;
  out.instance_id = t.instance_id;
  const double total = t.l1();
  if (!(total > 0.0)) {
    out.evidence.push_back("l1 = 0");
    return out;
  }
  const auto& I = t.importance;
  for (Modality m : kModalities) {
    const double share = std::abs(I[Index(m)]) / total;
    if (share <= th.sig + kThresholdSlack) {
      out.evidence.push_back(Fmt(("share(" + std::string(ModalityName(m)) +
                                  ") = %.6g <= th_sig = %.6g")
                                     .c_str(),
                                 share, th.sig));
      return out;
    }
  }
  const double net = t.net();
  for (Modality m : kModalities) {
    const double share = std::abs(I[Index(m)]) / total;
    if (I[Index(m)] * net > 0.0 && share >= th.dom - kThresholdSlack) {
      out.label = Label::kDominance;
      out.dominant = m;
      out.evidence.push_back(Fmt(("I(" + std::string(ModalityName(m)) +
                                  ") * net = %.6g > 0")
                                     .c_str(),
                                 I[Index(m)] * net, 0.0));
      out.evidence.push_back(Fmt(("share(" + std::string(ModalityName(m)) +
                                  ") = %.6g >= th_dom = %.6g")
                                     .c_str(),
                                 share, th.dom));
      return out;
    }
  }
  const double balance = std::abs(net) / total;
  if (HasOppositePair(I) && balance <= th.confl + kThresholdSlack) {
    out.label = Label::kConflict;
    out.evidence.push_back("opposite-sign modalities present");
    out.evidence.push_back(Fmt("|net| / l1 = %.6g <= th_confl = %.6g", balance, th.confl));
    return out;
  }
  if (HasSameSignPair(I)) {
    out.label = Label::kComplement;
    out.evidence.push_back("same-sign modalities present");
    return out;
  }
  out.evidence.push_back("no rule fired");
  return out;
}

double MagnitudeGate(std::span<const ImportanceTriple> triples) {
  std::vector<double> l1;
  l1.reserve(triples.size());
  for (const ImportanceTriple& t : triples) l1.push_back(t.l1());
  return Percentile(l1, kMagnitudeGatePercentile);
}

std::vector<InteractionLabel> LabelDataset(std::span<const ImportanceTriple> triples,
                                           const Thresholds& th) {
  if (!th.Valid()) Throw(ErrorKind::kRange, "thresholds must lie in (0, 1)");
  const double gate = MagnitudeGate(triples);
  std::vector<InteractionLabel> out;
  out.reserve(triples.size());
  for (const ImportanceTriple& t : triples) {
    if (t.l1() < gate) {
      InteractionLabel label;
      label.instance_id = t.instance_id;
      label.evidence.push_back(
          Fmt("l1 = %.6g below the dataset 5th percentile %.6g", t.l1(), gate));
      out.push_back(std::move(label));
    } else {
      out.push_back(LabelInteraction(t, th));
    }
  }
  return out;
}

nlohmann::json LabelToJson(const ImportanceTriple& t, const InteractionLabel& label) {
  nlohmann::json out = TripleToJson(t);
  out["label"] = LabelName(label.label);
  out["dominant"] =
      label.dominant ? nlohmann::json(ModalityName(*label.dominant)) : nlohmann::json(nullptr);
  out["evidence"] = label.evidence;
  return out;
}

}  // namespace modallens::interactions
