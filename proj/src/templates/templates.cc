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

#include "modallens/templates/templates.h"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "modallens/common/error.h"

namespace modallens::templates {
namespace {

using attribution::AttributionRecord;
using attribution::Granularity;

struct Candidate {
  std::string unit;
  Modality modality;
  double phi;
  std::vector<Item> items;
};

std::vector<Candidate> UnitsOf(const Instance& x, const FeatureSchema& schema,
                               const AttributionRecord& words, const AttributionRecord& features) {
  std::vector<Candidate> out;
  for (std::size_t i = 0; i < words.units.size(); ++i) {
    const auto& unit = words.units[i];
    if (unit.modality != Modality::kLanguage || unit.time >= x.tokens.size()) continue;
    const Token& token = x.tokens[unit.time];
    Candidate c{"language@" + std::to_string(unit.time), Modality::kLanguage, words.values[i], {}};
    if (token.pos) {
      c.items.push_back(Item{Modality::kLanguage, *token.pos, std::nullopt});
      c.items.push_back(Item{Modality::kLanguage, *token.pos, token.text});
    } else {
      c.items.push_back(Item{Modality::kLanguage, "", token.text});
    }
    out.push_back(std::move(c));
  }
  for (std::size_t i = 0; i < features.units.size(); ++i) {
    const auto& unit = features.units[i];
    if (unit.modality == Modality::kLanguage) continue;
    const std::string& name = schema.features(unit.modality)[unit.dim];
    const std::string& set = schema.SetOf(unit.modality, unit.dim);
    Candidate c{std::string(ModalityName(unit.modality)) + ":" + name, unit.modality,
                features.values[i], {}};
    c.items.push_back(Item{unit.modality, set, std::nullopt});
    c.items.push_back(Item{unit.modality, set, name});
    out.push_back(std::move(c));
  }
  return out;
}

double MeanAbs(const SummaryStats& s) {
  if (s.values.empty()) return 0.0;
  double total = 0.0;
  for (double v : s.values) total += std::abs(v);
  return total / static_cast<double>(s.values.size());
}

void SortTemplates(std::vector<Template>& list, TemplateSort sort) {
  auto key = [sort](const Template& t) {
    switch (sort) {
      case TemplateSort::kSupport: return static_cast<double>(t.support_count);
      case TemplateSort::kImportance: return MeanAbs(t.importance);
      case TemplateSort::kError: return t.errors.mean;
    }
    return 0.0;
  };
  std::stable_sort(list.begin(), list.end(), [&](const Template& a, const Template& b) {
    const double ka = key(a), kb = key(b);
    if (ka != kb) return ka > kb;
    if (a.support_count != b.support_count) return a.support_count > b.support_count;
    std::vector<std::string> ia, ib;
    for (const Item& i : a.items) ia.push_back(i.Key());
    for (const Item& i : b.items) ib.push_back(i.Key());
    return ia < ib;
  });
  for (Template& t : list) SortTemplates(t.children, sort);
}

}  // namespace

std::optional<Item> Item::Parent() const {
  if (!feature || set_name.empty()) return std::nullopt;
  return Item{modality, set_name, std::nullopt};
}

std::string Item::Key() const {
  std::string key = std::string(ModalityName(modality)) + "/" + set_name;
  if (feature) key += "/" + *feature;
  return key;
}

nlohmann::json Item::ToJson() const {
  return {{"modality", ModalityName(modality)},
          {"set", set_name},
          {"feature", feature ? nlohmann::json(*feature) : nlohmann::json(nullptr)},
          {"level", feature ? "feature" : "set"},
          {"key", Key()}};
}

ItemsetBuild BuildItemsets(const Dataset& dataset, const FeatureSchema& schema,
                           const attribution::AttributionRun& attributions,
                           const ImportanceRule& rule) {
  if (!(rule.percentile >= 0.0 && rule.percentile <= 100.0)) {
    Throw(ErrorKind::kArgument, "importance cutoff percentile must lie in [0, 100]");
  }
  ItemsetBuild build;
  std::vector<std::pair<std::size_t, std::vector<Candidate>>> per_instance;
  PerModality<std::vector<double>> magnitudes;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const Instance& x = dataset[i];
    const auto* a = attributions.Find(x.id);
    std::optional<AttributionRecord> words, features;
    if (a != nullptr) {
      words = attribution::RecordAt(*a, x, Granularity::kTimeStep);
      features = attribution::RecordAt(*a, x, Granularity::kFeature);
    }
    if (!words || !features) {
      build.missing.push_back(x.id);
      continue;
    }
    auto candidates = UnitsOf(x, schema, *words, *features);
    for (const Candidate& c : candidates) magnitudes[Index(c.modality)].push_back(std::abs(c.phi));
    per_instance.emplace_back(i, std::move(candidates));
  }
  for (Modality m : kModalities) {
    build.cutoffs[Index(m)] = Percentile(magnitudes[Index(m)], rule.percentile);
  }
  for (auto& [index, candidates] : per_instance) {
    Transaction t;
    t.instance_id = dataset[index].id;
    for (Candidate& c : candidates) {
      const double magnitude = std::abs(c.phi);
      if (!(magnitude > 0.0) || magnitude < build.cutoffs[Index(c.modality)]) continue;
      InfluentialUnit unit{c.unit, c.phi, {}};
      for (const Item& item : c.items) {
        const std::string key = item.Key();
        build.items.emplace(key, item);
        unit.items.push_back(key);
        t.items.push_back(key);
      }
      t.units.push_back(std::move(unit));
    }
    std::sort(t.items.begin(), t.items.end());
    t.items.erase(std::unique(t.items.begin(), t.items.end()), t.items.end());
    build.transactions.push_back(std::move(t));
  }
  return build;
}

std::optional<TemplateSort> ParseTemplateSort(std::string_view name) {
  for (TemplateSort s : {TemplateSort::kSupport, TemplateSort::kImportance, TemplateSort::kError}) {
    if (TemplateSortName(s) == name) return s;
  }
  return std::nullopt;
}

std::string_view TemplateSortName(TemplateSort sort) {
  switch (sort) {
    case TemplateSort::kSupport: return "support";
    case TemplateSort::kImportance: return "importance";
    case TemplateSort::kError: return "error";
  }
  return "support";
}

std::vector<Template> SummarizeTemplates(const ItemsetBuild& build, const Dataset& dataset,
                                         const std::set<std::string>& scope,
                                         const TemplateOptions& options) {
  std::vector<const Transaction*> scoped;
  for (const Transaction& t : build.transactions) {
    if (scope.count(t.instance_id)) scoped.push_back(&t);
  }
  if (scoped.empty()) return {};
  std::vector<ItemList> lists;
  lists.reserve(scoped.size());
  for (const Transaction* t : scoped) lists.push_back(t->items);
  const auto itemsets = FpGrowth(lists, options.min_support);

  std::vector<Template> flat;
  std::vector<ItemList> projections;  // set-level part of each kept itemset
  for (const FrequentItemset& set : itemsets) {
    bool closed = true;
    ItemList projection;
    for (const std::string& key : set.items) {
      const Item& item = build.items.at(key);
      if (item.level() == ItemLevel::kSet) {
        projection.push_back(key);
      } else if (auto parent = item.Parent()) {
        closed = closed && std::binary_search(set.items.begin(), set.items.end(), parent->Key());
      }
    }
    if (!closed) continue;

    Template t;
    for (const std::string& key : set.items) t.items.push_back(build.items.at(key));
    std::vector<double> importance, errors;
    for (const Transaction* tx : scoped) {
      if (!std::includes(tx->items.begin(), tx->items.end(), set.items.begin(), set.items.end())) {
        continue;
      }
      t.members.push_back(tx->instance_id);
      double phi = 0.0;
      for (const InfluentialUnit& unit : tx->units) {
        const bool matches = std::any_of(unit.items.begin(), unit.items.end(), [&](const auto& k) {
          return std::binary_search(set.items.begin(), set.items.end(), k);
        });
        if (matches) phi += unit.phi;
      }
      importance.push_back(phi);
      const Instance* x = dataset.Find(tx->instance_id);
      errors.push_back(x != nullptr ? x->AbsoluteError() : 0.0);
    }
    t.support_count = set.support;
    t.support_frac = static_cast<double>(set.support) / static_cast<double>(scoped.size());
    t.importance = Summarize(std::move(importance));
    t.errors = Summarize(std::move(errors));
    flat.push_back(std::move(t));
    projections.push_back(projection.size() == set.items.size() ? ItemList{} : projection);
  }

  // Set-level templates own the feature-level templates that project onto them.
  std::map<ItemList, std::size_t> set_level;
  for (std::size_t i = 0; i < flat.size(); ++i) {
    if (projections[i].empty() &&
        std::all_of(flat[i].items.begin(), flat[i].items.end(),
                    [](const Item& it) { return it.level() == ItemLevel::kSet; })) {
      ItemList keys;
      for (const Item& it : flat[i].items) keys.push_back(it.Key());
      set_level.emplace(std::move(keys), i);
    }
  }
  std::vector<std::vector<std::size_t>> children(flat.size());
  std::vector<bool> nested(flat.size(), false);
  for (std::size_t i = 0; i < flat.size(); ++i) {
    if (projections[i].empty()) continue;
    auto it = set_level.find(projections[i]);
    if (it == set_level.end()) continue;
    children[it->second].push_back(i);
    nested[i] = true;
  }
  std::vector<Template> top;
  for (std::size_t i = 0; i < flat.size(); ++i) {
    if (nested[i]) continue;
    Template t = flat[i];
    for (std::size_t c : children[i]) t.children.push_back(flat[c]);
    top.push_back(std::move(t));
  }
  SortTemplates(top, options.sort);
  return top;
}

nlohmann::json TemplateToJson(const Template& t) {
  nlohmann::json items = nlohmann::json::array();
  for (const Item& item : t.items) items.push_back(item.ToJson());
  nlohmann::json children = nlohmann::json::array();
  for (const Template& c : t.children) children.push_back(TemplateToJson(c));
  return {{"items", items},
          {"support_count", t.support_count},
          {"support_frac", t.support_frac},
          {"member_ids", t.members},
          {"importance_stats", ToJson(t.importance)},
          {"error_stats", ToJson(t.errors)},
          {"children", children}};
}

nlohmann::json TransactionToJson(const Transaction& t) {
  nlohmann::json units = nlohmann::json::array();
  for (const InfluentialUnit& u : t.units) {
    units.push_back({{"unit", u.unit}, {"phi", u.phi}, {"items", u.items}});
  }
  return {{"instance_id", t.instance_id}, {"items", t.items}, {"units", units}};
}

Item ItemFromJson(const nlohmann::json& value) {
  const auto m = ParseModality(value.at("modality").get<std::string>());
  if (!m) Throw(ErrorKind::kParse, "item names an unknown modality");
  Item item{*m, value.at("set").get<std::string>(), std::nullopt};
  if (!value.at("feature").is_null()) item.feature = value.at("feature").get<std::string>();
  return item;
}

nlohmann::json ItemsetBuildToJson(const ItemsetBuild& build) {
  nlohmann::json items = nlohmann::json::array();
  for (const auto& [key, item] : build.items) items.push_back(item.ToJson());
  nlohmann::json transactions = nlohmann::json::array();
  for (const auto& t : build.transactions) transactions.push_back(TransactionToJson(t));
  nlohmann::json cutoffs = nlohmann::json::object();
  for (Modality m : kModalities) cutoffs[std::string(ModalityName(m))] = build.cutoffs[Index(m)];
  return {{"items", items}, {"transactions", transactions}, {"cutoffs", cutoffs}, {"missing", build.missing}};
}

ItemsetBuild ItemsetBuildFromJson(const nlohmann::json& value) {
  ItemsetBuild build;
  for (const auto& v : value.at("items")) {
    Item item = ItemFromJson(v);
    build.items.emplace(item.Key(), std::move(item));
  }
  for (const auto& v : value.at("transactions")) {
    Transaction t;
    t.instance_id = v.at("instance_id").get<std::string>();
    t.items = v.at("items").get<ItemList>();
    for (const auto& u : v.at("units")) {
      t.units.push_back({u.at("unit").get<std::string>(), u.at("phi").get<double>(),
                         u.at("items").get<std::vector<std::string>>()});
    }
    build.transactions.push_back(std::move(t));
  }
  for (Modality m : kModalities) {
    build.cutoffs[Index(m)] = value.at("cutoffs").at(std::string(ModalityName(m))).get<double>();
  }
  build.missing = value.at("missing").get<std::vector<std::string>>();
  return build;
}

}  // namespace modallens::templates
