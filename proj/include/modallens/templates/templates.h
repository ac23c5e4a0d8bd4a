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

#ifndef MODALLENS_TEMPLATES_TEMPLATES_H_
#define MODALLENS_TEMPLATES_TEMPLATES_H_

#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "modallens/attribution/pipeline.h"
#include "modallens/common/stats.h"
#include "modallens/core/dataset.h"
#include "modallens/templates/fpgrowth.h"

namespace modallens::templates {

enum class ItemLevel { kSet, kFeature };

// A feature set ("ADJ", "Pitch", "Brow") or a concrete feature inside one
// (word "not", "F0", "Joy"). Words without a POS tag have an empty set name.
struct Item {
  Modality modality = Modality::kLanguage;
  std::string set_name;
  std::optional<std::string> feature;

  ItemLevel level() const { return feature ? ItemLevel::kFeature : ItemLevel::kSet; }
  // The set-level item above a feature item; nullopt for set items and
  // untagged words.
  std::optional<Item> Parent() const;
  // Unique, order-defining key.
  std::string Key() const;
  nlohmann::json ToJson() const;

  bool operator==(const Item&) const = default;
};

// One influential unit and the items it produced.
struct InfluentialUnit {
  std::string unit;  // e.g. "language@3" or "audio:F0"
  double phi = 0.0;
  std::vector<std::string> items;  // item keys
};

struct Transaction {
  std::string instance_id;
  ItemList items;  // sorted unique keys
  std::vector<InfluentialUnit> units;
};

struct ImportanceRule {
  double percentile = 90.0;  // per-modality cutoff over |phi|
};

struct ItemsetBuild {
  std::vector<Transaction> transactions;  // dataset order
  std::map<std::string, Item> items;      // every key seen
  PerModality<double> cutoffs{};
  std::vector<std::string> missing;  // instances without both attribution passes
};

// Language units come from the per-time-step pass (one word per step); audio
// and vision units from the per-feature pass. A unit is influential when
// |phi| >= its modality's cutoff and |phi| > 0.
ItemsetBuild BuildItemsets(const Dataset& dataset, const FeatureSchema& schema,
                           const attribution::AttributionRun& attributions,
                           const ImportanceRule& rule = {});

enum class TemplateSort { kSupport, kImportance, kError };
std::optional<TemplateSort> ParseTemplateSort(std::string_view name);
std::string_view TemplateSortName(TemplateSort sort);

struct Template {
  std::vector<Item> items;
  std::size_t support_count = 0;
  double support_frac = 0.0;
  std::vector<std::string> members;  // dataset order
  SummaryStats importance;           // per member: summed phi over matching units
  SummaryStats errors;               // per member: |prediction - label|
  std::vector<Template> children;
};

struct TemplateOptions {
  double min_support = 0.05;
  TemplateSort sort = TemplateSort::kSupport;
};

// Mines the transactions of the instances in `scope` and nests templates.
// Feature-level itemsets are kept only when they contain the parent set item
// of each of their features (otherwise they duplicate a closed itemset with
// identical support); each is placed under the set-level template with the
// same set projection. An empty scope yields no templates.
std::vector<Template> SummarizeTemplates(const ItemsetBuild& build, const Dataset& dataset,
                                         const std::set<std::string>& scope,
                                         const TemplateOptions& options);

nlohmann::json TemplateToJson(const Template& t);
nlohmann::json TransactionToJson(const Transaction& t);

Item ItemFromJson(const nlohmann::json& value);
nlohmann::json ItemsetBuildToJson(const ItemsetBuild& build);
ItemsetBuild ItemsetBuildFromJson(const nlohmann::json& value);

}  // namespace modallens::templates

#endif  // MODALLENS_TEMPLATES_TEMPLATES_H_
