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

#include "modallens/service/service.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "modallens/common/error.h"
#include "modallens/common/fingerprint.h"
#include "modallens/core/metrics.h"
#include "modallens/simd/kernels.h"

namespace modallens::service {
namespace fs = std::filesystem;
using interactions::Label;
using nlohmann::json;

namespace {

constexpr int kApiVersion = 1;

std::string Name(Modality m) { return std::string(ModalityName(m)); }

std::vector<std::string> MissingStages(const json& manifest) {
  std::vector<std::string> missing;
  for (const char* s : pipeline::kStageOrder) {
    if (!manifest.contains("stages") || !manifest["stages"].contains(s) ||
        !manifest["stages"][s].contains("fingerprint")) {
      missing.push_back(s);
    }
  }
  return missing;
}

std::pair<double, double> ClosedRange(const json& v, const std::string& what) {
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
    Throw(ErrorKind::kArgument, what + " must be a [lo, hi] pair of numbers");
  }
  const double lo = v[0].get<double>(), hi = v[1].get<double>();
  if (!std::isfinite(lo) || !std::isfinite(hi) || lo > hi) {
    Throw(ErrorKind::kRange, what + " must satisfy lo <= hi with finite bounds");
  }
  return {lo, hi};
}

bool Within(double v, const std::optional<std::pair<double, double>>& r) {
  return !r || (v >= r->first && v <= r->second);
}

const interactions::GroupSummary& FindGroup(const Snapshot& s, Label label) {
  for (const auto& g : s.analysis.groups) {
    if (g.label == label) return g;
  }
  Throw(ErrorKind::kNotFound, "no group `" + std::string(interactions::LabelName(label)) + "`");
}

Label ParseGroup(const std::string& name) {
  const auto label = interactions::ParseLabel(name);
  if (!label) Throw(ErrorKind::kNotFound, "unknown group `" + name + "`");
  return *label;
}

json ScopeJson(const Scope& scope, std::size_t size) {
  return {{"group", scope.group ? json(interactions::LabelName(*scope.group)) : json(nullptr)},
          {"ids", scope.ids ? json(*scope.ids) : json(nullptr)},
          {"size", size}};
}

std::size_t ParseSize(const std::string& text, const std::string& what) {
  std::size_t pos = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(text, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != text.size() || text.front() == '-') {
    Throw(ErrorKind::kArgument, what + " must be a non-negative integer");
  }
  return static_cast<std::size_t>(v);
}

double ParseNumber(const std::string& text, const std::string& what) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != text.size() || !std::isfinite(v)) {
    Throw(ErrorKind::kArgument, what + " must be a finite number");
  }
  return v;
}

void AllowOnly(const std::map<std::string, std::string>& query,
               std::initializer_list<const char*> allowed) {
  for (const auto& [key, value] : query) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
      Throw(ErrorKind::kArgument, "unknown parameter `" + key + "`");
    }
  }
}

}  // namespace

// ---- snapshot ----

std::optional<std::string> ManifestFingerprint(const json& manifest) {
  if (!MissingStages(manifest).empty()) return std::nullopt;
  json fps = json::array();
  for (const char* s : pipeline::kStageOrder) fps.push_back(manifest["stages"][s]["fingerprint"]);
  return FingerprintOf(fps);
}

std::shared_ptr<const Snapshot> LoadSnapshot(const Store& store) {
  const json manifest = store.Manifest();
  const auto fp = ManifestFingerprint(manifest);
  if (!fp) {
    const auto missing = MissingStages(manifest);
    Throw(ErrorKind::kNotReady, "analysis is not ready in " + store.root().string() +
                                    "; run `" + missing.front() + "` first");
  }
  auto s = std::make_shared<Snapshot>();
  s->fingerprint = *fp;
  s->stages = manifest["stages"];
  IngestedData data = LoadIngest(store);
  s->schema = std::move(data.schema);
  s->dataset = std::move(data.dataset);
  s->run = pipeline::LoadCurrentAttributions(store, s->dataset);

  s->thresholds_doc = ReadJsonFile(store.analysis_dir() / "thresholds.json");
  pipeline::AnalysisConfig config;
  config.grid_step = s->thresholds_doc.value("grid_step", config.grid_step);
  config.thresholds = interactions::Thresholds::FromJson(s->thresholds_doc["thresholds"]);
  s->analysis = pipeline::Analyze(s->dataset, s->run, config);
  for (std::size_t i = 0; i < s->analysis.triples.size(); ++i) {
    s->label_of[s->analysis.triples[i].instance_id] = s->analysis.labels[i].label;
    s->triple_index[s->analysis.triples[i].instance_id] = i;
  }

  const json templates_doc = ReadJsonFile(store.templates_dir() / "templates.json");
  s->mining = pipeline::MiningConfig::FromJson(templates_doc["config"]);
  s->build = templates::ItemsetBuildFromJson(ReadJsonFile(store.templates_dir() / "itemsets.json"));

  const json projection_doc = ReadJsonFile(store.projection_dir() / "projection.json");
  s->projection_config = projection::ProjectionConfig::FromJson(projection_doc["config"]);
  for (Modality m : kModalities) {
    s->projections[Index(m)] = projection::ModalityProjectionFromJson(
        ReadJsonFile(store.projection_dir() / (Name(m) + ".json")));
  }
  s->normalization =
      projection::Normalization::FromJson(ReadJsonFile(store.projection_dir() / "normalization.json"));
  return s;
}

BrushQuery BrushQuery::FromJson(const json& body) {
  if (!body.is_object()) Throw(ErrorKind::kArgument, "query body must be a JSON object");
  BrushQuery q;
  for (const auto& [key, value] : body.items()) {
    if (key != "label" && key != "range" && key != "importance" && key != "prediction") {
      Throw(ErrorKind::kArgument, "unknown query field `" + key + "`");
    }
  }
  if (!body.contains("label") || !body["label"].is_string()) {
    Throw(ErrorKind::kArgument, "query needs a string `label`");
  }
  q.label = ParseGroup(body["label"].get<std::string>());
  if (body.contains("range") && !body["range"].is_null()) {
    const json& r = body["range"];
    if (!r.is_array() || r.size() != 2 || !r[0].is_number_integer() || !r[1].is_number_integer()) {
      Throw(ErrorKind::kArgument, "range must be a [start, end) pair of integers");
    }
    const auto start = r[0].get<long long>(), end = r[1].get<long long>();
    if (start < 0 || end < start) Throw(ErrorKind::kRange, "range needs 0 <= start <= end");
    q.range = {static_cast<std::size_t>(start), static_cast<std::size_t>(end)};
  }
  if (body.contains("importance") && !body["importance"].is_null()) {
    if (!body["importance"].is_object()) {
      Throw(ErrorKind::kArgument, "importance must map modality names to ranges");
    }
    for (const auto& [name, value] : body["importance"].items()) {
      const auto m = ParseModality(name);
      if (!m) Throw(ErrorKind::kArgument, "unknown modality `" + name + "`");
      q.importance[Index(*m)] = ClosedRange(value, "importance." + name);
    }
  }
  if (body.contains("prediction") && !body["prediction"].is_null()) {
    q.prediction = ClosedRange(body["prediction"], "prediction");
  }
  return q;
}

std::set<std::string> ResolveScope(const Snapshot& s, const Scope& scope) {
  std::set<std::string> ids;
  if (scope.group) {
    const auto& g = FindGroup(s, *scope.group);
    ids.insert(g.members.begin(), g.members.end());
  }
  if (scope.ids) {
    std::set<std::string> listed;
    for (const auto& id : *scope.ids) {
      if (s.dataset.Find(id) == nullptr) Throw(ErrorKind::kNotFound, "unknown instance `" + id + "`");
      listed.insert(id);
    }
    if (scope.group) {
      std::set<std::string> both;
      std::set_intersection(ids.begin(), ids.end(), listed.begin(), listed.end(),
                            std::inserter(both, both.end()));
      ids = std::move(both);
    } else {
      ids = std::move(listed);
    }
  }
  if (scope.all()) {
    for (const Instance& x : s.dataset.instances()) ids.insert(x.id);
  }
  return ids;
}

Scope ScopeFromQuery(const std::map<std::string, std::string>& query) {
  Scope scope;
  if (auto it = query.find("group"); it != query.end() && !it->second.empty()) {
    scope.group = ParseGroup(it->second);
  }
  if (auto it = query.find("ids"); it != query.end()) {
    std::vector<std::string> ids;
    std::stringstream in(it->second);
    std::string id;
    while (std::getline(in, id, ',')) {
      if (!id.empty()) ids.push_back(id);
    }
    scope.ids = std::move(ids);
  }
  return scope;
}

int StatusFor(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kNotFound:
      return 404;
    case ErrorKind::kNotReady:
    case ErrorKind::kIncompleteUpstream:
      return 409;
    case ErrorKind::kParse:
    case ErrorKind::kSchema:
    case ErrorKind::kShape:
    case ErrorKind::kRange:
    case ErrorKind::kArgument:
      return 400;
    default:
      return 500;
  }
}

std::string ErrorBody(ErrorKind kind, const std::string& message,
                      const std::optional<std::string>& fingerprint) {
  return json{{"error", {{"kind", ErrorKindName(kind)}, {"message", message}}},
              {"fingerprint", fingerprint ? json(*fingerprint) : json(nullptr)}}
      .dump();
}

// ---- service ----

AnalysisService::AnalysisService(Store store) : store_(std::move(store)) {}

std::shared_ptr<const Snapshot> AnalysisService::Current() {
  const auto fp = ManifestFingerprint(store_.Manifest());
  {
    std::lock_guard lock(mutex_);
    if (fp && snapshot_ && snapshot_->fingerprint == *fp) return snapshot_;
  }
  // Serialize reloads; readers of the old snapshot are unaffected.
  std::lock_guard load(load_mutex_);
  {
    std::lock_guard lock(mutex_);
    if (fp && snapshot_ && snapshot_->fingerprint == *fp) return snapshot_;
  }
  auto fresh = LoadSnapshot(store_);
  std::lock_guard lock(mutex_);
  snapshot_ = fresh;
  template_cache_.clear();
  return snapshot_;
}

json AnalysisService::Progress() const {
  const json manifest = store_.Manifest();
  const auto missing = MissingStages(manifest);
  json stages = json::array();
  for (const char* s : pipeline::kStageOrder) {
    const bool done = std::find(missing.begin(), missing.end(), s) == missing.end();
    stages.push_back({{"stage", s}, {"done", done}});
  }
  const std::size_t total = std::size(pipeline::kStageOrder);
  return {{"stages", stages},
          {"completed", total - missing.size()},
          {"total", total},
          {"next", missing.empty() ? json(nullptr) : json(missing.front())}};
}

json AnalysisService::Summary() {
  const auto s = Current();
  const auto& triples = s->analysis.triples;

  // Layer 1: ground truth, ordered by truth value.
  std::vector<double> truth;
  std::vector<std::size_t> order(s->dataset.size());
  std::iota(order.begin(), order.end(), 0);
  for (const Instance& x : s->dataset.instances()) truth.push_back(x.label);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return truth[a] < truth[b]; });
  json ids = json::array(), truth_sorted = json::array(), predictions = json::array(),
       errors = json::array();
  for (std::size_t i : order) {
    const Instance& x = s->dataset[i];
    ids.push_back(x.id);
    truth_sorted.push_back(x.label);
    predictions.push_back(x.prediction);
    errors.push_back(x.AbsoluteError());
  }
  const json layer1 = {
      {"truth_histogram",
       ToJson(BinDistribution(truth, interactions::kPredictionBins, kSentimentMin, kSentimentMax))},
      {"series", {{"ids", ids}, {"truth", truth_sorted}, {"prediction", predictions},
                  {"error", errors}}}};

  // Layer 2: modalities by total influence.
  struct ModalityTotals {
    Modality m;
    double influence = 0.0;
    std::vector<double> values;
  };
  std::vector<ModalityTotals> totals;
  for (Modality m : kModalities) {
    ModalityTotals t{m, 0.0, {}};
    for (const auto& triple : triples) {
      const double v = triple.importance[Index(m)];
      t.values.push_back(v);
      t.influence += std::abs(v);
    }
    totals.push_back(std::move(t));
  }
  std::stable_sort(totals.begin(), totals.end(),
                   [](const auto& a, const auto& b) { return a.influence > b.influence; });
  json modalities = json::array();
  for (const auto& t : totals) {
    double sum = 0, pos = 0, neg = 0;
    std::size_t npos = 0, nneg = 0;
    for (double v : t.values) {
      sum += v;
      if (v > 0) pos += v, ++npos;
      if (v < 0) neg += v, ++nneg;
    }
    const auto mean_of = [](double total, std::size_t n) {
      return n == 0 ? json(nullptr) : json(total / static_cast<double>(n));
    };
    modalities.push_back({{"modality", Name(t.m)},
                          {"influence", t.influence},
                          {"mean", mean_of(sum, t.values.size())},
                          {"mean_positive", mean_of(pos, npos)},
                          {"mean_negative", mean_of(neg, nneg)},
                          {"values", t.values}});
  }
  json triple_ids = json::array();
  for (const auto& t : triples) triple_ids.push_back(t.instance_id);

  // Layer 3: groups by influence, each with its modalities ordered, and the
  // modality -> group links.
  json groups = json::array(), links = json::array();
  for (const auto& g : s->analysis.groups) {
    json row = interactions::GroupToJson(g);
    std::vector<Modality> ms(kModalities.begin(), kModalities.end());
    std::stable_sort(ms.begin(), ms.end(), [&](Modality a, Modality b) {
      return g.influence[Index(a)] > g.influence[Index(b)];
    });
    json names = json::array();
    for (Modality m : ms) names.push_back(Name(m));
    row["modality_order"] = names;
    groups.push_back(row);
    for (Modality m : kModalities) {
      links.push_back({{"modality", Name(m)},
                       {"group", interactions::LabelName(g.label)},
                       {"weight", g.influence[Index(m)]}});
    }
  }
  return {{"fingerprint", s->fingerprint},
          {"thresholds", s->analysis.thresholds.ToJson()},
          {"layer1", layer1},
          {"layer2", {{"ids", triple_ids}, {"modalities", modalities}}},
          {"layer3", {{"groups", groups}, {"links", links}}}};
}

json AnalysisService::QueryGroup(const BrushQuery& q) {
  const auto s = Current();
  const auto& g = FindGroup(*s, q.label);
  const std::size_t n = g.members.size();
  const auto [start, end] = q.range.value_or(std::pair<std::size_t, std::size_t>{0, n});
  if (start > end || end > n) {
    Throw(ErrorKind::kRange, "range [" + std::to_string(start) + ", " + std::to_string(end) +
                                 ") lies outside group of size " + std::to_string(n));
  }
  json ids = json::array();
  for (std::size_t i = start; i < end; ++i) {
    const std::string& id = g.members[i];
    const auto& t = s->analysis.triples[s->triple_index.at(id)];
    bool keep = Within(g.predictions[i], q.prediction);
    for (Modality m : kModalities) keep = keep && Within(t.importance[Index(m)], q.importance[Index(m)]);
    if (keep) ids.push_back(id);
  }
  return {{"fingerprint", s->fingerprint},
          {"label", interactions::LabelName(q.label)},
          {"range", {start, end}},
          {"count", ids.size()},
          {"ids", ids}};
}

json AnalysisService::Templates(const Scope& scope, templates::TemplateSort sort,
                                std::optional<double> min_support, bool* cache_hit) {
  const auto s = Current();
  const double support = min_support.value_or(s->mining.min_support);
  if (!(support > 0.0 && support <= 1.0)) Throw(ErrorKind::kRange, "min_support must lie in (0, 1]");
  const std::set<std::string> ids = ResolveScope(*s, scope);
  const std::string key = FingerprintOf(json{{"snapshot", s->fingerprint},
                                             {"ids", ids},
                                             {"scope", ScopeJson(scope, ids.size())},
                                             {"sort", templates::TemplateSortName(sort)},
                                             {"min_support", support}});
  {
    std::lock_guard lock(mutex_);
    if (snapshot_ == s) {
      if (auto it = template_cache_.find(key); it != template_cache_.end()) {
        if (cache_hit) *cache_hit = true;
        return json::parse(it->second);
      }
    }
  }
  json rows = json::array();
  if (!ids.empty()) {
    for (const auto& t : templates::SummarizeTemplates(s->build, s->dataset, ids, {support, sort})) {
      rows.push_back(templates::TemplateToJson(t));
    }
  }
  json out = {{"fingerprint", s->fingerprint},
              {"scope", ScopeJson(scope, ids.size())},
              {"sort", templates::TemplateSortName(sort)},
              {"min_support", support},
              {"count", rows.size()},
              {"templates", rows}};
  std::lock_guard lock(mutex_);
  if (snapshot_ == s) {
    if (template_cache_.size() >= 256) template_cache_.clear();
    template_cache_[key] = out.dump();
  }
  if (cache_hit) *cache_hit = false;
  return out;
}

json AnalysisService::Projection(Modality modality, projection::HeatMode mode, const Scope& scope) {
  const auto s = Current();
  const auto& p = s->projections[Index(modality)];
  std::optional<std::set<std::string>> ids;
  if (!scope.all()) ids = ResolveScope(*s, scope);
  const auto weights = mode == projection::HeatMode::kError
                           ? projection::ErrorWeights(s->dataset)
                           : projection::TemplateImportanceWeights(s->build);
  const auto* scope_ptr = ids ? &*ids : nullptr;
  const auto heat = projection::ScopedHeat(p, weights, scope_ptr, mode, s->projection_config.heat_resolution);
  json out = projection::ProjectionPayload(p, heat, scope_ptr);
  out["fingerprint"] = s->fingerprint;
  out["scope"] = ScopeJson(scope, ids ? ids->size() : s->dataset.size());
  return out;
}

json AnalysisService::InstanceDetail(const std::string& id, std::size_t k) {
  const auto s = Current();
  const Instance* x = s->dataset.Find(id);
  if (x == nullptr) Throw(ErrorKind::kNotFound, "unknown instance `" + id + "`");
  const auto* a = s->run.Find(id);
  if (a == nullptr) Throw(ErrorKind::kMissingAttribution, "instance `" + id + "` has no attributions");

  // Word-level phi from the per-time-step pass.
  std::vector<std::optional<double>> word_phi(x->length());
  if (const auto steps = attribution::RecordAt(*a, *x, attribution::Granularity::kTimeStep)) {
    for (std::size_t u = 0; u < steps->units.size(); ++u) {
      const auto& unit = steps->units[u];
      if (unit.modality == Modality::kLanguage && unit.time < word_phi.size()) {
        word_phi[unit.time] = steps->values[u];
      }
    }
  }
  json tokens = json::array();
  for (std::size_t t = 0; t < x->length(); ++t) {
    const Token& tok = x->tokens[t];
    tokens.push_back({{"index", t},
                      {"text", tok.text},
                      {"start_s", tok.start_s},
                      {"end_s", tok.end_s},
                      {"pos", tok.pos ? json(*tok.pos) : json(nullptr)},
                      {"phi", word_phi[t] ? json(*word_phi[t]) : json(nullptr)}});
  }

  // Feature table and the top-k audio / vision series.
  struct Row {
    Modality m;
    std::size_t dim;
    double phi;
  };
  std::vector<Row> rows;
  const auto features = attribution::RecordAt(*a, *x, attribution::Granularity::kFeature);
  if (features) {
    for (std::size_t u = 0; u < features->units.size(); ++u) {
      rows.push_back({features->units[u].modality, features->units[u].dim, features->values[u]});
    }
  }
  std::stable_sort(rows.begin(), rows.end(),
                   [](const Row& l, const Row& r) { return std::abs(l.phi) > std::abs(r.phi); });
  json table = json::array();
  PerModality<json> series{json::array(), json::array(), json::array()};
  for (const Row& r : rows) {
    json row = {{"modality", Name(r.m)},
                {"set", s->schema.SetOf(r.m, r.dim)},
                {"feature", s->schema.features(r.m)[r.dim]},
                {"phi", r.phi}};
    table.push_back(row);
    if (r.m != Modality::kLanguage && series[Index(r.m)].size() < k) {
      json values = json::array();
      const Matrix& mat = x->features[Index(r.m)];
      for (std::size_t t = 0; t < mat.rows(); ++t) values.push_back(mat(t, r.dim));
      row["values"] = values;
      series[Index(r.m)].push_back(row);
    }
  }

  const auto& primary = a->primary;
  const auto triple = interactions::AggregateModalityImportance(primary);
  json rectangles = json::array();
  for (Modality m : kModalities) {
    const double v = triple.importance[Index(m)];
    rectangles.push_back({{"modality", Name(m)}, {"value", v}, {"magnitude", std::abs(v)},
                          {"sign", v > 0 ? 1 : (v < 0 ? -1 : 0)}});
  }
  json interaction = nullptr;
  if (auto it = s->triple_index.find(id); it != s->triple_index.end()) {
    const auto& label = s->analysis.labels[it->second];
    interaction = {{"label", interactions::LabelName(label.label)},
                   {"dominant", label.dominant ? json(Name(*label.dominant)) : json(nullptr)},
                   {"evidence", label.evidence}};
  }
  return {{"fingerprint", s->fingerprint},
          {"id", x->id},
          {"prediction", x->prediction},
          {"truth", x->label},
          {"error", x->AbsoluteError()},
          {"interaction", interaction},
          {"k", k},
          {"tokens", tokens},
          {"audio_series", series[Index(Modality::kAudio)]},
          {"vision_series", series[Index(Modality::kVision)]},
          {"rectangles", rectangles},
          {"attribution", {{"method", primary.method},
                           {"granularity", attribution::GranularityName(primary.granularity)},
                           {"base_value", primary.base_value},
                           {"model_output", primary.prediction},
                           {"sum_phi", primary.Sum()}}},
          {"feature_table", table}};
}

json AnalysisService::Metrics() {
  const auto s = Current();
  json groups = json::array();
  for (const auto& g : s->analysis.groups) {
    json metrics = nullptr;
    if (!g.members.empty()) {
      std::vector<double> labels;
      for (const auto& id : g.members) labels.push_back(s->dataset.Find(id)->label);
      metrics = ToJson(ComputeMetrics(g.predictions, labels));
    }
    groups.push_back({{"label", interactions::LabelName(g.label)},
                      {"size", g.members.size()},
                      {"metrics", metrics}});
  }
  return {{"fingerprint", s->fingerprint},
          {"overall", ToJson(ComputeMetrics(s->dataset))},
          {"groups", groups}};
}

json AnalysisService::Meta() {
  const auto s = Current();
  return {{"fingerprint", s->fingerprint},
          {"api_version", kApiVersion},
          {"instances", s->dataset.size()},
          {"dataset_fingerprint", s->dataset.Fingerprint()},
          {"stages", s->stages},
          {"schema", s->schema.ToJson()},
          {"attribution", {{"config", s->run.config.ToJson()},
                           {"config_fingerprint", s->run.config_fingerprint}}},
          {"analysis", s->thresholds_doc},
          {"mining", s->mining.ToJson()},
          {"projection", s->projection_config.ToJson()},
          {"simd", simd::IsaName(simd::Active().isa)}};
}

Response AnalysisService::Handle(const std::string& method, const std::string& path,
                                 const std::map<std::string, std::string>& query,
                                 const std::string& body) {
  Response r;
  const auto expect = [&](const char* m) {
    if (method != m) Throw(ErrorKind::kArgument, path + " expects " + m);
  };
  try {
    json out;
    if (path == "/summary") {
      expect("GET");
      AllowOnly(query, {});
      out = Summary();
    } else if (path == "/groups/query") {
      expect("POST");
      AllowOnly(query, {});
      json parsed;
      try {
        parsed = json::parse(body);
      } catch (const json::parse_error& e) {
        Throw(ErrorKind::kParse, std::string("query body is not JSON: ") + e.what());
      }
      out = QueryGroup(BrushQuery::FromJson(parsed));
    } else if (path == "/templates") {
      expect("GET");
      AllowOnly(query, {"group", "ids", "sort", "min_support"});
      auto sort = templates::TemplateSort::kSupport;
      if (auto it = query.find("sort"); it != query.end()) {
        const auto parsed = templates::ParseTemplateSort(it->second);
        if (!parsed) Throw(ErrorKind::kArgument, "sort must be support, importance or error");
        sort = *parsed;
      }
      std::optional<double> support;
      if (auto it = query.find("min_support"); it != query.end()) {
        support = ParseNumber(it->second, "min_support");
      }
      out = Templates(ScopeFromQuery(query), sort, support, &r.cache_hit);
    } else if (path == "/projection") {
      expect("GET");
      AllowOnly(query, {"modality", "heat", "group", "ids"});
      const auto it = query.find("modality");
      if (it == query.end()) Throw(ErrorKind::kArgument, "missing `modality` parameter");
      const auto modality = ParseModality(it->second);
      if (!modality) Throw(ErrorKind::kArgument, "unknown modality `" + it->second + "`");
      auto mode = projection::HeatMode::kError;
      if (auto h = query.find("heat"); h != query.end()) {
        const auto parsed = projection::ParseHeatMode(h->second);
        if (!parsed) Throw(ErrorKind::kArgument, "heat must be error or template-importance");
        mode = *parsed;
      }
      out = Projection(*modality, mode, ScopeFromQuery(query));
    } else if (path.rfind("/instances/", 0) == 0 && path.size() > 11) {
      expect("GET");
      AllowOnly(query, {"k"});
      std::size_t k = 3;
      if (auto it = query.find("k"); it != query.end()) k = ParseSize(it->second, "k");
      out = InstanceDetail(path.substr(11), k);
    } else if (path == "/metrics") {
      expect("GET");
      AllowOnly(query, {});
      out = Metrics();
    } else if (path == "/meta") {
      expect("GET");
      AllowOnly(query, {});
      out = Meta();
    } else {
      Throw(ErrorKind::kNotFound, "no endpoint " + method + " " + path);
    }
    r.body = out.dump();
  } catch (const Error& e) {
    std::optional<std::string> fp;
    {
      std::lock_guard lock(mutex_);
      if (snapshot_) fp = snapshot_->fingerprint;
    }
    r.status = StatusFor(e.kind());
    json err = json::parse(ErrorBody(e.kind(), e.what(), fp));
    if (e.kind() == ErrorKind::kNotReady) err["progress"] = Progress();
    r.body = err.dump();
  } catch (const std::exception& e) {
    r.status = 500;
    r.body = ErrorBody(ErrorKind::kIo, e.what());
  }
  return r;
}

}  // namespace modallens::service
