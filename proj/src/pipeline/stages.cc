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

#include "modallens/pipeline/stages.h"

#include <algorithm>
#include <set>

#include "modallens/common/error.h"
#include "modallens/common/fingerprint.h"
#include "modallens/demo/planted.h"

namespace modallens::pipeline {
namespace fs = std::filesystem;

using attribution::AttributionRun;

namespace {

bool AllExist(std::initializer_list<fs::path> paths) {
  return std::all_of(paths.begin(), paths.end(), [](const fs::path& p) { return fs::exists(p); });
}

bool Matches(const Store& store, const std::string& stage, const std::string& fingerprint) {
  const auto recorded = StageFingerprint(store, stage);
  return recorded && *recorded == fingerprint;
}

std::string RequireStage(const Store& store, const std::string& stage) {
  auto fp = StageFingerprint(store, stage);
  if (!fp) {
    Throw(ErrorKind::kIncompleteUpstream, "stage `" + stage + "` has not completed in " +
                                              store.root().string() + "; run `" + stage + "` first");
  }
  return *fp;
}

void RequireAttributions(const Store& store) {
  if (!attribution::HasAttributions(store) || !StageFingerprint(store, "attribute")) {
    Throw(ErrorKind::kIncompleteUpstream,
          "no attributions in " + store.root().string() + "; run `attribute` first");
  }
}

nlohmann::json StageInfo(const Store& store, const std::string& stage) {
  const nlohmann::json manifest = store.Manifest();
  if (!manifest.contains("stages") || !manifest["stages"].contains(stage)) {
    return nlohmann::json::object();
  }
  return manifest["stages"][stage];
}

// Manifest entry for a stage, merged over whatever the stage wrote itself.
void Mark(const Store& store, const std::string& stage, const std::string& fingerprint,
          const nlohmann::json& info) {
  nlohmann::json merged = StageInfo(store, stage);
  merged.update(info);
  merged["fingerprint"] = fingerprint;
  store.MarkStage(stage, merged);
}

// Drops the manifest entries of every stage after `stage`.
void InvalidateAfter(const Store& store, const std::string& stage) {
  nlohmann::json manifest = store.Manifest();
  if (!manifest.contains("stages")) return;
  bool after = false, changed = false;
  for (const char* s : kStageOrder) {
    if (after && manifest["stages"].contains(s)) {
      manifest["stages"].erase(s);
      changed = true;
    }
    if (stage == s) after = true;
  }
  if (changed) WriteJsonAtomic(store.root() / "manifest.json", manifest);
}

}  // namespace

std::optional<std::string> StageFingerprint(const Store& store, const std::string& stage) {
  const nlohmann::json info = StageInfo(store, stage);
  if (!info.contains("fingerprint")) return std::nullopt;
  return info["fingerprint"].get<std::string>();
}

// ---- ingest ----

StageOutcome RunIngest(const Store& store, const IngestOptions& options) {
  StageOutcome out{"ingest", false, {}, {}};
  const FeatureSchema schema = LoadSchema(options.schema_path);
  IngestResult result = LoadInstancesLenient(options.instances_path, schema);
  if (!result.failures.empty() && !options.allow_invalid) {
    const auto& first = result.failures.front();
    Throw(first.kind, options.instances_path.string() + ": " + std::to_string(result.failures.size()) +
                          " invalid instance line(s); first at line " + std::to_string(first.line) +
                          ": " + first.message + " (use --allow-invalid to keep the valid ones)");
  }
  if (result.dataset.empty()) {
    Throw(ErrorKind::kArgument, options.instances_path.string() + " holds no valid instances");
  }
  out.fingerprint = FingerprintOf(nlohmann::json{{"schema", schema.ToJson()},
                                                 {"dataset", result.dataset.Fingerprint()},
                                                 {"failures", result.failures.size()}});
  out.summary = {{"instances", result.dataset.size()},
                 {"invalid", result.failures.size()},
                 {"dataset_fingerprint", result.dataset.Fingerprint()}};
  if (Matches(store, "ingest", out.fingerprint) && HasIngest(store)) {
    out.skipped = true;
    return out;
  }
  SaveIngest(store, schema, result);
  InvalidateAfter(store, "ingest");
  Mark(store, "ingest", out.fingerprint, out.summary);
  return out;
}

// ---- attribute ----

AttributionRun LoadCurrentAttributions(const Store& store, const Dataset& dataset) {
  AttributionRun run = attribution::LoadAttributions(store);
  if (run.dataset_fingerprint != dataset.Fingerprint()) {
    Throw(ErrorKind::kIncompleteUpstream,
          "attributions were computed for different data; run `attribute` again");
  }
  return run;
}

StageOutcome RunAttribute(const Store& store, const AttributeOptions& options) {
  StageOutcome out{"attribute", false, {}, {}};
  const std::string ingest_fp = RequireStage(store, "ingest");
  const IngestedData data = LoadIngest(store);
  auto provider = attribution::MakeProvider(options.provider_spec, data.schema);
  const std::string config_fp =
      attribution::ConfigFingerprint(options.config, *provider, data.dataset, data.schema);

  if (attribution::HasAttributions(store) &&
      StageInfo(store, "attribute").value("config_fingerprint", std::string()) == config_fp) {
    const AttributionRun run = attribution::LoadAttributions(store);
    if (run.config_fingerprint == config_fp && run.complete()) {
      const std::string fp = FingerprintOf(
          nlohmann::json{{"config", config_fp}, {"records", run.StoreFingerprint()}});
      if (Matches(store, "attribute", fp)) {
        out.skipped = true;
        out.fingerprint = fp;
        out.summary = {{"config_fingerprint", config_fp}, {"records", run.records.size()}};
        return out;
      }
    }
  }

  const AttributionRun run = attribution::AttributeDataset(*provider, data.dataset, data.schema,
                                                           options.config, &store, options.progress);
  out.summary = {{"config_fingerprint", run.config_fingerprint},
                 {"records", run.records.size()},
                 {"failures", run.failures.size()},
                 {"ingest_fingerprint", ingest_fp}};
  if (!run.complete()) {
    // Drop the attribute entry (and everything after it) so no stage builds on a partial run.
    nlohmann::json manifest = store.Manifest();
    manifest["stages"].erase("attribute");
    WriteJsonAtomic(store.root() / "manifest.json", manifest);
    InvalidateAfter(store, "ingest");
    const auto& f = run.failures.front();
    Throw(ErrorKind::kProvider, std::to_string(run.failures.size()) + " of " +
                                    std::to_string(run.total) + " instances failed; first " +
                                    f.instance_id + " (" + f.kind + "): " + f.message);
  }
  out.fingerprint = FingerprintOf(
      nlohmann::json{{"config", run.config_fingerprint}, {"records", run.StoreFingerprint()}});
  if (!Matches(store, "attribute", out.fingerprint)) InvalidateAfter(store, "attribute");
  Mark(store, "attribute", out.fingerprint, out.summary);
  return out;
}

// ---- analyze ----

nlohmann::json AnalysisConfig::ToJson() const {
  return {{"grid_step", grid_step},
          {"thresholds", thresholds ? thresholds->ToJson() : nlohmann::json(nullptr)}};
}

AnalysisResult Analyze(const Dataset& dataset, const AttributionRun& run,
                       const AnalysisConfig& config) {
  AnalysisResult out;
  for (const Instance& x : dataset.instances()) {
    const auto* a = run.Find(x.id);
    if (a == nullptr) {
      out.missing.push_back(x.id);
      continue;
    }
    out.triples.push_back(interactions::AggregateModalityImportance(a->primary));
    out.triples.back().instance_id = x.id;
  }
  if (out.triples.empty()) {
    Throw(ErrorKind::kIncompleteUpstream, "no attributed instances to analyze; run `attribute` first");
  }
  if (config.thresholds) {
    out.thresholds = *config.thresholds;
  } else {
    out.search = interactions::OptimizeThresholds(out.triples, config.grid_step);
    out.thresholds = out.search->best;
  }
  out.labels = interactions::LabelDataset(out.triples, out.thresholds);
  out.groups = interactions::SummarizeGroups(out.triples, out.labels, dataset);
  return out;
}

StageOutcome RunAnalyze(const Store& store, const AnalysisConfig& config) {
  StageOutcome out{"analyze", false, {}, {}};
  if (config.thresholds && !config.thresholds->Valid()) {
    Throw(ErrorKind::kRange, "thresholds must lie strictly between 0 and 1");
  }
  if (!(config.grid_step > 0.0 && config.grid_step < 1.0)) {
    Throw(ErrorKind::kRange, "grid step must lie strictly between 0 and 1");
  }
  RequireStage(store, "ingest");
  RequireAttributions(store);
  const std::string attribute_fp = *StageFingerprint(store, "attribute");
  out.fingerprint =
      FingerprintOf(nlohmann::json{{"config", config.ToJson()}, {"attribute", attribute_fp}});
  const fs::path dir = store.analysis_dir();
  if (Matches(store, "analyze", out.fingerprint) &&
      AllExist({dir / "labels.jsonl", dir / "thresholds.json", dir / "groups.json",
                dir / "analysis.json"})) {
    out.skipped = true;
    return out;
  }
  const IngestedData data = LoadIngest(store);
  const AttributionRun run = LoadCurrentAttributions(store, data.dataset);
  const AnalysisResult result = Analyze(data.dataset, run, config);

  std::string lines;
  for (std::size_t i = 0; i < result.triples.size(); ++i) {
    lines += interactions::LabelToJson(result.triples[i], result.labels[i]).dump() + "\n";
  }
  WriteFileAtomic(dir / "labels.jsonl", lines);
  WriteJsonAtomic(dir / "thresholds.json",
                  {{"thresholds", result.thresholds.ToJson()},
                   {"source", result.search ? "search" : "fixed"},
                   {"grid_step", config.grid_step},
                   {"magnitude_gate", interactions::MagnitudeGate(result.triples)},
                   {"search", result.search ? interactions::SearchSummaryJson(*result.search)
                                            : nlohmann::json(nullptr)}});
  if (result.search) {
    WriteJsonAtomic(dir / "threshold_trace.json", interactions::TraceJson(*result.search));
  } else {
    std::error_code ec;
    fs::remove(dir / "threshold_trace.json", ec);
  }
  nlohmann::json groups = nlohmann::json::array();
  nlohmann::json counts = nlohmann::json::object();
  for (const auto& g : result.groups) {
    groups.push_back(interactions::GroupToJson(g));
    counts[std::string(interactions::LabelName(g.label))] = g.members.size();
  }
  WriteJsonAtomic(dir / "groups.json", groups);
  out.summary = {{"thresholds", result.thresholds.ToJson()},
                 {"source", result.search ? "search" : "fixed"},
                 {"group_sizes", counts},
                 {"missing", result.missing.size()}};
  WriteJsonAtomic(dir / "analysis.json", {{"fingerprint", out.fingerprint},
                                          {"config", config.ToJson()},
                                          {"attribute_fingerprint", attribute_fp},
                                          {"missing", result.missing},
                                          {"group_sizes", counts}});
  Mark(store, "analyze", out.fingerprint, out.summary);
  return out;
}

// ---- mine ----

nlohmann::json MiningConfig::ToJson() const {
  return {{"min_support", min_support},
          {"percentile", percentile},
          {"sort", templates::TemplateSortName(sort)}};
}

MiningConfig MiningConfig::FromJson(const nlohmann::json& value) {
  MiningConfig c;
  c.min_support = value.value("min_support", c.min_support);
  c.percentile = value.value("percentile", c.percentile);
  const auto sort = templates::ParseTemplateSort(value.value("sort", std::string("support")));
  if (!sort) Throw(ErrorKind::kArgument, "unknown template sort");
  c.sort = *sort;
  return c;
}

StageOutcome RunMine(const Store& store, const MiningConfig& config) {
  StageOutcome out{"mine", false, {}, {}};
  if (!(config.min_support > 0.0 && config.min_support <= 1.0)) {
    Throw(ErrorKind::kRange, "min_support must lie in (0, 1]");
  }
  if (!(config.percentile >= 0.0 && config.percentile <= 100.0)) {
    Throw(ErrorKind::kRange, "cutoff percentile must lie in [0, 100]");
  }
  RequireStage(store, "ingest");
  RequireAttributions(store);
  const std::string attribute_fp = *StageFingerprint(store, "attribute");
  out.fingerprint =
      FingerprintOf(nlohmann::json{{"config", config.ToJson()}, {"attribute", attribute_fp}});
  const fs::path dir = store.templates_dir();
  if (Matches(store, "mine", out.fingerprint) &&
      AllExist({dir / "templates.json", dir / "itemsets.json"})) {
    out.skipped = true;
    return out;
  }
  const IngestedData data = LoadIngest(store);
  const AttributionRun run = LoadCurrentAttributions(store, data.dataset);
  const auto build = templates::BuildItemsets(data.dataset, data.schema, run, {config.percentile});
  std::set<std::string> all;
  for (const Instance& x : data.dataset.instances()) all.insert(x.id);
  const auto table =
      templates::SummarizeTemplates(build, data.dataset, all, {config.min_support, config.sort});
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& t : table) rows.push_back(templates::TemplateToJson(t));
  WriteJsonAtomic(dir / "itemsets.json", templates::ItemsetBuildToJson(build));
  WriteJsonAtomic(dir / "templates.json",
                  {{"fingerprint", out.fingerprint}, {"config", config.ToJson()}, {"templates", rows}});
  out.summary = {{"templates", table.size()},
                 {"transactions", build.transactions.size()},
                 {"missing", build.missing.size()}};
  // The projection reads the itemsets.
  if (!Matches(store, "mine", out.fingerprint)) InvalidateAfter(store, "mine");
  Mark(store, "mine", out.fingerprint, out.summary);
  return out;
}

// ---- project ----

StageOutcome RunProject(const Store& store, const projection::ProjectionConfig& config) {
  StageOutcome out{"project", false, {}, {}};
  const std::string ingest_fp = RequireStage(store, "ingest");
  RequireAttributions(store);
  const std::string attribute_fp = *StageFingerprint(store, "attribute");
  const std::string mine_fp = RequireStage(store, "mine");
  out.fingerprint = FingerprintOf(nlohmann::json{{"config", config.ToJson()},
                                                 {"ingest", ingest_fp},
                                                 {"attribute", attribute_fp},
                                                 {"mine", mine_fp}});
  const fs::path dir = store.projection_dir();
  if (Matches(store, "project", out.fingerprint) &&
      AllExist({dir / "language.json", dir / "audio.json", dir / "vision.json",
                dir / "normalization.json"})) {
    out.skipped = true;
    return out;
  }
  const IngestedData data = LoadIngest(store);
  const AttributionRun run = LoadCurrentAttributions(store, data.dataset);
  const auto build =
      templates::ItemsetBuildFromJson(ReadJsonFile(store.templates_dir() / "itemsets.json"));
  const auto set = projection::ProjectAll(data.dataset, data.schema, &run, &build, config);
  nlohmann::json stats = nlohmann::json::object();
  for (Modality m : kModalities) {
    const auto& p = set.modalities[Index(m)];
    WriteJsonAtomic(dir / (std::string(ModalityName(m)) + ".json"),
                    projection::ModalityProjectionToJson(p));
    stats[std::string(ModalityName(m))] = {{"representation", p.representation},
                                           {"perplexity", p.perplexity},
                                           {"kl_after_exaggeration", p.kl_after_exaggeration},
                                           {"kl_final", p.kl_final}};
  }
  WriteJsonAtomic(dir / "normalization.json", set.normalization.ToJson());
  WriteJsonAtomic(dir / "projection.json", {{"fingerprint", out.fingerprint},
                                            {"config", config.ToJson()},
                                            {"modalities", stats}});
  out.summary = stats;
  Mark(store, "project", out.fingerprint, out.summary);
  return out;
}

// ---- demo ----

std::vector<StageOutcome> RunDemo(const Store& store, const DemoOptions& options) {
  demo::PlantedOptions planted;
  planted.seed = options.seed;
  planted.per_class = options.per_class;
  const demo::PlantedCorpus corpus = demo::GeneratePlanted(planted);

  const fs::path input = store.root() / "demo_input";
  WriteJsonAtomic(input / "schema.json", corpus.schema.ToJson());
  WriteFileAtomic(input / "instances.jsonl", SerializeInstances(corpus.dataset));
  WriteJsonAtomic(input / "model.json", corpus.model.ToJson());
  nlohmann::json truth = nlohmann::json::object();
  for (const auto& [id, label] : corpus.truth) truth[id] = interactions::LabelName(label);
  WriteJsonAtomic(input / "truth.json", truth);

  std::vector<StageOutcome> outcomes;
  outcomes.push_back(RunIngest(store, {input / "schema.json", input / "instances.jsonl", false}));
  AttributeOptions attribute;
  attribute.provider_spec = "linear:" + (input / "model.json").string();
  attribute.config.granularity = attribution::Granularity::kFeature;
  attribute.config.method = attribution::Method::kAuto;
  attribute.config.zero_background = true;
  attribute.config.background_size = 0;
  attribute.config.seed = options.seed;
  attribute.config.jobs = options.jobs;
  outcomes.push_back(RunAttribute(store, attribute));
  outcomes.push_back(RunAnalyze(store, {}));
  outcomes.push_back(RunMine(store, {}));
  outcomes.push_back(RunProject(store, options.projection));
  return outcomes;
}

std::string StoreContentFingerprint(const Store& store) {
  std::vector<fs::path> files;
  if (fs::exists(store.root())) {
    for (const auto& entry : fs::recursive_directory_iterator(store.root())) {
      if (!entry.is_regular_file()) continue;
      if (entry.path().filename().string().find(".tmp.") != std::string::npos) continue;
      files.push_back(fs::relative(entry.path(), store.root()));
    }
  }
  std::sort(files.begin(), files.end());
  Fingerprinter fp;
  for (const auto& rel : files) {
    fp.Add(rel.generic_string());
    fp.Add(std::string_view("\0", 1));
    fp.Add(ReadFile(store.root() / rel));
  }
  return fp.Hex();
}

}  // namespace modallens::pipeline
