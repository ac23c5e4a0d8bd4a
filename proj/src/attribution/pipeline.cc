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

#include "modallens/attribution/pipeline.h"

#include <algorithm>
#include <atomic>
#include <mutex>
#include <numeric>
#include <random>
#include <thread>

#include "modallens/attribution/remote_provider.h"
#include "modallens/common/error.h"
#include "modallens/common/fingerprint.h"

namespace modallens::attribution {
namespace fs = std::filesystem;
namespace {

AttributionRecord AttributeUnits(PredictionProvider& provider, const Instance& x,
                                 const BackgroundSet& background, const AttributionConfig& config,
                                 Granularity granularity) {
  auto* linear = dynamic_cast<LinearProvider*>(&provider);
  Method method = config.method;
  if (method == Method::kLinear && linear == nullptr) {
    Throw(ErrorKind::kArgument, "the linear method needs the builtin linear provider");
  }
  if (method == Method::kAuto && linear != nullptr) method = Method::kLinear;
  if (method == Method::kLinear) {
    const AttributionRecord cells =
        LinearShap(linear->CellWeights(x.length()), linear->bias(), x, background.MeanTriple(x));
    return Coarsen(cells, x, granularity);
  }

  const std::vector<Unit> units = MakeUnits(x, granularity);
  if (method == Method::kAuto) {
    method = units.size() <= kAutoExactUnits ? Method::kExact : Method::kKernel;
  }
  if (method == Method::kExact || units.size() < 2) {
    AttributionRecord record = ExactShapley(provider, x, background, units);
    record.granularity = granularity;
    return record;
  }
  KernelShapOptions options;
  options.n_samples = config.n_samples;
  options.seed = Fingerprinter()
                     .Add(config.seed)
                     .Add(x.id)
                     .Add(GranularityName(granularity))
                     .value();
  return KernelShap(provider, x, background, units, options);
}

std::string FailureKind(const std::exception& e) {
  if (const auto* error = dynamic_cast<const Error*>(&e)) {
    return std::string(ErrorKindName(error->kind()));
  }
  return "Internal";
}

nlohmann::json FailureToJson(const AttributionFailure& f) {
  return {{"instance_id", f.instance_id}, {"kind", f.kind}, {"message", f.message}};
}

nlohmann::json IndexJson(const AttributionRun& run, bool finished) {
  nlohmann::json failures = nlohmann::json::array();
  for (const AttributionFailure& f : run.failures) failures.push_back(FailureToJson(f));
  nlohmann::json index = {{"config_fingerprint", run.config_fingerprint},
                          {"dataset_fingerprint", run.dataset_fingerprint},
                          {"config", run.config.ToJson()},
                          {"total", run.total},
                          {"done", run.records.size()},
                          {"finished", finished},
                          {"complete", finished && run.complete()},
                          {"failures", failures}};
  if (finished) index["store_fingerprint"] = run.StoreFingerprint();
  return index;
}

}  // namespace

std::string_view MethodName(Method method) {
  switch (method) {
    case Method::kAuto: return "auto";
    case Method::kExact: return "exact";
    case Method::kKernel: return "kernel";
    case Method::kLinear: return "linear";
  }
  return "auto";
}

std::optional<Method> ParseMethod(std::string_view name) {
  for (Method m : {Method::kAuto, Method::kExact, Method::kKernel, Method::kLinear}) {
    if (MethodName(m) == name) return m;
  }
  return std::nullopt;
}

nlohmann::json AttributionConfig::ToJson() const {
  return {{"granularity", GranularityName(granularity)},
          {"method", MethodName(method)},
          {"n_samples", n_samples},
          {"seed", seed},
          {"background_size", background_size},
          {"zero_background", zero_background},
          {"time_step_pass", time_step_pass}};
}

AttributionConfig AttributionConfig::FromJson(const nlohmann::json& doc) {
  AttributionConfig config;
  if (doc.contains("granularity")) {
    auto g = ParseGranularity(doc.at("granularity").get<std::string>());
    if (!g) Throw(ErrorKind::kArgument, "unknown granularity");
    config.granularity = *g;
  }
  if (doc.contains("method")) {
    auto m = ParseMethod(doc.at("method").get<std::string>());
    if (!m) Throw(ErrorKind::kArgument, "unknown attribution method");
    config.method = *m;
  }
  config.n_samples = doc.value("n_samples", config.n_samples);
  config.seed = doc.value("seed", config.seed);
  config.background_size = doc.value("background_size", config.background_size);
  config.zero_background = doc.value("zero_background", config.zero_background);
  config.time_step_pass = doc.value("time_step_pass", config.time_step_pass);
  config.jobs = doc.value("jobs", config.jobs);
  return config;
}

std::optional<AttributionRecord> RecordAt(const InstanceAttribution& a, const Instance& x,
                                          Granularity target) {
  if (a.primary.granularity == target) return a.primary;
  if (a.time_steps && a.time_steps->granularity == target) return *a.time_steps;
  if (a.primary.granularity == Granularity::kCell) return Coarsen(a.primary, x, target);
  return std::nullopt;
}

nlohmann::json InstanceAttributionToJson(const InstanceAttribution& a) {
  nlohmann::json out = {{"primary", RecordToJson(a.primary)}};
  out["time_steps"] = a.time_steps ? RecordToJson(*a.time_steps) : nlohmann::json(nullptr);
  return out;
}

InstanceAttribution InstanceAttributionFromJson(const nlohmann::json& value) {
  InstanceAttribution a;
  a.primary = RecordFromJson(value.at("primary"));
  if (value.contains("time_steps") && !value.at("time_steps").is_null()) {
    a.time_steps = RecordFromJson(value.at("time_steps"));
  }
  return a;
}

const InstanceAttribution* AttributionRun::Find(const std::string& id) const {
  auto it = records.find(id);
  return it == records.end() ? nullptr : &it->second;
}

std::string AttributionRun::StoreFingerprint() const {
  Fingerprinter fp;
  fp.Add(config_fingerprint);
  for (const auto& [id, record] : records) {
    fp.Add(id);
    fp.AddJson(InstanceAttributionToJson(record));
  }
  return fp.Hex();
}

BackgroundSet MakeBackground(const Dataset& dataset, const FeatureSchema& schema,
                             const AttributionConfig& config) {
  if (config.zero_background) return BackgroundSet::Zero(schema);
  if (dataset.empty()) Throw(ErrorKind::kArgument, "the background needs at least one instance");
  std::vector<std::size_t> chosen(dataset.size());
  std::iota(chosen.begin(), chosen.end(), 0);
  if (config.background_size != 0 && config.background_size < dataset.size()) {
    std::mt19937_64 rng(config.seed);
    for (std::size_t i = 0; i < config.background_size; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, chosen.size() - 1);
      std::swap(chosen[i], chosen[pick(rng)]);
    }
    chosen.resize(config.background_size);
    std::sort(chosen.begin(), chosen.end());
  }
  std::vector<Instance> references;
  references.reserve(chosen.size());
  for (std::size_t i : chosen) references.push_back(dataset[i]);
  return BackgroundSet::FromInstances(references);
}

InstanceAttribution AttributeInstance(PredictionProvider& provider, const Instance& x,
                                      const BackgroundSet& background,
                                      const AttributionConfig& config) {
  InstanceAttribution out;
  out.primary = AttributeUnits(provider, x, background, config, config.granularity);
  if (config.time_step_pass && config.granularity != Granularity::kTimeStep) {
    out.time_steps = AttributeUnits(provider, x, background, config, Granularity::kTimeStep);
  }
  return out;
}

std::string ConfigFingerprint(const AttributionConfig& config, const PredictionProvider& provider,
                              const Dataset& dataset, const FeatureSchema& schema) {
  return Fingerprinter()
      .AddJson(config.ToJson())
      .AddJson(provider.Describe())
      .Add(dataset.Fingerprint())
      .Add(schema.Fingerprint())
      .Hex();
}

AttributionRun AttributeDataset(PredictionProvider& provider, const Dataset& dataset,
                                const FeatureSchema& schema, const AttributionConfig& config,
                                const Store* store, ProgressFn progress) {
  AttributionRun run;
  run.config = config;
  run.config_fingerprint = ConfigFingerprint(config, provider, dataset, schema);
  run.dataset_fingerprint = dataset.Fingerprint();
  run.total = dataset.size();

  fs::path dir;
  if (store != nullptr) {
    dir = store->attributions_dir() / run.config_fingerprint;
    fs::create_directories(dir / "records");
  }

  std::vector<std::size_t> pending;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const Instance& x = dataset[i];
    if (store != nullptr) {
      const fs::path file = dir / "records" / (SafeFileName(x.id) + ".json");
      if (fs::exists(file)) {
        try {
          InstanceAttribution a = InstanceAttributionFromJson(ReadJsonFile(file));
          if (a.primary.instance_id == x.id) {
            run.records.emplace(x.id, std::move(a));
            continue;
          }
        } catch (const std::exception&) {
          // unreadable leftovers are recomputed
        }
      }
    }
    pending.push_back(i);
  }
  if (store != nullptr) {
    WriteJsonAtomic(dir / "index.json", IndexJson(run, false));
    WriteJsonAtomic(store->attributions_dir() / "current.json",
                    {{"config_fingerprint", run.config_fingerprint}});
  }

  const BackgroundSet background = MakeBackground(dataset, schema, config);
  std::unique_ptr<SerializedProvider> serialized;
  PredictionProvider* target = &provider;
  const std::size_t workers =
      std::max<std::size_t>(1, std::min(config.jobs, pending.size()));
  if (workers > 1 && provider.info().max_in_flight <= 1) {
    serialized = std::make_unique<SerializedProvider>(provider);
    target = serialized.get();
  }

  std::vector<std::optional<InstanceAttribution>> results(pending.size());
  std::vector<std::optional<AttributionFailure>> failures(pending.size());
  std::atomic<std::size_t> next{0};
  std::mutex progress_mutex;
  std::size_t done = run.records.size();
  if (progress) progress(done, run.total);

  auto work = [&] {
    for (std::size_t k = next++; k < pending.size(); k = next++) {
      const Instance& x = dataset[pending[k]];
      try {
        InstanceAttribution a = AttributeInstance(*target, x, background, config);
        if (store != nullptr) {
          WriteJsonAtomic(dir / "records" / (SafeFileName(x.id) + ".json"),
                          InstanceAttributionToJson(a));
        }
        results[k] = std::move(a);
      } catch (const std::exception& e) {
        failures[k] = AttributionFailure{x.id, FailureKind(e), e.what()};
      }
      std::lock_guard<std::mutex> lock(progress_mutex);
      ++done;
      if (progress) progress(done, run.total);
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> threads;
    for (std::size_t t = 0; t < workers; ++t) threads.emplace_back(work);
    for (std::thread& t : threads) t.join();
  }

  for (std::size_t k = 0; k < pending.size(); ++k) {
    const std::string& id = dataset[pending[k]].id;
    if (results[k]) run.records.emplace(id, std::move(*results[k]));
    if (failures[k]) run.failures.push_back(std::move(*failures[k]));
  }
  if (store != nullptr) {
    WriteJsonAtomic(dir / "index.json", IndexJson(run, true));
    store->MarkStage("attribute", {{"config_fingerprint", run.config_fingerprint},
                                   {"complete", run.complete()},
                                   {"records", run.records.size()},
                                   {"failures", run.failures.size()}});
  }
  return run;
}

bool HasAttributions(const Store& store) {
  return fs::exists(store.attributions_dir() / "current.json");
}

AttributionRun LoadAttributions(const Store& store) {
  if (!HasAttributions(store)) {
    Throw(ErrorKind::kIncompleteUpstream,
          "no attributions in " + store.root().string() + "; run `attribute` first");
  }
  const nlohmann::json current = ReadJsonFile(store.attributions_dir() / "current.json");
  AttributionRun run;
  run.config_fingerprint = current.at("config_fingerprint").get<std::string>();
  const fs::path dir = store.attributions_dir() / run.config_fingerprint;
  const nlohmann::json index = ReadJsonFile(dir / "index.json");
  run.dataset_fingerprint = index.value("dataset_fingerprint", std::string());
  run.config = AttributionConfig::FromJson(index.at("config"));
  run.total = index.value("total", std::size_t{0});
  for (const nlohmann::json& f : index.value("failures", nlohmann::json::array())) {
    run.failures.push_back({f.value("instance_id", std::string()),
                            f.value("kind", std::string()), f.value("message", std::string())});
  }
  if (fs::exists(dir / "records")) {
    for (const fs::directory_entry& entry : fs::directory_iterator(dir / "records")) {
      if (entry.path().extension() != ".json") continue;
      InstanceAttribution a = InstanceAttributionFromJson(ReadJsonFile(entry.path()));
      std::string id = a.primary.instance_id;
      run.records.emplace(std::move(id), std::move(a));
    }
  }
  return run;
}

std::unique_ptr<PredictionProvider> MakeProvider(const std::string& spec,
                                                 const FeatureSchema& schema) {
  auto after = [&](std::string_view prefix) { return spec.substr(prefix.size()); };
  if (spec.rfind("linear:", 0) == 0) {
    return std::make_unique<LinearProvider>(
        LinearProvider::FromJson(ReadJsonFile(after("linear:"))));
  }
  if (spec == "mlp-toy" || spec.rfind("mlp-toy:", 0) == 0) {
    std::uint64_t seed = 0;
    if (spec.size() > 8) {
      try {
        seed = std::stoull(after("mlp-toy:"));
      } catch (const std::exception&) {
        Throw(ErrorKind::kArgument, "mlp-toy seed must be an unsigned integer");
      }
    }
    return std::make_unique<MlpToyProvider>(schema, seed);
  }
  if (spec.rfind("subprocess:", 0) == 0) {
    return std::make_unique<SubprocessProvider>(after("subprocess:"), schema.Fingerprint());
  }
  if (spec.rfind("http://", 0) == 0) return std::make_unique<HttpProvider>(spec);
  Throw(ErrorKind::kArgument, "unknown provider spec '" + spec +
                                  "' (expected linear:<file>, mlp-toy[:seed], "
                                  "subprocess:<command> or http://...)");
}

}  // namespace modallens::attribution
