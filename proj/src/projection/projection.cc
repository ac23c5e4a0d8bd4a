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

#include "modallens/projection/projection.h"

#include <algorithm>
#include <cmath>
#include <thread>

#include "modallens/common/error.h"

namespace modallens::projection {
namespace {

using attribution::Granularity;

// Words behind each instance's influential language units.
std::map<std::string, std::set<std::string>> InfluentialWords(const templates::ItemsetBuild& build) {
  std::map<std::string, std::set<std::string>> words;
  for (const auto& t : build.transactions) {
    auto& set = words[t.instance_id];
    for (const auto& key : t.items) {
      const auto& item = build.items.at(key);
      if (item.modality == Modality::kLanguage && item.feature) set.insert(*item.feature);
    }
  }
  return words;
}

nlohmann::json BoundsToJson(const Bounds& b) {
  return {{"x_min", b.x_min}, {"x_max", b.x_max}, {"y_min", b.y_min}, {"y_max", b.y_max}};
}

Bounds BoundsFromJson(const nlohmann::json& v) {
  return {v.at("x_min").get<double>(), v.at("x_max").get<double>(), v.at("y_min").get<double>(),
          v.at("y_max").get<double>()};
}

}  // namespace

std::string_view LanguageInputName(LanguageInput input) {
  switch (input) {
    case LanguageInput::kAuto: return "auto";
    case LanguageInput::kEmbedding: return "embedding";
    case LanguageInput::kInfluentialWords: return "influential-words";
  }
  return "auto";
}

std::optional<LanguageInput> ParseLanguageInput(std::string_view name) {
  for (auto v : {LanguageInput::kAuto, LanguageInput::kEmbedding, LanguageInput::kInfluentialWords}) {
    if (LanguageInputName(v) == name) return v;
  }
  return std::nullopt;
}

nlohmann::json ProjectionConfig::ToJson() const {
  return {{"tsne", tsne.ToJson()},
          {"heat_resolution", heat_resolution},
          {"heat_bandwidth", heat_bandwidth},
          {"language_input", LanguageInputName(language_input)}};
}

ProjectionConfig ProjectionConfig::FromJson(const nlohmann::json& value) {
  ProjectionConfig c;
  if (value.contains("tsne")) {
    const auto& t = value["tsne"];
    c.tsne.perplexity = t.value("perplexity", c.tsne.perplexity);
    c.tsne.iterations = t.value("iterations", c.tsne.iterations);
    c.tsne.exaggeration = t.value("exaggeration", c.tsne.exaggeration);
    c.tsne.exaggeration_iters = t.value("exaggeration_iters", c.tsne.exaggeration_iters);
    c.tsne.learning_rate = t.value("learning_rate", c.tsne.learning_rate);
    c.tsne.momentum = t.value("momentum", c.tsne.momentum);
    c.tsne.final_momentum = t.value("final_momentum", c.tsne.final_momentum);
    c.tsne.momentum_switch = t.value("momentum_switch", c.tsne.momentum_switch);
    c.tsne.seed = t.value("seed", c.tsne.seed);
  }
  c.heat_resolution = value.value("heat_resolution", c.heat_resolution);
  c.heat_bandwidth = value.value("heat_bandwidth", c.heat_bandwidth);
  const auto li = ParseLanguageInput(value.value("language_input", std::string("auto")));
  if (!li) Throw(ErrorKind::kArgument, "unknown language_input");
  c.language_input = *li;
  return c;
}

std::vector<double> InstanceFeatureVector(const Instance& x, Modality m) {
  return x.features[Index(m)].ColumnMeans();
}

Matrix ProjectionInputs(const Dataset& dataset, Modality m, LanguageInput language_input,
                        const templates::ItemsetBuild* build, std::string* representation) {
  const std::size_t n = dataset.size();
  const std::size_t dims = n == 0 ? 0 : dataset[0].features[Index(m)].cols();
  bool words = false;
  if (m == Modality::kLanguage) {
    words = language_input == LanguageInput::kInfluentialWords ||
            (language_input == LanguageInput::kAuto && dims == 0);
    if (language_input == LanguageInput::kEmbedding && dims == 0 && n > 0) {
      Throw(ErrorKind::kArgument, "language embedding projection requested but the schema has no language dimensions");
    }
  }
  if (!words) {
    if (representation) *representation = m == Modality::kLanguage ? "embedding-mean" : "feature-mean";
    Matrix out(n, dims);
    for (std::size_t i = 0; i < n; ++i) {
      const auto v = InstanceFeatureVector(dataset[i], m);
      std::copy(v.begin(), v.end(), out.row(i).begin());
    }
    return out;
  }

  if (representation) *representation = "influential-words";
  std::map<std::string, std::set<std::string>> per_instance;
  if (build != nullptr) {
    per_instance = InfluentialWords(*build);
  } else {
    for (const Instance& x : dataset.instances()) {
      auto& set = per_instance[x.id];
      for (const Token& t : x.tokens) set.insert(t.text);
    }
  }
  std::set<std::string> vocabulary;
  for (const auto& [id, set] : per_instance) vocabulary.insert(set.begin(), set.end());
  const std::vector<std::string> vocab(vocabulary.begin(), vocabulary.end());
  Matrix out(n, vocab.size());
  for (std::size_t i = 0; i < n; ++i) {
    auto it = per_instance.find(dataset[i].id);
    if (it == per_instance.end()) continue;
    for (const auto& w : it->second) {
      const auto pos = std::lower_bound(vocab.begin(), vocab.end(), w) - vocab.begin();
      out(i, static_cast<std::size_t>(pos)) = 1.0;
    }
  }
  return out;
}

ModalityProjection ProjectModality(const Dataset& dataset, const FeatureSchema& schema,
                                   const attribution::AttributionRun* attributions,
                                   const templates::ItemsetBuild* build,
                                   const Normalization& normalization, Modality m,
                                   const ProjectionConfig& config) {
  ModalityProjection out;
  out.modality = m;
  const Matrix inputs = ProjectionInputs(dataset, m, config.language_input, build, &out.representation);
  const std::size_t n = dataset.size();
  std::vector<double> xs(n, 0.0), ys(n, 0.0);
  if (n >= 2) {
    TsneOptions options = config.tsne;
    options.perplexity = ClampPerplexity(options.perplexity, n);
    const TsneResult r = TsneEmbed(inputs, options);
    xs = r.x;
    ys = r.y;
    out.perplexity = r.perplexity;
    out.kl_after_exaggeration = r.kl_after_exaggeration;
    out.kl_final = r.kl_final;
  }
  for (std::size_t i = 0; i < n; ++i) {
    const Instance& x = dataset[i];
    ProjectionPoint p{x.id, xs[i], ys[i], m, WordGlyph{}};
    switch (m) {
      case Modality::kLanguage: {
        std::optional<attribution::AttributionRecord> words;
        if (attributions != nullptr) {
          if (const auto* a = attributions->Find(x.id)) {
            words = attribution::RecordAt(*a, x, Granularity::kTimeStep);
          }
        }
        p.glyph = MakeWordGlyph(x, words ? &*words : nullptr);
        break;
      }
      case Modality::kAudio: p.glyph = MakeAudioGlyph(x, schema, normalization); break;
      case Modality::kVision: p.glyph = MakeFaceGlyph(x, schema, normalization); break;
    }
    out.points.push_back(std::move(p));
  }
  double extent = 0.0;
  if (n > 0) {
    const auto [x_lo, x_hi] = std::minmax_element(xs.begin(), xs.end());
    const auto [y_lo, y_hi] = std::minmax_element(ys.begin(), ys.end());
    extent = std::max(*x_hi - *x_lo, *y_hi - *y_lo);
  }
  if (!(extent > 0.0)) extent = 1.0;
  out.bounds = PaddedBounds(xs, ys, 0.05 * extent);
  out.bandwidth = config.heat_bandwidth * extent;
  return out;
}

ProjectionSet ProjectAll(const Dataset& dataset, const FeatureSchema& schema,
                         const attribution::AttributionRun* attributions,
                         const templates::ItemsetBuild* build, const ProjectionConfig& config) {
  ProjectionSet set;
  set.normalization = FitNormalization(dataset, schema);
  PerModality<std::exception_ptr> errors{};
  std::vector<std::thread> workers;
  for (Modality m : kModalities) {
    workers.emplace_back([&, m] {
      try {
        set.modalities[Index(m)] =
            ProjectModality(dataset, schema, attributions, build, set.normalization, m, config);
      } catch (...) {
        errors[Index(m)] = std::current_exception();
      }
    });
  }
  for (auto& w : workers) w.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return set;
}

std::map<std::string, double> ErrorWeights(const Dataset& dataset) {
  std::map<std::string, double> w;
  for (const Instance& x : dataset.instances()) w[x.id] = x.AbsoluteError();
  return w;
}

std::map<std::string, double> TemplateImportanceWeights(const templates::ItemsetBuild& build) {
  std::map<std::string, double> w;
  for (const auto& t : build.transactions) {
    double total = 0.0;
    for (const auto& u : t.units) total += std::abs(u.phi);
    w[t.instance_id] = total;
  }
  return w;
}

HeatGrid ScopedHeat(const ModalityProjection& projection, const std::map<std::string, double>& weights,
                    const std::set<std::string>* scope, HeatMode mode, std::size_t resolution) {
  std::vector<double> xs, ys, ws;
  for (const auto& p : projection.points) {
    if (scope != nullptr && !scope->count(p.instance_id)) continue;
    auto it = weights.find(p.instance_id);
    xs.push_back(p.x);
    ys.push_back(p.y);
    ws.push_back(it == weights.end() ? 0.0 : it->second);
  }
  const double bandwidth = projection.bandwidth > 0.0 ? projection.bandwidth : 1.0;
  return HeatmapGrid(xs, ys, ws, resolution, bandwidth, projection.bounds, mode);
}

nlohmann::json ProjectionPayload(const ModalityProjection& projection, const HeatGrid& heat,
                                 const std::set<std::string>* scope) {
  nlohmann::json points = nlohmann::json::array();
  for (const auto& p : projection.points) {
    points.push_back({{"id", p.instance_id},
                      {"x", p.x},
                      {"y", p.y},
                      {"dimmed", scope != nullptr && !scope->count(p.instance_id)},
                      {"glyph", GlyphToJson(p.glyph)}});
  }
  return {{"modality", ModalityName(projection.modality)},
          {"representation", projection.representation},
          {"points", points},
          {"heat", HeatGridToJson(heat)},
          {"stats",
           {{"perplexity", projection.perplexity},
            {"kl_after_exaggeration", projection.kl_after_exaggeration},
            {"kl_final", projection.kl_final}}}};
}

nlohmann::json ModalityProjectionToJson(const ModalityProjection& projection) {
  nlohmann::json points = nlohmann::json::array();
  for (const auto& p : projection.points) {
    points.push_back({{"id", p.instance_id}, {"x", p.x}, {"y", p.y}, {"glyph", GlyphToJson(p.glyph)}});
  }
  return {{"modality", ModalityName(projection.modality)},
          {"representation", projection.representation},
          {"points", points},
          {"perplexity", projection.perplexity},
          {"kl_after_exaggeration", projection.kl_after_exaggeration},
          {"kl_final", projection.kl_final},
          {"bounds", BoundsToJson(projection.bounds)},
          {"bandwidth", projection.bandwidth}};
}

ModalityProjection ModalityProjectionFromJson(const nlohmann::json& value) {
  ModalityProjection out;
  const auto m = ParseModality(value.at("modality").get<std::string>());
  if (!m) Throw(ErrorKind::kParse, "projection file names an unknown modality");
  out.modality = *m;
  out.representation = value.at("representation").get<std::string>();
  for (const auto& p : value.at("points")) {
    out.points.push_back({p.at("id").get<std::string>(), p.at("x").get<double>(),
                          p.at("y").get<double>(), *m, GlyphFromJson(p.at("glyph"))});
  }
  out.perplexity = value.at("perplexity").get<double>();
  out.kl_after_exaggeration = value.at("kl_after_exaggeration").get<double>();
  out.kl_final = value.at("kl_final").get<double>();
  out.bounds = BoundsFromJson(value.at("bounds"));
  out.bandwidth = value.at("bandwidth").get<double>();
  return out;
}

}  // namespace modallens::projection
