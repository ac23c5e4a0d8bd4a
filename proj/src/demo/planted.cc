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

#include "modallens/demo/planted.h"

#include <algorithm>
#include <cmath>
#include <random>

namespace modallens::demo {
namespace {

using interactions::Label;

struct Word {
  const char* text;
  const char* pos;
};

// Key words carry the instance's sentiment; fillers pad the utterance.
constexpr Word kPositiveWords[] = {{"good", "ADJ"}, {"great", "ADJ"}, {"love", "VERB"},
                                   {"funny", "ADJ"}, {"best", "ADJ"}};
constexpr Word kNegativeWords[] = {{"bad", "ADJ"}, {"boring", "ADJ"}, {"not", "PART"},
                                   {"hate", "VERB"}, {"worst", "ADJ"}};
constexpr Word kFillers[] = {{"i", "PRON"},   {"the", "DET"},   {"movie", "NOUN"},
                             {"it", "PRON"},  {"was", "VERB"},  {"really", "ADV"},
                             {"and", "CCONJ"}, {"story", "NOUN"}, {"so", "ADV"}};

class Sampler {
 public:
  explicit Sampler(std::uint64_t seed) : rng_(seed) {}
  double Uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  std::size_t Index(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_); }
  bool Bernoulli(double p) { return Uniform(0.0, 1.0) < p; }
  double Sign() { return Bernoulli(0.5) ? 1.0 : -1.0; }
  double Normal(double sd) { return std::normal_distribution<double>(0.0, sd)(rng_); }
  std::mt19937_64& rng() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

// Shares (summing to 1) and signs per class; magnitudes are applied later.
PerModality<double> DesignContributions(Label label, double polarity,
                                        std::optional<Modality> dominant, Sampler& s) {
  PerModality<double> c{};
  switch (label) {
    case Label::kDominance: {
      const std::size_t dom = dominant ? Index(*dominant) : s.Index(3);
      const double p = s.Uniform(0.70, 0.84);
      const double rest = 1.0 - p;
      const double a = 0.08 + s.Uniform(0.0, 1.0) * (rest - 0.16);
      std::size_t k = 0;
      for (std::size_t m = 0; m < 3; ++m) {
        if (m == dom) {
          c[m] = polarity * p;
        } else {
          c[m] = s.Sign() * (k++ == 0 ? a : rest - a);
        }
      }
      break;
    }
    case Label::kComplement: {
      PerModality<double> u{};
      for (;;) {
        double total = 0.0;
        for (double& v : u) total += (v = s.Uniform(1.0, 2.5));
        bool ok = true;
        for (double& v : u) {
          v /= total;
          ok = ok && v >= 0.2 && v <= 0.5;
        }
        if (ok) break;
      }
      for (std::size_t m = 0; m < 3; ++m) c[m] = polarity * u[m];
      break;
    }
    case Label::kConflict: {
      const std::size_t against = s.Index(3);
      const double p = s.Uniform(0.46, 0.54);
      const double rest = 1.0 - p;
      const double a = 0.15 + s.Uniform(0.0, 1.0) * (rest - 0.30);
      std::size_t k = 0;
      for (std::size_t m = 0; m < 3; ++m) {
        c[m] = m == against ? -polarity * p : polarity * (k++ == 0 ? a : rest - a);
      }
      break;
    }
    case Label::kOthers: {
      const std::size_t quiet = s.Index(3);
      const double q = s.Uniform(0.0, 0.02);
      const double a = s.Uniform(0.2, 0.8) * (1.0 - q);
      std::size_t k = 0;
      for (std::size_t m = 0; m < 3; ++m) {
        c[m] = m == quiet ? s.Sign() * q : s.Sign() * (k++ == 0 ? a : 1.0 - q - a);
      }
      break;
    }
  }
  return c;
}

}  // namespace

FeatureSchema PlantedSchema() {
  return FeatureSchema::FromJson(nlohmann::json::parse(R"({
    "modalities": {
      "language": ["glove_0", "glove_1", "glove_2", "glove_3"],
      "audio": ["F0", "F0_delta", "NAQ", "QOQ"],
      "vision": ["AU1", "AU4", "Joy", "Yaw"]
    },
    "feature_sets": {
      "audio": {"Pitch": ["F0", "F0_delta"], "Glottal": ["NAQ", "QOQ"]},
      "vision": {"Brow": ["AU1", "AU4"], "Face emotion": ["Joy"], "Head movement": ["Yaw"]}
    },
    "pos_tagset": ["ADJ", "ADV", "CCONJ", "DET", "NOUN", "PART", "PRON", "VERB"]
  })"));
}

PlantedCorpus GeneratePlanted(const PlantedOptions& options) {
  Sampler s(options.seed);
  const FeatureSchema schema = PlantedSchema();

  PerModality<std::vector<double>> weights;
  for (Modality m : kModalities) {
    for (std::size_t d = 0; d < schema.dims(m); ++d) {
      weights[Index(m)].push_back(s.Sign() * s.Uniform(0.5, 1.5));
    }
  }
  attribution::LinearProvider model(weights, 0.0);

  std::vector<Label> plan;
  for (Label l : interactions::kLabels) plan.insert(plan.end(), options.per_class, l);
  std::shuffle(plan.begin(), plan.end(), s.rng());

  std::vector<Instance> instances;
  std::map<std::string, Label> truth;
  std::map<std::string, PerModality<double>> contributions;
  for (std::size_t i = 0; i < plan.size(); ++i) {
    const Label label = plan[i];
    const double polarity = s.Bernoulli(options.positive_fraction) ? 1.0 : -1.0;
    PerModality<double> c = DesignContributions(label, polarity, options.dominant, s);
    const double magnitude = label == Label::kOthers ? s.Uniform(0.1, 0.5) : s.Uniform(1.0, 2.0);
    for (double& v : c) v *= magnitude;

    Instance x;
    char id[32];
    std::snprintf(id, sizeof id, "planted_%04zu", i);
    x.id = id;
    const std::size_t tokens =
        options.min_tokens + s.Index(options.max_tokens - options.min_tokens + 1);
    const std::size_t key = s.Index(tokens);
    const double net = c[0] + c[1] + c[2];
    double t = 0.0;
    for (std::size_t k = 0; k < tokens; ++k) {
      const Word w = k == key ? (net >= 0 ? kPositiveWords[s.Index(5)] : kNegativeWords[s.Index(5)])
                              : kFillers[s.Index(std::size(kFillers))];
      const double length = s.Uniform(0.15, 0.45);
      x.tokens.push_back({w.text, t, t + length, std::string(w.pos)});
      t += length + s.Uniform(0.02, 0.1);
    }

    for (Modality m : kModalities) {
      const auto& w = weights[Index(m)];
      const std::size_t dims = w.size();
      // Time-mean direction r with sum_d w_d * mean_d = c_m.
      std::vector<double> mean(dims);
      double scale = 0.0;
      for (std::size_t d = 0; d < dims; ++d) {
        mean[d] = (w[d] > 0 ? 1.0 : -1.0) * s.Uniform(0.5, 1.5);
        scale += w[d] * mean[d];
      }
      for (double& v : mean) v *= c[Index(m)] / scale;
      // Zero-sum temporal variation, concentrated on the key word.
      Matrix features(tokens, dims);
      for (std::size_t d = 0; d < dims; ++d) {
        std::vector<double> wiggle(tokens);
        double sum = 0.0;
        for (std::size_t k = 0; k < tokens; ++k) {
          wiggle[k] = s.Normal(0.1) + (k == key ? mean[d] : 0.0);
          sum += wiggle[k];
        }
        for (std::size_t k = 0; k < tokens; ++k) {
          features(k, d) = mean[d] + wiggle[k] - sum / static_cast<double>(tokens);
        }
      }
      x.features[Index(m)] = std::move(features);
    }
    x.prediction = model.PredictOne(x.features);
    x.label = std::clamp(x.prediction + s.Normal(0.4), kSentimentMin, kSentimentMax);
    truth[x.id] = label;
    contributions[x.id] = c;
    instances.push_back(std::move(x));
  }
  return {schema, Dataset(std::move(instances)), std::move(model), std::move(truth),
          std::move(contributions)};
}

}  // namespace modallens::demo
