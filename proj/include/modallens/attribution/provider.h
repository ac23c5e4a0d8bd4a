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

#ifndef MODALLENS_ATTRIBUTION_PROVIDER_H_
#define MODALLENS_ATTRIBUTION_PROVIDER_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "modallens/core/matrix.h"
#include "modallens/core/schema.h"

namespace modallens::attribution {

enum class ProviderKind {
  kBuiltinLinear,
  kBuiltinMlpToy,
  kSubprocess,
  kHttpCallback,
  kInProcess,
};

std::string_view ProviderKindName(ProviderKind kind);

struct ProviderInfo {
  ProviderKind kind = ProviderKind::kInProcess;
  std::size_t max_batch = 256;
  // 1 means calls must be serialized.
  std::size_t max_in_flight = 1;
  std::string schema_fingerprint;
};

// A black-box model: one prediction per full-shape feature triple. Must be
// deterministic for identical inputs within a session.
class PredictionProvider {
 public:
  virtual ~PredictionProvider() = default;

  virtual std::vector<double> Predict(std::span<const FeatureTriple> batch) = 0;
  virtual ProviderInfo info() const = 0;

  // Identity of the model for fingerprinting; must change whenever outputs can.
  virtual nlohmann::json Describe() const = 0;
};

// Splits `inputs` into provider-sized batches, checks output length and
// finiteness, and rethrows failures as ProviderError prefixed with `context`.
std::vector<double> EvaluateBatched(PredictionProvider& provider,
                                    std::span<const FeatureTriple> inputs,
                                    const std::string& context);

// f(x) = bias + sum_m w_m . mean_t(x_m). Linear in every cell, with cell
// weight w_m[d] / T.
class LinearProvider : public PredictionProvider {
 public:
  LinearProvider(PerModality<std::vector<double>> weights, double bias);

  static LinearProvider FromJson(const nlohmann::json& doc);
  nlohmann::json ToJson() const;

  std::vector<double> Predict(std::span<const FeatureTriple> batch) override;
  ProviderInfo info() const override;
  nlohmann::json Describe() const override { return ToJson(); }

  double PredictOne(const FeatureTriple& x) const;
  // Per-cell weights for an input with `rows` time steps.
  FeatureTriple CellWeights(std::size_t rows) const;

  const std::vector<double>& weights(Modality m) const { return weights_[Index(m)]; }
  double bias() const { return bias_; }

 private:
  PerModality<std::vector<double>> weights_;
  double bias_;
};

// A small fixed-weight network on the time-mean features:
// 3 * tanh(v . tanh(W x + b) + c). Weights are drawn from `seed`.
class MlpToyProvider : public PredictionProvider {
 public:
  MlpToyProvider(const FeatureSchema& schema, std::uint64_t seed,
                 std::size_t hidden = 8);

  std::vector<double> Predict(std::span<const FeatureTriple> batch) override;
  ProviderInfo info() const override;
  nlohmann::json Describe() const override;

 private:
  double PredictOne(const FeatureTriple& x) const;

  PerModality<std::size_t> dims_;
  std::uint64_t seed_;
  std::size_t hidden_;
  std::vector<double> w1_;  // hidden x input, row-major
  std::vector<double> b1_;
  std::vector<double> w2_;
  double b2_ = 0.0;
};

// Wraps a callable. Thread-safe if the callable is.
class FunctionProvider : public PredictionProvider {
 public:
  using Fn = std::function<double(const FeatureTriple&)>;

  FunctionProvider(Fn fn, std::string name, std::size_t max_in_flight = 64)
      : fn_(std::move(fn)), name_(std::move(name)), max_in_flight_(max_in_flight) {}

  std::vector<double> Predict(std::span<const FeatureTriple> batch) override;
  ProviderInfo info() const override;
  nlohmann::json Describe() const override { return {{"function", name_}}; }

 private:
  Fn fn_;
  std::string name_;
  std::size_t max_in_flight_;
};

// Serializes calls into a provider that declared max_in_flight = 1.
class SerializedProvider : public PredictionProvider {
 public:
  explicit SerializedProvider(PredictionProvider& inner) : inner_(inner) {}

  std::vector<double> Predict(std::span<const FeatureTriple> batch) override {
    std::lock_guard<std::mutex> lock(mutex_);
    return inner_.Predict(batch);
  }
  ProviderInfo info() const override { return inner_.info(); }
  nlohmann::json Describe() const override { return inner_.Describe(); }

 private:
  PredictionProvider& inner_;
  std::mutex mutex_;
};

// Wire encoding of one input: {"language": [[...]], "audio": ..., "vision": ...}.
nlohmann::json TripleToJson(const FeatureTriple& triple);
FeatureTriple TripleFromJson(const nlohmann::json& value);

}  // namespace modallens::attribution

#endif  // MODALLENS_ATTRIBUTION_PROVIDER_H_
