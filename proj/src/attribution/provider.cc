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

#include "modallens/attribution/provider.h"

#include <cmath>
#include <random>

#include "modallens/common/error.h"
#include "modallens/simd/kernels.h"

namespace modallens::attribution {

std::string_view ProviderKindName(ProviderKind kind) {
  switch (kind) {
    case ProviderKind::kBuiltinLinear: return "builtin-linear";
    case ProviderKind::kBuiltinMlpToy: return "builtin-mlp-toy";
    case ProviderKind::kSubprocess: return "subprocess";
    case ProviderKind::kHttpCallback: return "http-callback";
    case ProviderKind::kInProcess: return "in-process";
  }
  return "unknown";
}

std::vector<double> EvaluateBatched(PredictionProvider& provider,
                                    std::span<const FeatureTriple> inputs,
                                    const std::string& context) {
  const std::size_t batch = std::max<std::size_t>(1, provider.info().max_batch);
  std::vector<double> outputs;
  outputs.reserve(inputs.size());
  for (std::size_t start = 0; start < inputs.size(); start += batch) {
    const std::size_t count = std::min(batch, inputs.size() - start);
    std::vector<double> part;
    try {
      part = provider.Predict(inputs.subspan(start, count));
    } catch (const Error& e) {
      throw Error(ErrorKind::kProvider, context + ": " + e.what());
    } catch (const std::exception& e) {
      throw Error(ErrorKind::kProvider, "ProviderError: " + context + ": " + e.what());
    }
    if (part.size() != count) {
      Throw(ErrorKind::kProvider, context + ": provider returned " +
                                      std::to_string(part.size()) + " outputs for " +
                                      std::to_string(count) + " inputs");
    }
    for (double v : part) {
      if (!std::isfinite(v)) Throw(ErrorKind::kProvider, context + ": non-finite output");
    }
    outputs.insert(outputs.end(), part.begin(), part.end());
  }
  return outputs;
}

LinearProvider::LinearProvider(PerModality<std::vector<double>> weights, double bias)
    : weights_(std::move(weights)), bias_(bias) {}

LinearProvider LinearProvider::FromJson(const nlohmann::json& doc) {
  if (!doc.is_object() || !doc.contains("weights") || !doc["weights"].is_object()) {
    Throw(ErrorKind::kParse, "linear model needs a weights object");
  }
  PerModality<std::vector<double>> weights;
  for (Modality m : kModalities) {
    const std::string name(ModalityName(m));
    if (!doc["weights"].contains(name)) {
      Throw(ErrorKind::kParse, "linear model lacks " + name + " weights");
    }
    weights[Index(m)] = doc["weights"][name].get<std::vector<double>>();
  }
  return LinearProvider(std::move(weights), doc.value("bias", 0.0));
}

nlohmann::json LinearProvider::ToJson() const {
  nlohmann::json doc = {{"kind", "linear"}, {"bias", bias_}};
  for (Modality m : kModalities) doc["weights"][std::string(ModalityName(m))] = weights_[Index(m)];
  return doc;
}

double LinearProvider::PredictOne(const FeatureTriple& x) const {
  const simd::Kernels& k = simd::Active();
  double out = bias_;
  for (Modality m : kModalities) {
    const Matrix& features = x[Index(m)];
    const std::vector<double>& w = weights_[Index(m)];
    if (features.rows() == 0) continue;
    if (features.cols() != w.size()) {
      Throw(ErrorKind::kShape, std::string(ModalityName(m)) +
                                   " width does not match the linear model");
    }
    double acc = 0.0;
    for (std::size_t t = 0; t < features.rows(); ++t) {
      acc += k.dot(features.row(t).data(), w.data(), w.size());
    }
    out += acc / static_cast<double>(features.rows());
  }
  return out;
}

std::vector<double> LinearProvider::Predict(std::span<const FeatureTriple> batch) {
  std::vector<double> out;
  out.reserve(batch.size());
  for (const FeatureTriple& x : batch) out.push_back(PredictOne(x));
  return out;
}

ProviderInfo LinearProvider::info() const {
  return {ProviderKind::kBuiltinLinear, 4096, 64, ""};
}

FeatureTriple LinearProvider::CellWeights(std::size_t rows) const {
  FeatureTriple out;
  for (Modality m : kModalities) {
    const std::vector<double>& w = weights_[Index(m)];
    Matrix matrix(rows, w.size());
    for (std::size_t t = 0; t < rows; ++t) {
      for (std::size_t d = 0; d < w.size(); ++d) {
        matrix(t, d) = w[d] / static_cast<double>(rows);
      }
    }
    out[Index(m)] = std::move(matrix);
  }
  return out;
}

MlpToyProvider::MlpToyProvider(const FeatureSchema& schema, std::uint64_t seed,
                               std::size_t hidden)
    : seed_(seed), hidden_(hidden) {
  std::size_t inputs = 0;
  for (Modality m : kModalities) {
    dims_[Index(m)] = schema.dims(m);
    inputs += schema.dims(m);
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> first(0.0, 1.0 / std::sqrt(static_cast<double>(inputs)));
  std::normal_distribution<double> second(0.0, 1.0 / std::sqrt(static_cast<double>(hidden)));
  w1_.resize(hidden * inputs);
  for (double& w : w1_) w = first(rng);
  b1_.resize(hidden);
  for (double& b : b1_) b = 0.1 * first(rng);
  w2_.resize(hidden);
  for (double& w : w2_) w = second(rng);
  b2_ = 0.0;
}

double MlpToyProvider::PredictOne(const FeatureTriple& x) const {
  std::vector<double> input;
  for (Modality m : kModalities) {
    const Matrix& features = x[Index(m)];
    if (features.rows() == 0) {
      input.resize(input.size() + dims_[Index(m)], 0.0);
      continue;
    }
    if (features.cols() != dims_[Index(m)]) {
      Throw(ErrorKind::kShape, std::string(ModalityName(m)) +
                                   " width does not match the network");
    }
    std::vector<double> mean = features.ColumnMeans();
    input.insert(input.end(), mean.begin(), mean.end());
  }
  const simd::Kernels& k = simd::Active();
  double out = b2_;
  for (std::size_t h = 0; h < hidden_; ++h) {
    const double pre = k.dot(w1_.data() + h * input.size(), input.data(), input.size()) + b1_[h];
    out += w2_[h] * std::tanh(pre);
  }
  return 3.0 * std::tanh(out);
}

std::vector<double> MlpToyProvider::Predict(std::span<const FeatureTriple> batch) {
  std::vector<double> out;
  out.reserve(batch.size());
  for (const FeatureTriple& x : batch) out.push_back(PredictOne(x));
  return out;
}

ProviderInfo MlpToyProvider::info() const {
  return {ProviderKind::kBuiltinMlpToy, 4096, 64, ""};
}

nlohmann::json MlpToyProvider::Describe() const {
  return {{"kind", "mlp-toy"}, {"seed", seed_}, {"hidden", hidden_},
          {"dims", {dims_[0], dims_[1], dims_[2]}}};
}

std::vector<double> FunctionProvider::Predict(std::span<const FeatureTriple> batch) {
  std::vector<double> out;
  out.reserve(batch.size());
  for (const FeatureTriple& x : batch) out.push_back(fn_(x));
  return out;
}

ProviderInfo FunctionProvider::info() const {
  return {ProviderKind::kInProcess, 1024, max_in_flight_, ""};
}

nlohmann::json TripleToJson(const FeatureTriple& triple) {
  nlohmann::json out = nlohmann::json::object();
  for (Modality m : kModalities) {
    const Matrix& matrix = triple[Index(m)];
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t r = 0; r < matrix.rows(); ++r) {
      auto row = matrix.row(r);
      rows.push_back(std::vector<double>(row.begin(), row.end()));
    }
    out[std::string(ModalityName(m))] = std::move(rows);
  }
  return out;
}

FeatureTriple TripleFromJson(const nlohmann::json& value) {
  FeatureTriple triple;
  for (Modality m : kModalities) {
    const nlohmann::json& rows = value.at(std::string(ModalityName(m)));
    const std::size_t n = rows.size();
    const std::size_t cols = n == 0 ? 0 : rows[0].size();
    std::vector<double> data;
    data.reserve(n * cols);
    for (const nlohmann::json& row : rows) {
      if (row.size() != cols) Throw(ErrorKind::kShape, "ragged feature matrix");
      for (const nlohmann::json& v : row) data.push_back(v.get<double>());
    }
    triple[Index(m)] = Matrix(n, cols, std::move(data));
  }
  return triple;
}

}  // namespace modallens::attribution
