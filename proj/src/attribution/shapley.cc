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

#include "modallens/attribution/shapley.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <random>
#include <unordered_map>

#include "modallens/common/error.h"
#include "modallens/simd/kernels.h"

namespace modallens::attribution {
namespace {

// Evaluations are built and sent in chunks so memory stays bounded at M = 20.
constexpr std::size_t kEvalChunk = 1024;

double Binomial(std::size_t n, std::size_t k) {
  if (k > n) return 0.0;
  k = std::min(k, n - k);
  double out = 1.0;
  for (std::size_t i = 1; i <= k; ++i) {
    out = out * static_cast<double>(n - k + i) / static_cast<double>(i);
  }
  return out;
}

std::string CoalitionKey(const std::vector<std::uint8_t>& present) {
  return std::string(present.begin(), present.end());
}

// In-place Cholesky of a dense SPD matrix (lower triangle). Returns false when
// a pivot falls below `tolerance`.
bool Cholesky(std::vector<double>& a, std::size_t n, double tolerance) {
  const simd::Kernels& k = simd::Active();
  for (std::size_t j = 0; j < n; ++j) {
    double* row_j = a.data() + j * n;
    const double pivot = row_j[j] - k.dot(row_j, row_j, j);
    if (!(pivot > tolerance)) return false;
    row_j[j] = std::sqrt(pivot);
    for (std::size_t i = j + 1; i < n; ++i) {
      double* row_i = a.data() + i * n;
      row_i[j] = (row_i[j] - k.dot(row_i, row_j, j)) / row_j[j];
    }
  }
  return true;
}

std::vector<double> CholeskySolve(const std::vector<double>& l, std::size_t n,
                                  std::vector<double> rhs) {
  for (std::size_t i = 0; i < n; ++i) {
    double s = rhs[i];
    for (std::size_t k = 0; k < i; ++k) s -= l[i * n + k] * rhs[k];
    rhs[i] = s / l[i * n + i];
  }
  for (std::size_t i = n; i-- > 0;) {
    double s = rhs[i];
    for (std::size_t k = i + 1; k < n; ++k) s -= l[k * n + i] * rhs[k];
    rhs[i] = s / l[i * n + i];
  }
  return rhs;
}

std::vector<double> EvaluateCoalitions(PredictionProvider& provider, const Masker& masker,
                                       const std::vector<WeightedCoalition>& plan,
                                       const std::string& id) {
  std::vector<double> outputs;
  outputs.reserve(plan.size());
  for (std::size_t start = 0; start < plan.size(); start += kEvalChunk) {
    const std::size_t end = std::min(plan.size(), start + kEvalChunk);
    std::vector<FeatureTriple> inputs;
    inputs.reserve(end - start);
    for (std::size_t i = start; i < end; ++i) inputs.push_back(masker.Mask(plan[i].present));
    auto part = EvaluateBatched(provider, inputs,
                                "instance " + id + ", coalitions " + std::to_string(start) +
                                    ".." + std::to_string(end - 1));
    outputs.insert(outputs.end(), part.begin(), part.end());
  }
  return outputs;
}

}  // namespace

double AttributionRecord::Sum() const {
  return std::accumulate(values.begin(), values.end(), 0.0);
}

double AttributionRecord::LocalAccuracyGap() const {
  return std::abs(Sum() - (prediction - base_value));
}

nlohmann::json RecordToJson(const AttributionRecord& record) {
  nlohmann::json units = nlohmann::json::array();
  for (const Unit& unit : record.units) units.push_back(UnitToJson(unit));
  return {{"instance_id", record.instance_id},
          {"granularity", GranularityName(record.granularity)},
          {"method", record.method},
          {"base_value", record.base_value},
          {"prediction", record.prediction},
          {"units", std::move(units)},
          {"values", record.values}};
}

AttributionRecord RecordFromJson(const nlohmann::json& value) {
  AttributionRecord record;
  record.instance_id = value.at("instance_id").get<std::string>();
  auto granularity = ParseGranularity(value.at("granularity").get<std::string>());
  if (!granularity) Throw(ErrorKind::kParse, "record has an unknown granularity");
  record.granularity = *granularity;
  record.method = value.at("method").get<std::string>();
  record.base_value = value.at("base_value").get<double>();
  record.prediction = value.at("prediction").get<double>();
  for (const nlohmann::json& unit : value.at("units")) {
    record.units.push_back(UnitFromJson(unit, record.granularity));
  }
  record.values = value.at("values").get<std::vector<double>>();
  if (record.values.size() != record.units.size()) {
    Throw(ErrorKind::kParse, "record values and units differ in length");
  }
  return record;
}

AttributionRecord ExactShapley(PredictionProvider& provider, const Instance& x,
                               const BackgroundSet& background,
                               const std::vector<Unit>& units) {
  const std::size_t m = units.size();
  if (m > kMaxExactUnits) {
    Throw(ErrorKind::kTooManyUnits, std::to_string(m) + " units exceed the exact bound of " +
                                        std::to_string(kMaxExactUnits));
  }
  Masker masker(x, units, background);
  const std::uint64_t coalitions = std::uint64_t{1} << m;

  std::vector<double> f(coalitions);
  for (std::uint64_t start = 0; start < coalitions; start += kEvalChunk) {
    const std::uint64_t end = std::min<std::uint64_t>(coalitions, start + kEvalChunk);
    std::vector<FeatureTriple> inputs;
    inputs.reserve(end - start);
    for (std::uint64_t bits = start; bits < end; ++bits) inputs.push_back(masker.Mask(bits));
    auto part = EvaluateBatched(provider, inputs,
                                "instance " + x.id + ", coalitions " + std::to_string(start) +
                                    ".." + std::to_string(end - 1) + " of 2^" +
                                    std::to_string(m));
    std::copy(part.begin(), part.end(), f.begin() + static_cast<std::ptrdiff_t>(start));
  }

  // |S|!(M-|S|-1)!/M! == 1 / (M * C(M-1, |S|))
  std::vector<double> weight(m, 0.0);
  for (std::size_t s = 0; s < m; ++s) {
    weight[s] = 1.0 / (static_cast<double>(m) * Binomial(m - 1, s));
  }

  AttributionRecord record;
  record.instance_id = x.id;
  record.granularity = units.empty() ? Granularity::kFeature : units.front().granularity;
  record.method = "exact";
  record.units = units;
  record.values.assign(m, 0.0);
  for (std::uint64_t bits = 0; bits + 1 < coalitions; ++bits) {
    const double w = weight[static_cast<std::size_t>(std::popcount(bits))];
    for (std::size_t i = 0; i < m; ++i) {
      const std::uint64_t bit = std::uint64_t{1} << i;
      if (bits & bit) continue;
      record.values[i] += w * (f[bits | bit] - f[bits]);
    }
  }
  record.base_value = f.front();
  record.prediction = f.back();
  return record;
}

double ShapleyKernelWeight(std::size_t m, std::size_t s) {
  if (s == 0 || s >= m) {
    Throw(ErrorKind::kArgument, "kernel weight is defined only for 0 < s < M (got s=" +
                                    std::to_string(s) + ", M=" + std::to_string(m) + ")");
  }
  return static_cast<double>(m - 1) /
         (Binomial(m, s) * static_cast<double>(s) * static_cast<double>(m - s));
}

std::vector<WeightedCoalition> PlanCoalitions(std::size_t m, std::size_t n_samples,
                                              std::uint64_t seed) {
  if (m < 2) Throw(ErrorKind::kArgument, "kernel SHAP needs at least two units");
  std::vector<WeightedCoalition> plan;
  std::unordered_map<std::string, std::size_t> index;

  auto add = [&](std::vector<std::uint8_t> present, double weight) {
    auto [it, inserted] = index.emplace(CoalitionKey(present), plan.size());
    if (inserted) {
      plan.push_back({std::move(present), weight});
    } else {
      plan[it->second].weight += weight;
    }
  };

  // Sizes s and M-s share a weight; visit s = 1, 2, ... up to the middle.
  const std::size_t half = m / 2;
  std::vector<std::size_t> sizes;
  for (std::size_t s = 1; s <= half; ++s) sizes.push_back(s);
  auto paired = [m](std::size_t s) { return s != m - s; };
  auto size_count = [&](std::size_t s) { return Binomial(m, s) * (paired(s) ? 2.0 : 1.0); };
  auto size_mass = [&](std::size_t s) {
    return static_cast<double>(m - 1) / static_cast<double>(s * (m - s)) *
           (paired(s) ? 2.0 : 1.0);
  };

  double budget = static_cast<double>(n_samples);
  double remaining_mass = 0.0;
  for (std::size_t s : sizes) remaining_mass += size_mass(s);

  std::size_t next = 0;
  for (; next < sizes.size(); ++next) {
    const std::size_t s = sizes[next];
    const double count = size_count(s);
    if (budget * size_mass(s) / remaining_mass < count - 1e-8) break;
    const double w = ShapleyKernelWeight(m, s);
    // All size-s subsets in lexicographic order of their index sets.
    std::vector<std::size_t> idx(s);
    std::iota(idx.begin(), idx.end(), 0);
    for (;;) {
      std::vector<std::uint8_t> present(m, 0);
      for (std::size_t i : idx) present[i] = 1;
      if (paired(s)) {
        std::vector<std::uint8_t> complement(m);
        for (std::size_t i = 0; i < m; ++i) complement[i] = present[i] ? 0 : 1;
        add(std::move(present), w);
        add(std::move(complement), w);
      } else {
        add(std::move(present), w);
      }
      std::size_t pos = s;
      while (pos > 0 && idx[pos - 1] == m - s + pos - 1) --pos;
      if (pos == 0) break;
      ++idx[pos - 1];
      for (std::size_t j = pos; j < s; ++j) idx[j] = idx[j - 1] + 1;
    }
    budget -= count;
    remaining_mass -= size_mass(s);
  }
  if (next == sizes.size() || budget < 1.0) return plan;

  // Random paired draws over the sizes that did not fit.
  const std::size_t enumerated = plan.size();
  std::vector<std::size_t> rest(sizes.begin() + static_cast<std::ptrdiff_t>(next), sizes.end());
  std::vector<double> rest_mass;
  for (std::size_t s : rest) rest_mass.push_back(size_mass(s));
  const double sampled_mass = std::accumulate(rest_mass.begin(), rest_mass.end(), 0.0);

  std::mt19937_64 rng(seed);
  std::discrete_distribution<std::size_t> pick_size(rest_mass.begin(), rest_mass.end());
  const auto target = enumerated + static_cast<std::size_t>(budget);
  std::vector<std::size_t> order(m);
  double draws = 0.0;
  for (std::size_t attempt = 0; plan.size() < target && attempt < 8 * n_samples; ++attempt) {
    const std::size_t s = rest[pick_size(rng)];
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = 0; i < s; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, m - 1);
      std::swap(order[i], order[pick(rng)]);
    }
    std::vector<std::uint8_t> present(m, 0);
    for (std::size_t i = 0; i < s; ++i) present[order[i]] = 1;
    std::vector<std::uint8_t> complement(m);
    for (std::size_t i = 0; i < m; ++i) complement[i] = present[i] ? 0 : 1;
    add(std::move(present), 1.0);
    add(std::move(complement), 1.0);
    draws += 2.0;
  }
  for (std::size_t i = enumerated; i < plan.size(); ++i) {
    plan[i].weight *= sampled_mass / draws;
  }
  return plan;
}

AttributionRecord KernelShap(PredictionProvider& provider, const Instance& x,
                             const BackgroundSet& background,
                             const std::vector<Unit>& units,
                             const KernelShapOptions& options) {
  const std::size_t m = units.size();
  if (m == 0) Throw(ErrorKind::kArgument, "kernel SHAP needs at least one unit");
  // Full enumeration (2^M - 2 coalitions) is enough even when it is below M + 2.
  const std::size_t minimum =
      m < 4 ? std::min<std::size_t>(m + 2, (std::size_t{1} << m) - 2) : m + 2;
  if (options.n_samples < minimum) {
    Throw(ErrorKind::kArgument, "kernel SHAP needs n_samples >= " + std::to_string(minimum) +
                                    " (M=" + std::to_string(m) + ")");
  }
  Masker masker(x, units, background);
  const std::vector<std::uint8_t> none(m, 0), all(m, 1);
  const std::vector<FeatureTriple> ends = {masker.Mask(none), masker.Mask(all)};
  const std::vector<double> end_values = EvaluateBatched(provider, ends, "instance " + x.id);
  const double base = end_values[0];
  const double fx = end_values[1];
  const double delta = fx - base;

  AttributionRecord record;
  record.instance_id = x.id;
  record.granularity = units.front().granularity;
  record.method = "kernel";
  record.units = units;
  record.base_value = base;
  record.prediction = fx;
  if (m == 1) {  // efficiency alone pins it down
    record.values = {delta};
    return record;
  }

  const simd::Kernels& k = simd::Active();
  const std::size_t n = m - 1;  // free variables after eliminating the last
  for (std::size_t attempt = 0; attempt <= options.max_retries; ++attempt) {
    const std::uint64_t seed = options.seed + attempt * 0x9e3779b97f4a7c15ULL;
    const auto plan = PlanCoalitions(m, options.n_samples, seed);
    const auto outputs = EvaluateCoalitions(provider, masker, plan, x.id);

    std::vector<double> normal(n * n, 0.0);
    std::vector<double> rhs(n, 0.0);
    std::vector<double> row(n);
    for (std::size_t c = 0; c < plan.size(); ++c) {
      const auto& z = plan[c].present;
      const double last = z[m - 1];
      for (std::size_t i = 0; i < n; ++i) row[i] = z[i] - last;
      const double target = (outputs[c] - base) - last * delta;
      const double w = plan[c].weight;
      for (std::size_t i = 0; i < n; ++i) {
        if (row[i] == 0.0) continue;
        k.axpy(w * row[i], row.data(), normal.data() + i * n, n);
        rhs[i] += w * row[i] * target;
      }
    }

    double max_diag = 0.0;
    for (std::size_t i = 0; i < n; ++i) max_diag = std::max(max_diag, normal[i * n + i]);
    const double tolerance = 1e-13 * std::max(max_diag, 1e-300);
    std::vector<double> factor = normal;
    bool ok = Cholesky(factor, n, tolerance);
    if (!ok) {
      factor = normal;
      for (std::size_t i = 0; i < n; ++i) factor[i * n + i] += 1e-10 * std::max(max_diag, 1.0);
      ok = Cholesky(factor, n, 0.0);
    }
    if (!ok) continue;

    std::vector<double> phi = CholeskySolve(factor, n, rhs);
    const double head = std::accumulate(phi.begin(), phi.end(), 0.0);
    phi.push_back(delta - head);
    if (!std::all_of(phi.begin(), phi.end(), [](double v) { return std::isfinite(v); })) {
      continue;
    }

    record.values = std::move(phi);
    return record;
  }
  Throw(ErrorKind::kSingularSystem, "weighted least squares stayed singular for instance " +
                                        x.id + " after " + std::to_string(options.max_retries) +
                                        " resamples");
}

AttributionRecord LinearShap(const FeatureTriple& weights, double bias,
                             const Instance& x, const FeatureTriple& background_mean) {
  AttributionRecord record;
  record.instance_id = x.id;
  record.granularity = Granularity::kCell;
  record.method = "linear";
  record.units = MakeUnits(x, Granularity::kCell);
  record.values.reserve(record.units.size());
  double base = bias;
  double prediction = bias;
  for (Modality m : kModalities) {
    const Matrix& w = weights[Index(m)];
    const Matrix& v = x.features[Index(m)];
    const Matrix& mu = background_mean[Index(m)];
    if (w.rows() != v.rows() || w.cols() != v.cols() || mu.rows() != v.rows() ||
        mu.cols() != v.cols()) {
      Throw(ErrorKind::kShape, std::string(ModalityName(m)) +
                                   " weights, input and background differ in shape");
    }
    for (std::size_t t = 0; t < v.rows(); ++t) {
      for (std::size_t d = 0; d < v.cols(); ++d) {
        record.values.push_back(w(t, d) * (v(t, d) - mu(t, d)));
        base += w(t, d) * mu(t, d);
        prediction += w(t, d) * v(t, d);
      }
    }
  }
  record.base_value = base;
  record.prediction = prediction;
  return record;
}

AttributionRecord Coarsen(const AttributionRecord& record, const Instance& x,
                          Granularity target) {
  if (record.granularity == target) return record;
  if (record.granularity != Granularity::kCell) {
    Throw(ErrorKind::kArgument, "only cell-level records can be coarsened");
  }
  AttributionRecord out = record;
  out.granularity = target;
  out.units = MakeUnits(x, target);
  out.values.assign(out.units.size(), 0.0);
  // Offsets of each modality's block within the coarse unit list.
  PerModality<std::size_t> offset{};
  std::size_t running = 0;
  for (Modality m : kModalities) {
    offset[Index(m)] = running;
    const Matrix& features = x.features[Index(m)];
    running += target == Granularity::kFeature ? features.cols() : features.rows();
  }
  for (std::size_t i = 0; i < record.units.size(); ++i) {
    const Unit& unit = record.units[i];
    const std::size_t local = target == Granularity::kFeature ? unit.dim : unit.time;
    out.values[offset[Index(unit.modality)] + local] += record.values[i];
  }
  return out;
}

}  // namespace modallens::attribution
