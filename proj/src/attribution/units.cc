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

#include "modallens/attribution/units.h"

#include "modallens/common/error.h"

namespace modallens::attribution {

std::string_view GranularityName(Granularity g) {
  switch (g) {
    case Granularity::kFeature: return "feature";
    case Granularity::kTimeStep: return "time_step";
    case Granularity::kCell: return "cell";
  }
  return "unknown";
}

std::optional<Granularity> ParseGranularity(std::string_view name) {
  for (Granularity g : {Granularity::kFeature, Granularity::kTimeStep, Granularity::kCell}) {
    if (GranularityName(g) == name) return g;
  }
  return std::nullopt;
}

nlohmann::json UnitToJson(const Unit& unit) {
  nlohmann::json out = {{"modality", ModalityName(unit.modality)}};
  if (unit.granularity != Granularity::kFeature) out["time"] = unit.time;
  if (unit.granularity != Granularity::kTimeStep) out["dim"] = unit.dim;
  return out;
}

Unit UnitFromJson(const nlohmann::json& value, Granularity granularity) {
  Unit unit;
  auto modality = ParseModality(value.at("modality").get<std::string>());
  if (!modality) Throw(ErrorKind::kParse, "unit has an unknown modality");
  unit.modality = *modality;
  unit.granularity = granularity;
  if (granularity != Granularity::kFeature) unit.time = value.at("time").get<std::size_t>();
  if (granularity != Granularity::kTimeStep) unit.dim = value.at("dim").get<std::size_t>();
  return unit;
}

std::vector<Unit> MakeUnits(const Instance& x, Granularity granularity) {
  std::vector<Unit> units;
  for (Modality m : kModalities) {
    const Matrix& features = x.features[Index(m)];
    switch (granularity) {
      case Granularity::kFeature:
        for (std::size_t d = 0; d < features.cols(); ++d) {
          units.push_back({m, granularity, 0, d});
        }
        break;
      case Granularity::kTimeStep:
        for (std::size_t t = 0; t < features.rows(); ++t) {
          units.push_back({m, granularity, t, 0});
        }
        break;
      case Granularity::kCell:
        for (std::size_t t = 0; t < features.rows(); ++t) {
          for (std::size_t d = 0; d < features.cols(); ++d) {
            units.push_back({m, granularity, t, d});
          }
        }
        break;
    }
  }
  return units;
}

BackgroundSet BackgroundSet::FromInstances(std::span<const Instance> references) {
  if (references.empty()) Throw(ErrorKind::kArgument, "background set is empty");
  BackgroundSet bg;
  bg.reference_count_ = references.size();
  for (Modality m : kModalities) {
    const std::size_t dims = references.front().features[Index(m)].cols();
    std::vector<double> sum(dims, 0.0);
    std::size_t rows = 0;
    for (const Instance& ref : references) {
      const Matrix& features = ref.features[Index(m)];
      if (features.cols() != dims) {
        Throw(ErrorKind::kShape, "background instances disagree on " +
                                     std::string(ModalityName(m)) + " width");
      }
      for (std::size_t t = 0; t < features.rows(); ++t) {
        for (std::size_t d = 0; d < dims; ++d) sum[d] += features(t, d);
      }
      rows += features.rows();
    }
    if (rows > 0) {
      for (double& s : sum) s /= static_cast<double>(rows);
    }
    bg.means_[Index(m)] = std::move(sum);
  }
  return bg;
}

BackgroundSet BackgroundSet::FromMeans(PerModality<std::vector<double>> means,
                                       std::size_t reference_count) {
  BackgroundSet bg;
  bg.means_ = std::move(means);
  bg.reference_count_ = reference_count;
  return bg;
}

BackgroundSet BackgroundSet::Zero(const FeatureSchema& schema) {
  PerModality<std::vector<double>> means;
  for (Modality m : kModalities) means[Index(m)].assign(schema.dims(m), 0.0);
  return FromMeans(std::move(means), 1);
}

FeatureTriple BackgroundSet::MeanTriple(const Instance& x) const {
  FeatureTriple out;
  for (Modality m : kModalities) {
    const Matrix& features = x.features[Index(m)];
    const std::vector<double>& mean = means_[Index(m)];
    if (mean.size() != features.cols()) {
      Throw(ErrorKind::kShape, "background " + std::string(ModalityName(m)) +
                                   " width does not match the instance");
    }
    Matrix matrix(features.rows(), features.cols());
    for (std::size_t t = 0; t < features.rows(); ++t) {
      std::copy(mean.begin(), mean.end(), matrix.row(t).begin());
    }
    out[Index(m)] = std::move(matrix);
  }
  return out;
}

nlohmann::json BackgroundSet::ToJson() const {
  nlohmann::json out = {{"reference_count", reference_count_}};
  for (Modality m : kModalities) out["means"][std::string(ModalityName(m))] = means_[Index(m)];
  return out;
}

Masker::Masker(const Instance& x, const std::vector<Unit>& units,
               const BackgroundSet& background)
    : x_(x), units_(units), absent_(background.MeanTriple(x)) {
  for (const Unit& unit : units_) {
    const Matrix& features = x_.features[Index(unit.modality)];
    const bool time_ok = unit.granularity == Granularity::kFeature || unit.time < features.rows();
    const bool dim_ok = unit.granularity == Granularity::kTimeStep || unit.dim < features.cols();
    if (!time_ok || !dim_ok) Throw(ErrorKind::kShape, "unit lies outside the instance");
  }
}

void Masker::CopyUnit(std::size_t index, FeatureTriple& out) const {
  const Unit& unit = units_[index];
  const Matrix& src = x_.features[Index(unit.modality)];
  Matrix& dst = out[Index(unit.modality)];
  switch (unit.granularity) {
    case Granularity::kFeature:
      for (std::size_t t = 0; t < src.rows(); ++t) dst(t, unit.dim) = src(t, unit.dim);
      break;
    case Granularity::kTimeStep: {
      auto row = src.row(unit.time);
      std::copy(row.begin(), row.end(), dst.row(unit.time).begin());
      break;
    }
    case Granularity::kCell:
      dst(unit.time, unit.dim) = src(unit.time, unit.dim);
      break;
  }
}

FeatureTriple Masker::Mask(std::span<const std::uint8_t> present) const {
  if (present.size() != units_.size()) {
    Throw(ErrorKind::kShape, "coalition size does not match the unit count");
  }
  FeatureTriple out = absent_;
  for (std::size_t i = 0; i < units_.size(); ++i) {
    if (present[i]) CopyUnit(i, out);
  }
  return out;
}

FeatureTriple Masker::Mask(std::uint64_t present_bits) const {
  FeatureTriple out = absent_;
  for (std::size_t i = 0; i < units_.size() && i < 64; ++i) {
    if ((present_bits >> i) & 1u) CopyUnit(i, out);
  }
  return out;
}

FeatureTriple MaskInput(const Instance& x, const std::vector<Unit>& units,
                        std::span<const std::uint8_t> present,
                        const BackgroundSet& background) {
  return Masker(x, units, background).Mask(present);
}

}  // namespace modallens::attribution
