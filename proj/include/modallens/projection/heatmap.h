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

#ifndef MODALLENS_PROJECTION_HEATMAP_H_
#define MODALLENS_PROJECTION_HEATMAP_H_

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace modallens::projection {

enum class HeatMode { kError, kTemplateImportance };

std::string_view HeatModeName(HeatMode mode);
std::optional<HeatMode> ParseHeatMode(std::string_view name);

struct Bounds {
  double x_min = 0.0, x_max = 1.0, y_min = 0.0, y_max = 1.0;
};

struct HeatGrid {
  HeatMode mode = HeatMode::kError;
  std::size_t resolution = 0;
  Bounds bounds;
  double bandwidth = 0.0;
  std::vector<double> cells;  // resolution x resolution, row-major, row = y

  double Total() const;
};

// Bounding box of the points padded by `pad` on every side; a unit box around
// the origin when there are no points.
Bounds PaddedBounds(std::span<const double> xs, std::span<const double> ys, double pad);

// Deposits a Gaussian of width `bandwidth` per point onto the cell centres of
// `bounds`. Each point's kernel is normalized over the grid, so the cells sum
// to the total weight whatever the point positions. Throws ArgumentError for
// resolution 0, a non-positive bandwidth, mismatched lengths or negative weights.
HeatGrid HeatmapGrid(std::span<const double> xs, std::span<const double> ys,
                     std::span<const double> weights, std::size_t resolution, double bandwidth,
                     const Bounds& bounds, HeatMode mode = HeatMode::kError);

nlohmann::json HeatGridToJson(const HeatGrid& grid);

}  // namespace modallens::projection

#endif  // MODALLENS_PROJECTION_HEATMAP_H_
