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

#include "modallens/projection/heatmap.h"

#include <algorithm>
#include <cmath>

#include "modallens/common/error.h"
#include "modallens/simd/kernels.h"

namespace modallens::projection {
namespace {

// Normalized 1-D Gaussian profile over `resolution` cell centres in [lo, hi].
// Falls back to the nearest cell when the profile underflows.
void Profile(double centre, double lo, double hi, std::size_t resolution, double bandwidth,
             std::vector<double>& out) {
  const double width = (hi - lo) / static_cast<double>(resolution);
  const double inv = 1.0 / (2.0 * bandwidth * bandwidth);
  double sum = 0.0;
  for (std::size_t c = 0; c < resolution; ++c) {
    const double d = lo + (static_cast<double>(c) + 0.5) * width - centre;
    out[c] = std::exp(-d * d * inv);
    sum += out[c];
  }
  if (sum > 0.0 && std::isfinite(sum)) {
    for (double& v : out) v /= sum;
    return;
  }
  std::fill(out.begin(), out.end(), 0.0);
  const double pos = std::floor((centre - lo) / width);
  const auto cell = static_cast<std::size_t>(
      std::clamp(pos, 0.0, static_cast<double>(resolution - 1)));
  out[cell] = 1.0;
}

}  // namespace

std::string_view HeatModeName(HeatMode mode) {
  return mode == HeatMode::kError ? "error" : "template-importance";
}

std::optional<HeatMode> ParseHeatMode(std::string_view name) {
  if (name == "error") return HeatMode::kError;
  if (name == "template-importance") return HeatMode::kTemplateImportance;
  return std::nullopt;
}

double HeatGrid::Total() const {
  double total = 0.0;
  for (double v : cells) total += v;
  return total;
}

Bounds PaddedBounds(std::span<const double> xs, std::span<const double> ys, double pad) {
  if (xs.empty()) return {-1.0, 1.0, -1.0, 1.0};
  const auto [x_lo, x_hi] = std::minmax_element(xs.begin(), xs.end());
  const auto [y_lo, y_hi] = std::minmax_element(ys.begin(), ys.end());
  Bounds b{*x_lo - pad, *x_hi + pad, *y_lo - pad, *y_hi + pad};
  // Zero-extent boxes would collapse the grid.
  if (!(b.x_max > b.x_min)) b.x_min -= 1.0, b.x_max += 1.0;
  if (!(b.y_max > b.y_min)) b.y_min -= 1.0, b.y_max += 1.0;
  return b;
}

HeatGrid HeatmapGrid(std::span<const double> xs, std::span<const double> ys,
                     std::span<const double> weights, std::size_t resolution, double bandwidth,
                     const Bounds& bounds, HeatMode mode) {
  if (resolution == 0) Throw(ErrorKind::kArgument, "heatmap resolution must be positive");
  if (!(bandwidth > 0.0) || !std::isfinite(bandwidth)) {
    Throw(ErrorKind::kArgument, "heatmap bandwidth must be positive");
  }
  if (xs.size() != ys.size() || xs.size() != weights.size()) {
    Throw(ErrorKind::kArgument, "heatmap points and weights differ in length");
  }
  if (!(bounds.x_max > bounds.x_min) || !(bounds.y_max > bounds.y_min)) {
    Throw(ErrorKind::kArgument, "heatmap bounds are empty");
  }
  HeatGrid grid;
  grid.mode = mode;
  grid.resolution = resolution;
  grid.bounds = bounds;
  grid.bandwidth = bandwidth;
  grid.cells.assign(resolution * resolution, 0.0);

  const auto& k = simd::Active();
  std::vector<double> px(resolution), py(resolution);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double w = weights[i];
    if (!(w >= 0.0) || !std::isfinite(w)) {
      Throw(ErrorKind::kArgument, "heatmap weights must be finite and non-negative");
    }
    if (w == 0.0) continue;
    Profile(xs[i], bounds.x_min, bounds.x_max, resolution, bandwidth, px);
    Profile(ys[i], bounds.y_min, bounds.y_max, resolution, bandwidth, py);
    for (std::size_t r = 0; r < resolution; ++r) {
      if (py[r] == 0.0) continue;
      k.axpy(w * py[r], px.data(), grid.cells.data() + r * resolution, resolution);
    }
  }
  return grid;
}

nlohmann::json HeatGridToJson(const HeatGrid& grid) {
  return {{"mode", HeatModeName(grid.mode)},
          {"resolution", grid.resolution},
          {"bandwidth", grid.bandwidth},
          {"bounds",
           {{"x_min", grid.bounds.x_min},
            {"x_max", grid.bounds.x_max},
            {"y_min", grid.bounds.y_min},
            {"y_max", grid.bounds.y_max}}},
          {"total", grid.Total()},
          {"cells", grid.cells}};
}

}  // namespace modallens::projection
