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

#include "modallens/projection/tsne.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "modallens/common/error.h"
#include "modallens/simd/kernels.h"

namespace modallens::projection {
namespace {

constexpr double kTiny = 1e-12;
constexpr int kBisectionSteps = 100;
constexpr double kEntropyTolerance = 1e-10;

void CenterEmbedding(std::vector<double>& x, std::vector<double>& y) {
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(y.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] -= mx;
    y[i] -= my;
  }
}

}  // namespace

nlohmann::json TsneOptions::ToJson() const {
  return {{"perplexity", perplexity},
          {"iterations", iterations},
          {"exaggeration", exaggeration},
          {"exaggeration_iters", exaggeration_iters},
          {"learning_rate", learning_rate},
          {"momentum", momentum},
          {"final_momentum", final_momentum},
          {"momentum_switch", momentum_switch},
          {"seed", seed}};
}

double MaxPerplexity(std::size_t n) {
  if (n < 2) return 1.0;
  return std::max(1.0, static_cast<double>(n - 1) / 3.0);
}

double ClampPerplexity(double requested, std::size_t n) {
  return std::clamp(requested, 1.0, MaxPerplexity(n));
}

std::vector<double> ConditionalProbabilities(const Matrix& points, double perplexity) {
  const auto& k = simd::Active();
  const std::size_t n = points.rows();
  const std::size_t d = points.cols();
  std::vector<double> dist(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double v = k.squared_distance(points.row(i).data(), points.row(j).data(), d);
      dist[i * n + j] = v;
      dist[j * n + i] = v;
    }
  }

  const double target = std::log(perplexity);
  std::vector<double> cond(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = dist.data() + i * n;
    double* out = cond.data() + i * n;
    double d_min = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) d_min = std::min(d_min, row[j]);
    }
    double beta = 1.0, lo = 0.0, hi = std::numeric_limits<double>::infinity();
    double sum = 0.0, weighted = 0.0;
    for (int step = 0; step < kBisectionSteps; ++step) {
      k.gaussian_row(row, n, i, beta, d_min, out, &sum, &weighted);
      const double entropy = std::log(sum) + beta * (weighted / sum - d_min);
      const double diff = entropy - target;
      if (std::abs(diff) < kEntropyTolerance) break;
      if (diff > 0.0) {
        lo = beta;
        beta = std::isinf(hi) ? beta * 2.0 : 0.5 * (beta + hi);
      } else {
        hi = beta;
        beta = 0.5 * (beta + lo);
      }
    }
    for (std::size_t j = 0; j < n; ++j) out[j] /= sum;
  }
  return cond;
}

std::vector<double> JointProbabilities(const Matrix& points, double perplexity) {
  const std::size_t n = points.rows();
  const std::vector<double> cond = ConditionalProbabilities(points, perplexity);
  std::vector<double> p(n * n, 0.0);
  const double scale = 1.0 / (2.0 * static_cast<double>(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i != j) p[i * n + j] = std::max((cond[i * n + j] + cond[j * n + i]) * scale, kTiny);
    }
  }
  // Renormalize after flooring so P stays a distribution.
  double total = 0.0;
  for (double v : p) total += v;
  for (double& v : p) v /= total;
  return p;
}

double KlDivergence(const std::vector<double>& p, const std::vector<double>& x,
                    const std::vector<double>& y) {
  const auto& k = simd::Active();
  const std::size_t n = x.size();
  std::vector<double> num(n * n);
  double z = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    z += k.student_t_row(x[i], y[i], x.data(), y.data(), n, i, num.data() + i * n);
  }
  double kl = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const double pij = p[i * n + j];
      const double qij = std::max(num[i * n + j] / z, kTiny);
      kl += pij * std::log(pij / qij);
    }
  }
  return kl;
}

TsneResult TsneEmbed(const Matrix& points, const TsneOptions& options) {
  const std::size_t n = points.rows();
  if (n < 2) Throw(ErrorKind::kArgument, "t-SNE needs at least 2 points");
  if (!(options.perplexity >= 1.0 && options.perplexity <= MaxPerplexity(n))) {
    Throw(ErrorKind::kArgument, "perplexity " + std::to_string(options.perplexity) +
                                    " is infeasible for " + std::to_string(n) +
                                    " points (allowed 1.." + std::to_string(MaxPerplexity(n)) + ")");
  }
  if (!(options.learning_rate > 0.0) || !(options.exaggeration >= 1.0)) {
    Throw(ErrorKind::kArgument, "learning rate must be positive and exaggeration >= 1");
  }
  for (double v : points.data()) {
    if (!std::isfinite(v)) Throw(ErrorKind::kArgument, "t-SNE input contains non-finite values");
  }

  const auto& k = simd::Active();
  const std::vector<double> p = JointProbabilities(points, options.perplexity);

  TsneResult result;
  result.perplexity = options.perplexity;
  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> init(0.0, 1e-4);
  result.x.resize(n);
  result.y.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    result.x[i] = init(rng);
    result.y[i] = init(rng);
  }
  auto& xs = result.x;
  auto& ys = result.y;

  std::vector<double> num(n * n), gx(n), gy(n);
  std::vector<double> ux(n, 0.0), uy(n, 0.0), gain_x(n, 1.0), gain_y(n, 1.0);
  const auto step = [&](std::size_t iter) {
    const double exaggeration = iter < options.exaggeration_iters ? options.exaggeration : 1.0;
    const double momentum = iter < options.momentum_switch ? options.momentum : options.final_momentum;
    double z = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      z += k.student_t_row(xs[i], ys[i], xs.data(), ys.data(), n, i, num.data() + i * n);
    }
    const double inv_z = 1.0 / z;
    for (std::size_t i = 0; i < n; ++i) {
      k.tsne_gradient_row(xs[i], ys[i], xs.data(), ys.data(), p.data() + i * n,
                          num.data() + i * n, inv_z, exaggeration, n, &gx[i], &gy[i]);
    }
    // Delta-bar-delta gains, then momentum step.
    const auto update = [&](double g, double& u, double& gain, double& pos) {
      gain = (g > 0.0) != (u > 0.0) ? gain + 0.2 : gain * 0.8;
      gain = std::max(gain, 0.01);
      u = momentum * u - options.learning_rate * gain * g;
      pos += u;
    };
    for (std::size_t i = 0; i < n; ++i) {
      update(gx[i], ux[i], gain_x[i], xs[i]);
      update(gy[i], uy[i], gain_y[i], ys[i]);
    }
    CenterEmbedding(xs, ys);
  };

  const std::size_t early = std::min(options.exaggeration_iters, options.iterations);
  for (std::size_t iter = 0; iter < early; ++iter) step(iter);
  result.kl_after_exaggeration = KlDivergence(p, xs, ys);
  for (std::size_t iter = early; iter < options.iterations; ++iter) step(iter);
  result.kl_final = KlDivergence(p, xs, ys);

  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(xs[i]) || !std::isfinite(ys[i])) {
      Throw(ErrorKind::kDegenerate, "t-SNE diverged (non-finite coordinates)");
    }
  }
  return result;
}

}  // namespace modallens::projection
