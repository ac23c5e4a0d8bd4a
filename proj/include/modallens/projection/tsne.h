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

// Exact t-SNE. O(N^2) memory and time per iteration, which is fine for a few
// thousand points.

#ifndef MODALLENS_PROJECTION_TSNE_H_
#define MODALLENS_PROJECTION_TSNE_H_

#include <cstdint>
#include <vector>

#include "json.hpp"
#include "modallens/core/matrix.h"

namespace modallens::projection {

struct TsneOptions {
  double perplexity = 30.0;
  std::size_t iterations = 1000;
  double exaggeration = 12.0;
  std::size_t exaggeration_iters = 250;
  double learning_rate = 200.0;
  double momentum = 0.5;
  double final_momentum = 0.8;
  std::size_t momentum_switch = 250;
  std::uint64_t seed = 0;

  nlohmann::json ToJson() const;
};

struct TsneResult {
  std::vector<double> x, y;
  double perplexity = 0.0;  // the value actually used
  double kl_after_exaggeration = 0.0;
  double kl_final = 0.0;
};

// Largest usable perplexity for n points: (n - 1) / 3, but never below 1.
double MaxPerplexity(std::size_t n);
double ClampPerplexity(double requested, std::size_t n);

// Row-stochastic conditional affinities p_{j|i} (n x n, zero diagonal), each
// row a Gaussian in squared distance whose bandwidth is found by bisection so
// that exp(entropy) equals `perplexity`.
std::vector<double> ConditionalProbabilities(const Matrix& points, double perplexity);

// Symmetrized joint affinities P (n x n, row-major, zero diagonal, sums to 1)
// with per-point Gaussian bandwidths matched to `perplexity` by bisection.
std::vector<double> JointProbabilities(const Matrix& points, double perplexity);

// KL(P || Q) for the embedding (x, y).
double KlDivergence(const std::vector<double>& p, const std::vector<double>& x,
                    const std::vector<double>& y);

// Throws ArgumentError when n < 2 or perplexity lies outside [1, MaxPerplexity(n)].
TsneResult TsneEmbed(const Matrix& points, const TsneOptions& options);

}  // namespace modallens::projection

#endif  // MODALLENS_PROJECTION_TSNE_H_
