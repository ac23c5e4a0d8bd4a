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
#include <cmath>

#include "modallens/simd/kernels.h"
#include "src/simd/kernels_internal.h"

namespace modallens::simd::scalar {

double Dot(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

void Axpy(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

double SquaredDistance(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc;
}

double StudentTRow(double xi, double yi, const double* xs, const double* ys,
                   std::size_t n, std::size_t i, double* out) {
  double sum = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double dx = xi - xs[j];
    const double dy = yi - ys[j];
    out[j] = 1.0 / (1.0 + dx * dx + dy * dy);
    sum += out[j];
  }
  sum -= out[i];
  out[i] = 0.0;
  return sum;
}

void TsneGradientRow(double xi, double yi, const double* xs, const double* ys,
                     const double* p_row, const double* num_row, double inv_z,
                     double exaggeration, std::size_t n, double* gx,
                     double* gy) {
  double ax = 0.0;
  double ay = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double mult =
        (exaggeration * p_row[j] - num_row[j] * inv_z) * num_row[j];
    ax += mult * (xi - xs[j]);
    ay += mult * (yi - ys[j]);
  }
  *gx = 4.0 * ax;
  *gy = 4.0 * ay;
}

void GaussianRow(const double* d, std::size_t n, std::size_t skip, double beta,
                 double d_min, double* out, double* sum, double* weighted_sum) {
  double s = 0.0;
  double ws = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    // The skipped entry never enters the sums: with d[skip] below d_min its
    // term can be huge, and subtracting it afterwards would cancel.
    out[j] = j == skip ? 0.0 : std::exp(-beta * (d[j] - d_min));
    s += out[j];
    ws += d[j] * out[j];
  }
  *sum = s;
  *weighted_sum = ws;
}

}  // namespace modallens::simd::scalar
