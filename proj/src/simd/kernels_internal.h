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
#ifndef MODALLENS_SRC_SIMD_KERNELS_INTERNAL_H_
#define MODALLENS_SRC_SIMD_KERNELS_INTERNAL_H_

#include <cstddef>

namespace modallens::simd {

#define MODALLENS_DECLARE_KERNELS                                            \
  double Dot(const double* a, const double* b, std::size_t n);               \
  void Axpy(double alpha, const double* x, double* y, std::size_t n);        \
  double SquaredDistance(const double* a, const double* b, std::size_t n);   \
  double StudentTRow(double xi, double yi, const double* xs,                 \
                     const double* ys, std::size_t n, std::size_t i,         \
                     double* out);                                           \
  void TsneGradientRow(double xi, double yi, const double* xs,               \
                       const double* ys, const double* p_row,                \
                       const double* num_row, double inv_z,                  \
                       double exaggeration, std::size_t n, double* gx,       \
                       double* gy);                                          \
  void GaussianRow(const double* d, std::size_t n, std::size_t skip,         \
                   double beta, double d_min, double* out, double* sum,      \
                   double* weighted_sum);

namespace scalar {
MODALLENS_DECLARE_KERNELS
}  // namespace scalar

#if defined(MODALLENS_HAVE_AVX2)
namespace avx2 {
MODALLENS_DECLARE_KERNELS
}  // namespace avx2
#endif

#undef MODALLENS_DECLARE_KERNELS

}  // namespace modallens::simd

#endif  // MODALLENS_SRC_SIMD_KERNELS_INTERNAL_H_
