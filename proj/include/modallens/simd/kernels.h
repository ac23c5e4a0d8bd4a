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

// Data-parallel inner loops shared by the numeric modules. Every kernel has a
// scalar reference implementation; an AVX2+FMA variant is compiled on x86-64
// and selected at runtime when the CPU supports it. The variants agree to
// rounding, not bitwise: callers that need bit-identical output across runs
// get it because the selection is fixed for the lifetime of the process.
//
// Selection can be overridden with MODALLENS_SIMD=scalar|avx2|auto.

#ifndef MODALLENS_SIMD_KERNELS_H_
#define MODALLENS_SIMD_KERNELS_H_

#include <cstddef>
#include <string_view>

namespace modallens::simd {

enum class Isa { kScalar, kAvx2 };

struct Kernels {
  Isa isa;

  double (*dot)(const double* a, const double* b, std::size_t n);

  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);

  double (*squared_distance)(const double* a, const double* b, std::size_t n);

  // Student-t numerators for one row of a 2-D embedding stored as separate
  // x/y coordinate arrays: out[j] = 1 / (1 + |p_i - p_j|^2), out[i] = 0.
  // Returns the row sum.
  double (*student_t_row)(double xi, double yi, const double* xs,
                          const double* ys, std::size_t n, std::size_t i,
                          double* out);

  // Exact t-SNE gradient for point i:
  //   g = 4 * sum_j (exaggeration * p_ij - num_ij * inv_z) * num_ij * (y_i - y_j)
  void (*tsne_gradient_row)(double xi, double yi, const double* xs,
                            const double* ys, const double* p_row,
                            const double* num_row, double inv_z,
                            double exaggeration, std::size_t n, double* gx,
                            double* gy);

  // Perplexity search helper: given squared distances d and precision beta,
  // writes out[j] = exp(-beta * (d[j] - d_min)) and returns {sum, sum d*out}.
  // Index `skip` is forced to zero and left out of both sums (its distance
  // may lie below d_min).
  void (*gaussian_row)(const double* d, std::size_t n, std::size_t skip,
                       double beta, double d_min, double* out, double* sum,
                       double* weighted_sum);
};

const Kernels& ScalarKernels();

// Null when the AVX2 variant is not compiled in or the CPU lacks AVX2/FMA.
const Kernels* Avx2Kernels();

// The process-wide selection.
const Kernels& Active();

std::string_view IsaName(Isa isa);

}  // namespace modallens::simd

#endif  // MODALLENS_SIMD_KERNELS_H_
