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
// Compiled with -mavx2 -mfma; only reached after a runtime CPU check.

#include <immintrin.h>

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "src/simd/kernels_internal.h"

namespace modallens::simd::avx2 {
namespace {

inline double HorizontalSum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d pair = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(pair, _mm_unpackhi_pd(pair, pair)));
}

// exp(x) for x <= 0 to about 1 ulp: x = n ln2 + r, |r| <= ln2 / 2, Taylor
// series of degree 13 on r, 2^n assembled in the exponent bits. Arguments
// below -708 return 0.
inline __m256d ExpNonPositive(__m256d x) {
  const __m256d underflow = _mm256_cmp_pd(x, _mm256_set1_pd(-708.0), _CMP_LT_OQ);
  x = _mm256_max_pd(x, _mm256_set1_pd(-708.0));
  const __m256d n = _mm256_round_pd(
      _mm256_mul_pd(x, _mm256_set1_pd(1.4426950408889634)),
      _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  __m256d r = _mm256_fnmadd_pd(n, _mm256_set1_pd(6.93147180369123816490e-01), x);
  r = _mm256_fnmadd_pd(n, _mm256_set1_pd(1.90821492927058770002e-10), r);

  static constexpr double kInvFactorial[] = {
      1.0 / 6227020800.0, 1.0 / 479001600.0, 1.0 / 39916800.0,
      1.0 / 3628800.0,    1.0 / 362880.0,    1.0 / 40320.0,
      1.0 / 5040.0,       1.0 / 720.0,       1.0 / 120.0,
      1.0 / 24.0,         1.0 / 6.0,         1.0 / 2.0,
      1.0,                1.0};
  __m256d poly = _mm256_set1_pd(kInvFactorial[0]);
  for (int k = 1; k < 14; ++k) {
    poly = _mm256_fmadd_pd(poly, r, _mm256_set1_pd(kInvFactorial[k]));
  }

  const __m256d magic = _mm256_set1_pd(6755399441055744.0);  // 1.5 * 2^52
  const __m256i n_int = _mm256_sub_epi64(
      _mm256_castpd_si256(_mm256_add_pd(n, magic)), _mm256_castpd_si256(magic));
  const __m256i bits =
      _mm256_slli_epi64(_mm256_add_epi64(n_int, _mm256_set1_epi64x(1023)), 52);
  const __m256d result = _mm256_mul_pd(poly, _mm256_castsi256_pd(bits));
  return _mm256_andnot_pd(underflow, result);
}

}  // namespace

double Dot(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4),
                           _mm256_loadu_pd(b + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  }
  double acc = HorizontalSum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

void Axpy(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(
        y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

double SquaredDistance(const double* a, const double* b, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    acc = _mm256_fmadd_pd(d, d, acc);
  }
  double sum = HorizontalSum(acc);
  for (; i < n; ++i) {
    const double d = a[i] - b[i];
    sum += d * d;
  }
  return sum;
}

double StudentTRow(double xi, double yi, const double* xs, const double* ys,
                   std::size_t n, std::size_t i, double* out) {
  const __m256d vx = _mm256_set1_pd(xi);
  const __m256d vy = _mm256_set1_pd(yi);
  const __m256d one = _mm256_set1_pd(1.0);
  __m256d acc = _mm256_setzero_pd();
  std::size_t j = 0;
  for (; j + 4 <= n; j += 4) {
    const __m256d dx = _mm256_sub_pd(vx, _mm256_loadu_pd(xs + j));
    const __m256d dy = _mm256_sub_pd(vy, _mm256_loadu_pd(ys + j));
    const __m256d d2 = _mm256_fmadd_pd(dy, dy, _mm256_fmadd_pd(dx, dx, one));
    const __m256d num = _mm256_div_pd(one, d2);
    _mm256_storeu_pd(out + j, num);
    acc = _mm256_add_pd(acc, num);
  }
  double sum = HorizontalSum(acc);
  for (; j < n; ++j) {
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
  const __m256d vx = _mm256_set1_pd(xi);
  const __m256d vy = _mm256_set1_pd(yi);
  const __m256d vexag = _mm256_set1_pd(exaggeration);
  const __m256d vinvz = _mm256_set1_pd(inv_z);
  __m256d ax = _mm256_setzero_pd();
  __m256d ay = _mm256_setzero_pd();
  std::size_t j = 0;
  for (; j + 4 <= n; j += 4) {
    const __m256d num = _mm256_loadu_pd(num_row + j);
    const __m256d mult = _mm256_mul_pd(
        _mm256_fmsub_pd(vexag, _mm256_loadu_pd(p_row + j),
                        _mm256_mul_pd(num, vinvz)),
        num);
    ax = _mm256_fmadd_pd(mult, _mm256_sub_pd(vx, _mm256_loadu_pd(xs + j)), ax);
    ay = _mm256_fmadd_pd(mult, _mm256_sub_pd(vy, _mm256_loadu_pd(ys + j)), ay);
  }
  double sx = HorizontalSum(ax);
  double sy = HorizontalSum(ay);
  for (; j < n; ++j) {
    const double mult =
        (exaggeration * p_row[j] - num_row[j] * inv_z) * num_row[j];
    sx += mult * (xi - xs[j]);
    sy += mult * (yi - ys[j]);
  }
  *gx = 4.0 * sx;
  *gy = 4.0 * sy;
}

// All-ones except lane `lane`, which is cleared.
inline __m256d SkipMask(std::size_t lane) {
  alignas(32) std::uint64_t bits[4] = {~0ULL, ~0ULL, ~0ULL, ~0ULL};
  bits[lane] = 0;
  return _mm256_castsi256_pd(_mm256_load_si256(reinterpret_cast<const __m256i*>(bits)));
}

void GaussianRow(const double* d, std::size_t n, std::size_t skip, double beta,
                 double d_min, double* out, double* sum, double* weighted_sum) {
  const __m256d vbeta = _mm256_set1_pd(-beta);
  const __m256d vmin = _mm256_set1_pd(d_min);
  __m256d s = _mm256_setzero_pd();
  __m256d ws = _mm256_setzero_pd();
  std::size_t j = 0;
  for (; j + 4 <= n; j += 4) {
    const __m256d dj = _mm256_loadu_pd(d + j);
    __m256d e = ExpNonPositive(_mm256_mul_pd(vbeta, _mm256_sub_pd(dj, vmin)));
    if (skip - j < 4) e = _mm256_and_pd(e, SkipMask(skip - j));
    _mm256_storeu_pd(out + j, e);
    s = _mm256_add_pd(s, e);
    ws = _mm256_fmadd_pd(dj, e, ws);
  }
  if (j < n) {
    // Pad the tail so every lane goes through the same exp path.
    alignas(32) double tail_d[4] = {d_min, d_min, d_min, d_min};
    alignas(32) double tail_e[4];
    std::copy(d + j, d + n, tail_d);
    const __m256d dj = _mm256_load_pd(tail_d);
    _mm256_store_pd(tail_e,
                    ExpNonPositive(_mm256_mul_pd(vbeta, _mm256_sub_pd(dj, vmin))));
    for (std::size_t k = 0; j + k < n; ++k) out[j + k] = j + k == skip ? 0.0 : tail_e[k];
  }
  double total = HorizontalSum(s);
  double weighted = HorizontalSum(ws);
  for (; j < n; ++j) {
    total += out[j];
    weighted += d[j] * out[j];
  }
  *sum = total;
  *weighted_sum = weighted;
}

}  // namespace modallens::simd::avx2
