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
#include <cstdlib>
#include <string>

#include "modallens/simd/kernels.h"
#include "src/simd/kernels_internal.h"

namespace modallens::simd {
namespace {

bool CpuHasAvx2() {
#if defined(MODALLENS_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const Kernels& Select() {
  const char* env = std::getenv("MODALLENS_SIMD");
  const std::string choice = env == nullptr ? "auto" : env;
  if (choice == "scalar") return ScalarKernels();
  if (const Kernels* avx2 = Avx2Kernels()) return *avx2;
  return ScalarKernels();
}

}  // namespace

const Kernels& ScalarKernels() {
  static const Kernels kernels{
      Isa::kScalar,         scalar::Dot,          scalar::Axpy,
      scalar::SquaredDistance, scalar::StudentTRow, scalar::TsneGradientRow,
      scalar::GaussianRow,
  };
  return kernels;
}

const Kernels* Avx2Kernels() {
#if defined(MODALLENS_HAVE_AVX2)
  static const Kernels kernels{
      Isa::kAvx2,         avx2::Dot,          avx2::Axpy,
      avx2::SquaredDistance, avx2::StudentTRow, avx2::TsneGradientRow,
      avx2::GaussianRow,
  };
  static const bool supported = CpuHasAvx2();
  return supported ? &kernels : nullptr;
#else
  return nullptr;
#endif
}

const Kernels& Active() {
  static const Kernels& selected = Select();
  return selected;
}

std::string_view IsaName(Isa isa) {
  switch (isa) {
    case Isa::kScalar: return "scalar";
    case Isa::kAvx2: return "avx2";
  }
  return "unknown";
}

}  // namespace modallens::simd
