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

// Independent re-implementation of the labeling rules and the threshold
// objective, written from the definitions without sharing library code.

#ifndef MODALLENS_TESTS_SUPPORT_INTERACTION_ORACLE_H_
#define MODALLENS_TESTS_SUPPORT_INTERACTION_ORACLE_H_

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <vector>

namespace modallens::testing {

struct OracleTriple {
  double l, a, v;
};

// "dominance" | "conflict" | "complement" | "others"
inline std::string OracleLabel(const OracleTriple& t, double sig, double dom, double confl) {
  const double eps = 1e-12;
  const double I[3] = {t.l, t.a, t.v};
  const double norm = std::fabs(t.l) + std::fabs(t.a) + std::fabs(t.v);
  if (norm == 0.0) return "others";
  for (double x : I) {
    if (!(std::fabs(x) / norm > sig + eps)) return "others";
  }
  const double sum = I[0] + I[1] + I[2];
  for (double x : I) {
    if (x * sum > 0 && std::fabs(x) / norm >= dom - eps) return "dominance";
  }
  bool opposite = false, same = false;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      if (i == j) continue;
      opposite = opposite || I[i] * I[j] < 0;
      same = same || I[i] * I[j] > 0;
    }
  }
  if (opposite && std::fabs(sum) / norm <= confl + eps) return "conflict";
  if (same) return "complement";
  return "others";
}

// numpy-style linear percentile.
inline double OraclePercentile(std::vector<double> v, double q) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const double pos = q / 100.0 * double(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - double(lo)) * (v[hi] - v[lo]);
}

inline std::vector<std::string> OracleLabels(const std::vector<OracleTriple>& ts, double sig,
                                             double dom, double confl) {
  std::vector<double> norms;
  for (const auto& t : ts) norms.push_back(std::fabs(t.l) + std::fabs(t.a) + std::fabs(t.v));
  const double gate = OraclePercentile(norms, 5.0);
  std::vector<std::string> out;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    out.push_back(norms[i] < gate ? "others" : OracleLabel(ts[i], sig, dom, confl));
  }
  return out;
}

inline double OracleObjective(const std::vector<OracleTriple>& ts, double sig, double dom,
                              double confl) {
  const std::vector<std::string> labels = OracleLabels(ts, sig, dom, confl);
  const char* names[4] = {"dominance", "conflict", "complement", "others"};
  std::array<std::array<double, 3>, 4> mean{};
  std::array<int, 4> count{};
  double others_norm = 0.0, all_norm = 0.0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    const double norm = std::fabs(ts[i].l) + std::fabs(ts[i].a) + std::fabs(ts[i].v);
    all_norm += norm;
    for (int g = 0; g < 4; ++g) {
      if (labels[i] != names[g]) continue;
      ++count[g];
      if (norm > 0) {
        mean[g][0] += ts[i].l / norm;
        mean[g][1] += ts[i].a / norm;
        mean[g][2] += ts[i].v / norm;
      }
      if (g == 3) others_norm += norm;
    }
  }
  for (int g = 0; g < 4; ++g) {
    for (double& x : mean[g]) x = count[g] ? x / count[g] : 0.0;
  }
  double dist = 0.0;
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      if (!count[i] || !count[j]) continue;
      dist += std::sqrt(std::pow(mean[i][0] - mean[j][0], 2) +
                        std::pow(mean[i][1] - mean[j][1], 2) +
                        std::pow(mean[i][2] - mean[j][2], 2));
    }
  }
  double others = 0.0;
  if (count[3] > 0 && all_norm > 0) {
    others = (others_norm / count[3]) / (all_norm / double(ts.size()));
  }
  return dist / 16.0 - others;
}

}  // namespace modallens::testing

#endif  // MODALLENS_TESTS_SUPPORT_INTERACTION_ORACLE_H_
