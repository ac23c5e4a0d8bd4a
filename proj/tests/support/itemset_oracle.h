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

// Brute-force frequent itemsets and random transaction databases.

#ifndef MODALLENS_TESTS_SUPPORT_ITEMSET_ORACLE_H_
#define MODALLENS_TESTS_SUPPORT_ITEMSET_ORACLE_H_

#include <algorithm>
#include <cstdint>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "modallens/templates/fpgrowth.h"

namespace modallens::testing {

// Brute force over every subset of the item universe (small universes only).
inline std::vector<templates::FrequentItemset> SubsetOracle(const std::vector<templates::ItemList>& db, double ms) {
  std::set<std::string> universe_set;
  for (const auto& t : db) universe_set.insert(t.begin(), t.end());
  const std::vector<std::string> universe(universe_set.begin(), universe_set.end());
  const std::size_t n = universe.size();
  std::size_t min_count = 1;
  while (double(min_count) < ms * double(db.size()) - 1e-9) ++min_count;
  std::vector<std::set<std::string>> sets;
  for (const auto& t : db) sets.emplace_back(t.begin(), t.end());
  std::vector<templates::FrequentItemset> out;
  for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
    templates::ItemList items;
    for (std::size_t i = 0; i < n; ++i) {
      if (mask & (1u << i)) items.push_back(universe[i]);
    }
    std::size_t count = 0;
    for (const auto& s : sets) {
      count += std::all_of(items.begin(), items.end(), [&](const auto& i) { return s.count(i); });
    }
    if (count >= min_count) out.push_back({items, count});
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    if (a.support != b.support) return a.support > b.support;
    return a.items < b.items;
  });
  return out;
}

inline std::vector<templates::ItemList> RandomDb(std::mt19937_64& rng, std::size_t n, std::size_t items) {
  std::uniform_int_distribution<std::size_t> len(0, items);
  std::uniform_int_distribution<std::size_t> pick(0, items - 1);
  std::vector<templates::ItemList> db(n);
  for (auto& t : db) {
    const std::size_t l = len(rng);
    // Skewed draws so that some items are frequent and some rare.
    for (std::size_t k = 0; k < l; ++k) t.push_back("i" + std::to_string(std::min(pick(rng), pick(rng))));
  }
  return db;
}

}  // namespace modallens::testing

#endif  // MODALLENS_TESTS_SUPPORT_ITEMSET_ORACLE_H_
