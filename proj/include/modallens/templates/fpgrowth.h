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

#ifndef MODALLENS_TEMPLATES_FPGROWTH_H_
#define MODALLENS_TEMPLATES_FPGROWTH_H_

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace modallens::templates {

// Items are opaque strings; a transaction is a set of them (duplicates within
// a transaction are ignored).
using ItemKey = std::string;
using ItemList = std::vector<ItemKey>;

struct FrequentItemset {
  ItemList items;  // sorted ascending
  std::size_t support = 0;

  bool operator==(const FrequentItemset&) const = default;
};

// ceil(min_support * n) with a small tolerance so 2/3 of 3 is 2, not 3.
std::size_t MinSupportCount(double min_support, std::size_t n);

// Orders by support descending, then lexicographically by item list.
void SortItemsets(std::vector<FrequentItemset>& itemsets);

// Every itemset with support >= min_support * |transactions|, via FP-trees.
// Inside the tree items are ordered by frequency descending, then by key.
// ArgumentError unless 0 < min_support <= 1.
std::vector<FrequentItemset> FpGrowth(std::span<const ItemList> transactions,
                                      double min_support);

// Level-wise brute force with the same contract, for cross-checking. Refuses
// (ArgumentError) more than kAprioriMaxItems distinct items.
inline constexpr std::size_t kAprioriMaxItems = 16;
std::vector<FrequentItemset> Apriori(std::span<const ItemList> transactions,
                                     double min_support);

}  // namespace modallens::templates

#endif  // MODALLENS_TEMPLATES_FPGROWTH_H_
