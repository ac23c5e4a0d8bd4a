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

#include "modallens/templates/fpgrowth.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <set>
#include <unordered_map>

#include "modallens/common/error.h"

namespace modallens::templates {
namespace {

void CheckSupport(double min_support) {
  if (!(min_support > 0.0 && min_support <= 1.0)) {
    Throw(ErrorKind::kArgument, "min_support must lie in (0, 1]");
  }
}

// Item ids are ranks: 0 is the most frequent item.
struct Node {
  int item = -1;
  std::size_t count = 0;
  Node* parent = nullptr;
  Node* next = nullptr;  // next node carrying the same item
  std::map<int, std::unique_ptr<Node>> children;
};

class FpTree {
 public:
  explicit FpTree(std::size_t items) : heads_(items, nullptr), counts_(items, 0) {}

  // `path` must be sorted by rank ascending.
  void Insert(const std::vector<int>& path, std::size_t count) {
    Node* node = &root_;
    for (int item : path) {
      auto& child = node->children[item];
      if (!child) {
        child = std::make_unique<Node>();
        child->item = item;
        child->parent = node;
        child->next = heads_[item];
        heads_[item] = child.get();
      }
      child->count += count;
      counts_[item] += count;
      node = child.get();
    }
  }

  std::size_t count(int item) const { return counts_[item]; }
  Node* head(int item) const { return heads_[item]; }
  std::size_t size() const { return heads_.size(); }

 private:
  Node root_;
  std::vector<Node*> heads_;
  std::vector<std::size_t> counts_;
};

void Mine(const FpTree& tree, std::size_t min_count, std::vector<int>& suffix,
          std::vector<std::pair<std::vector<int>, std::size_t>>& out) {
  // Least frequent first, as in the classic formulation.
  for (std::size_t r = tree.size(); r-- > 0;) {
    const int item = static_cast<int>(r);
    const std::size_t support = tree.count(item);
    if (support < min_count) continue;
    suffix.push_back(item);
    out.emplace_back(suffix, support);

    // Conditional pattern base: prefix paths of every node carrying `item`.
    std::vector<std::pair<std::vector<int>, std::size_t>> base;
    std::vector<std::size_t> conditional_counts(tree.size(), 0);
    for (Node* node = tree.head(item); node != nullptr; node = node->next) {
      std::vector<int> path;
      for (Node* p = node->parent; p != nullptr && p->item >= 0; p = p->parent) {
        path.push_back(p->item);
        conditional_counts[p->item] += node->count;
      }
      if (path.empty()) continue;
      std::reverse(path.begin(), path.end());
      base.emplace_back(std::move(path), node->count);
    }
    FpTree conditional(tree.size());
    bool any = false;
    for (auto& [path, count] : base) {
      std::vector<int> kept;
      for (int p : path) {
        if (conditional_counts[p] >= min_count) kept.push_back(p);
      }
      if (kept.empty()) continue;
      conditional.Insert(kept, count);
      any = true;
    }
    if (any) Mine(conditional, min_count, suffix, out);
    suffix.pop_back();
  }
}

std::vector<ItemList> Deduplicated(std::span<const ItemList> transactions) {
  std::vector<ItemList> out;
  out.reserve(transactions.size());
  for (const ItemList& t : transactions) {
    ItemList items = t;
    std::sort(items.begin(), items.end());
    items.erase(std::unique(items.begin(), items.end()), items.end());
    out.push_back(std::move(items));
  }
  return out;
}

}  // namespace

std::size_t MinSupportCount(double min_support, std::size_t n) {
  CheckSupport(min_support);
  const double raw = std::ceil(min_support * static_cast<double>(n) - 1e-9);
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::max(raw, 0.0)));
}

void SortItemsets(std::vector<FrequentItemset>& itemsets) {
  std::sort(itemsets.begin(), itemsets.end(),
            [](const FrequentItemset& a, const FrequentItemset& b) {
              if (a.support != b.support) return a.support > b.support;
              return a.items < b.items;
            });
}

std::vector<FrequentItemset> FpGrowth(std::span<const ItemList> transactions,
                                      double min_support) {
  const std::size_t min_count = MinSupportCount(min_support, transactions.size());
  const std::vector<ItemList> clean = Deduplicated(transactions);

  std::map<ItemKey, std::size_t> frequency;
  for (const ItemList& t : clean) {
    for (const ItemKey& item : t) ++frequency[item];
  }
  std::vector<std::pair<ItemKey, std::size_t>> ranked;
  for (const auto& [item, count] : frequency) {
    if (count >= min_count) ranked.emplace_back(item, count);
  }
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  std::unordered_map<ItemKey, int> rank;
  for (std::size_t i = 0; i < ranked.size(); ++i) rank[ranked[i].first] = static_cast<int>(i);

  FpTree tree(ranked.size());
  for (const ItemList& t : clean) {
    std::vector<int> path;
    for (const ItemKey& item : t) {
      auto it = rank.find(item);
      if (it != rank.end()) path.push_back(it->second);
    }
    if (path.empty()) continue;
    std::sort(path.begin(), path.end());
    tree.Insert(path, 1);
  }

  std::vector<std::pair<std::vector<int>, std::size_t>> raw;
  std::vector<int> suffix;
  Mine(tree, min_count, suffix, raw);

  std::vector<FrequentItemset> out;
  out.reserve(raw.size());
  for (const auto& [ids, support] : raw) {
    FrequentItemset set;
    for (int id : ids) set.items.push_back(ranked[id].first);
    std::sort(set.items.begin(), set.items.end());
    set.support = support;
    out.push_back(std::move(set));
  }
  SortItemsets(out);
  return out;
}

std::vector<FrequentItemset> Apriori(std::span<const ItemList> transactions,
                                     double min_support) {
  const std::size_t min_count = MinSupportCount(min_support, transactions.size());
  const std::vector<ItemList> clean = Deduplicated(transactions);
  std::set<ItemKey> distinct;
  for (const ItemList& t : clean) distinct.insert(t.begin(), t.end());
  if (distinct.size() > kAprioriMaxItems) {
    Throw(ErrorKind::kArgument, "apriori oracle is limited to " +
                                    std::to_string(kAprioriMaxItems) + " distinct items (got " +
                                    std::to_string(distinct.size()) + ")");
  }
  auto support_of = [&](const ItemList& items) {
    std::size_t count = 0;
    for (const ItemList& t : clean) {
      if (std::includes(t.begin(), t.end(), items.begin(), items.end())) ++count;
    }
    return count;
  };

  std::vector<FrequentItemset> out;
  std::vector<ItemList> level;
  for (const ItemKey& item : distinct) {
    const std::size_t s = support_of({item});
    if (s >= min_count) {
      level.push_back({item});
      out.push_back({{item}, s});
    }
  }
  while (!level.empty()) {
    std::set<ItemList> frequent(level.begin(), level.end());
    std::vector<ItemList> next;
    for (std::size_t i = 0; i < level.size(); ++i) {
      for (std::size_t j = i + 1; j < level.size(); ++j) {
        const ItemList& a = level[i];
        const ItemList& b = level[j];
        if (!std::equal(a.begin(), a.end() - 1, b.begin())) continue;
        ItemList candidate = a;
        candidate.push_back(b.back());
        std::sort(candidate.begin(), candidate.end());
        bool pruned = false;
        for (std::size_t drop = 0; drop < candidate.size() && !pruned; ++drop) {
          ItemList subset = candidate;
          subset.erase(subset.begin() + static_cast<std::ptrdiff_t>(drop));
          pruned = !frequent.count(subset);
        }
        if (pruned) continue;
        const std::size_t s = support_of(candidate);
        if (s >= min_count) {
          out.push_back({candidate, s});
          next.push_back(std::move(candidate));
        }
      }
    }
    std::sort(next.begin(), next.end());
    next.erase(std::unique(next.begin(), next.end()), next.end());
    level = std::move(next);
  }
  SortItemsets(out);
  return out;
}

}  // namespace modallens::templates
