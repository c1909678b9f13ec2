#pragma once

#include <algorithm>
#include <iterator>
#include <set>
#include <vector>

#include "dgr/lec_index.hpp"

namespace dgr::testing {

// All-pairs neighbor-set intersection with an independent ranking.
inline LecIndex brute_force_lec_index(const InteractionGraph& g, Index k1, Index k2, Index theta) {
  const Index items = g.num_items();
  std::vector<std::set<Index>> users(static_cast<std::size_t>(items));
  for (const auto& [u, i] : g.edges()) users[static_cast<std::size_t>(i)].insert(u);
  LecIndex index;
  index.params = {k1, k2, theta, 0};
  index.similar.resize(static_cast<std::size_t>(items));
  index.marginal.resize(static_cast<std::size_t>(items));
  for (Index i = 0; i < items; ++i) {
    std::vector<CoItem> pool;
    for (Index j = 0; j < items; ++j) {
      if (j == i) continue;
      std::vector<Index> both;
      std::set_intersection(users[static_cast<std::size_t>(i)].begin(),
                            users[static_cast<std::size_t>(i)].end(),
                            users[static_cast<std::size_t>(j)].begin(),
                            users[static_cast<std::size_t>(j)].end(), std::back_inserter(both));
      const auto count = static_cast<Index>(both.size());
      if (count > theta) pool.push_back({j, count});
    }
    std::stable_sort(pool.begin(), pool.end(),
                     [](const CoItem& a, const CoItem& b) { return a.count > b.count; });
    auto& S = index.similar[static_cast<std::size_t>(i)];
    auto& M = index.marginal[static_cast<std::size_t>(i)];
    std::size_t k = 0;
    for (; k < pool.size() && static_cast<Index>(S.size()) < k1; ++k) S.push_back(pool[k]);
    const std::vector<CoItem> rest(pool.begin() + static_cast<std::ptrdiff_t>(k), pool.end());
    const std::size_t skip = rest.size() > static_cast<std::size_t>(k2)
                                 ? rest.size() - static_cast<std::size_t>(k2)
                                 : 0;
    M.assign(rest.begin() + static_cast<std::ptrdiff_t>(skip), rest.end());
  }
  return index;
}

}  // namespace dgr::testing
