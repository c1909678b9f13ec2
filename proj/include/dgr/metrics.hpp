#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dgr/graph.hpp"
#include "dgr/types.hpp"

namespace dgr {

// Top-k items for user u by readout inner product, excluding the user's
// training items. Ties go to the lower item index. k is clamped to the number
// of unmasked items.
template <typename Scalar>
std::vector<Index> rank_items(const Matrix<Scalar>& readout, Index num_users, Index u,
                              const InteractionGraph& train, Index k);

// Same ranking rule on an explicit score vector; `masked` is sorted.
std::vector<Index> top_k_from_scores(std::span<const double> scores,
                                     std::span<const Index> masked, Index k);

// |topk ∩ test| / |test|; `test` is sorted and nonempty.
double recall_at_k(std::span<const Index> topk, std::span<const Index> test);

// DCG over the first k ranks divided by the ideal DCG truncated at
// min(k, |test|); `test` is sorted and nonempty.
double ndcg_at_k(std::span<const Index> topk, std::span<const Index> test, Index k);

struct MetricsReport {
  std::vector<Index> ks;
  std::vector<double> recall;  // per k, mean over evaluated users
  std::vector<double> ndcg;
  Index users_evaluated = 0;
  std::optional<double> row_diff;

  // False when no user has a test item; metric values are then NaN.
  bool defined() const { return users_evaluated > 0; }
  double recall_at(Index k) const;
  double ndcg_at(Index k) const;

  std::string to_json() const;
  std::string to_csv() const;
};

// Full-catalog ranking for every user with at least one test item.
// Per-user work is split across `threads`; the sums are reduced in user order.
template <typename Scalar>
MetricsReport evaluate(const Matrix<Scalar>& readout, const InteractionGraph& train,
                       const InteractionGraph& test, const std::vector<Index>& ks,
                       int threads = 1);

// Writes "user,rank,item" rows for every user.
template <typename Scalar>
void dump_top_k(std::ostream& out, const Matrix<Scalar>& readout,
                const InteractionGraph& train, Index k);

}  // namespace dgr
