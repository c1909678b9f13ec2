#include "dgr/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>
#include <thread>

#include <json.hpp>

namespace dgr {

std::vector<Index> top_k_from_scores(std::span<const double> scores,
                                     std::span<const Index> masked, Index k) {
  std::vector<Index> candidates;
  candidates.reserve(scores.size());
  auto mask_it = masked.begin();
  for (Index i = 0; i < static_cast<Index>(scores.size()); ++i) {
    while (mask_it != masked.end() && *mask_it < i) ++mask_it;
    if (mask_it != masked.end() && *mask_it == i) continue;
    candidates.push_back(i);
  }
  const Index take = std::clamp<Index>(k, 0, static_cast<Index>(candidates.size()));
  auto better = [&](Index a, Index b) {
    const double sa = scores[static_cast<std::size_t>(a)];
    const double sb = scores[static_cast<std::size_t>(b)];
    return sa != sb ? sa > sb : a < b;
  };
  std::partial_sort(candidates.begin(), candidates.begin() + take, candidates.end(), better);
  candidates.resize(static_cast<std::size_t>(take));
  return candidates;
}

template <typename Scalar>
std::vector<Index> rank_items(const Matrix<Scalar>& readout, Index num_users, Index u,
                              const InteractionGraph& train, Index k) {
  const Index items = readout.rows() - num_users;
  if (u < 0 || u >= num_users || items != train.num_items()) {
    throw UsageError("rank_items: user or catalog size out of range");
  }
  const Vector<double> scores =
      readout.bottomRows(items).template cast<double>() *
      readout.row(u).template cast<double>().transpose();
  return top_k_from_scores({scores.data(), static_cast<std::size_t>(items)},
                            train.user_items(u), k);
}

double recall_at_k(std::span<const Index> topk, std::span<const Index> test) {
  if (test.empty()) throw UsageError("recall: empty test set");
  Index hits = 0;
  for (Index item : topk) {
    if (std::binary_search(test.begin(), test.end(), item)) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(test.size());
}

double ndcg_at_k(std::span<const Index> topk, std::span<const Index> test, Index k) {
  if (test.empty()) throw UsageError("ndcg: empty test set");
  double dcg = 0.0;
  const Index ranks = std::min<Index>(k, static_cast<Index>(topk.size()));
  for (Index r = 0; r < ranks; ++r) {
    if (std::binary_search(test.begin(), test.end(), topk[static_cast<std::size_t>(r)])) {
      dcg += 1.0 / std::log2(static_cast<double>(r) + 2.0);
    }
  }
  double ideal = 0.0;
  const Index ideal_ranks = std::min<Index>(k, static_cast<Index>(test.size()));
  for (Index r = 0; r < ideal_ranks; ++r) ideal += 1.0 / std::log2(static_cast<double>(r) + 2.0);
  return ideal > 0.0 ? dcg / ideal : 0.0;
}

namespace {

std::size_t find_k(const std::vector<Index>& ks, Index k) {
  const auto it = std::find(ks.begin(), ks.end(), k);
  if (it == ks.end()) throw UsageError("metric @" + std::to_string(k) + " was not computed");
  return static_cast<std::size_t>(it - ks.begin());
}

}  // namespace

double MetricsReport::recall_at(Index k) const { return recall[find_k(ks, k)]; }
double MetricsReport::ndcg_at(Index k) const { return ndcg[find_k(ks, k)]; }

std::string MetricsReport::to_json() const {
  nlohmann::json j;
  j["users_evaluated"] = users_evaluated;
  j["defined"] = defined();
  for (std::size_t n = 0; n < ks.size(); ++n) {
    const std::string suffix = "@" + std::to_string(ks[n]);
    // NaN is not representable in JSON; undefined metrics become null.
    j["recall" + suffix] = defined() ? nlohmann::json(recall[n]) : nlohmann::json(nullptr);
    j["ndcg" + suffix] = defined() ? nlohmann::json(ndcg[n]) : nlohmann::json(nullptr);
  }
  if (row_diff) j["row_diff"] = *row_diff;
  return j.dump(2);
}

std::string MetricsReport::to_csv() const {
  std::ostringstream os;
  os.precision(10);
  os << "k,recall,ndcg,users_evaluated\n";
  for (std::size_t n = 0; n < ks.size(); ++n) {
    os << ks[n] << ',' << recall[n] << ',' << ndcg[n] << ',' << users_evaluated << '\n';
  }
  return os.str();
}

template <typename Scalar>
MetricsReport evaluate(const Matrix<Scalar>& readout, const InteractionGraph& train,
                       const InteractionGraph& test, const std::vector<Index>& ks,
                       int threads) {
  const Index num_users = train.num_users();
  const Index items = train.num_items();
  if (test.num_users() != num_users || test.num_items() != items ||
      readout.rows() != num_users + items) {
    throw UsageError("evaluate: train/test/readout shapes disagree");
  }
  if (ks.empty()) throw UsageError("evaluate: no cutoffs requested");
  for (Index k : ks) {
    if (k < 1) throw UsageError("evaluate: cutoffs must be positive");
  }
  const Index max_k = *std::max_element(ks.begin(), ks.end());

  std::vector<Index> users;
  for (Index u = 0; u < num_users; ++u) {
    if (test.user_degree(u) > 0) users.push_back(u);
  }
  MetricsReport report;
  report.ks = ks;
  report.users_evaluated = static_cast<Index>(users.size());
  const double nan = std::numeric_limits<double>::quiet_NaN();
  if (users.empty()) {
    report.recall.assign(ks.size(), nan);
    report.ndcg.assign(ks.size(), nan);
    return report;
  }

  // Per-user metric rows, filled independently, reduced in user order.
  const std::size_t width = ks.size();
  std::vector<double> per_user_recall(users.size() * width);
  std::vector<double> per_user_ndcg(users.size() * width);
  const Matrix<double> item_table = readout.bottomRows(items).template cast<double>();

  auto work = [&](std::size_t begin, std::size_t end) {
    std::vector<double> scores(static_cast<std::size_t>(items));
    for (std::size_t n = begin; n < end; ++n) {
      const Index u = users[n];
      const RowVector<double> eu = readout.row(u).template cast<double>();
      Eigen::Map<Vector<double>>(scores.data(), items).noalias() = item_table * eu.transpose();
      const auto topk = top_k_from_scores(scores, train.user_items(u), max_k);
      const auto truth = test.user_items(u);
      for (std::size_t c = 0; c < width; ++c) {
        const Index k = ks[c];
        const std::span<const Index> prefix(
            topk.data(), static_cast<std::size_t>(std::min<Index>(k, topk.size())));
        per_user_recall[n * width + c] = recall_at_k(prefix, truth);
        per_user_ndcg[n * width + c] = ndcg_at_k(prefix, truth, k);
      }
    }
  };

  const std::size_t blocks =
      std::clamp<std::size_t>(static_cast<std::size_t>(std::max(threads, 1)), 1, users.size());
  if (blocks == 1) {
    work(0, users.size());
  } else {
    std::vector<std::jthread> workers;
    for (std::size_t b = 0; b < blocks; ++b) {
      workers.emplace_back(work, users.size() * b / blocks, users.size() * (b + 1) / blocks);
    }
  }

  report.recall.assign(width, 0.0);
  report.ndcg.assign(width, 0.0);
  for (std::size_t n = 0; n < users.size(); ++n) {
    for (std::size_t c = 0; c < width; ++c) {
      report.recall[c] += per_user_recall[n * width + c];
      report.ndcg[c] += per_user_ndcg[n * width + c];
    }
  }
  for (std::size_t c = 0; c < width; ++c) {
    report.recall[c] /= static_cast<double>(users.size());
    report.ndcg[c] /= static_cast<double>(users.size());
  }
  return report;
}

template <typename Scalar>
void dump_top_k(std::ostream& out, const Matrix<Scalar>& readout,
                const InteractionGraph& train, Index k) {
  out << "user,rank,item\n";
  for (Index u = 0; u < train.num_users(); ++u) {
    const auto topk = rank_items(readout, train.num_users(), u, train, k);
    for (std::size_t r = 0; r < topk.size(); ++r) {
      out << u << ',' << r + 1 << ',' << topk[r] << '\n';
    }
  }
}

#define DGR_INSTANTIATE(S)                                                                 \
  template std::vector<Index> rank_items(const Matrix<S>&, Index, Index,                   \
                                         const InteractionGraph&, Index);                  \
  template MetricsReport evaluate(const Matrix<S>&, const InteractionGraph&,               \
                                  const InteractionGraph&, const std::vector<Index>&, int); \
  template void dump_top_k(std::ostream&, const Matrix<S>&, const InteractionGraph&, Index);

DGR_INSTANTIATE(float)
DGR_INSTANTIATE(double)

#undef DGR_INSTANTIATE

}  // namespace dgr
