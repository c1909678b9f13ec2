#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "dgr/metrics.hpp"
#include "test_support.hpp"

namespace dgr {
namespace {

using testing::random_graph;
using testing::random_matrix;
using testing::TestRng;

// Readout whose user u scores item i with scores(u, i): users are unit
// vectors and item columns carry the scores.
Matrix<double> readout_from_scores(const Matrix<double>& scores) {
  const Index users = scores.rows();
  const Index items = scores.cols();
  Matrix<double> readout = Matrix<double>::Zero(users + items, users);
  for (Index u = 0; u < users; ++u) {
    readout(u, u) = 1.0;
    for (Index i = 0; i < items; ++i) readout(users + i, u) = scores(u, i);
  }
  return readout;
}

TEST(RankItems, Examples) {
  Matrix<double> scores(1, 3);
  scores << 0.1, 0.9, 0.5;
  const auto readout = readout_from_scores(scores);
  const InteractionGraph none(1, 3, {});
  EXPECT_EQ(rank_items(readout, 1, 0, none, 2), (std::vector<Index>{1, 2}));
  const InteractionGraph top_masked(1, 3, {{0, 1}});
  EXPECT_EQ(rank_items(readout, 1, 0, top_masked, 2), (std::vector<Index>{2, 0}));
  // k larger than the unmasked pool is clamped.
  EXPECT_EQ(rank_items(readout, 1, 0, top_masked, 10), (std::vector<Index>{2, 0}));

  const Matrix<double> flat = readout_from_scores(Matrix<double>::Constant(1, 5, 0.3));
  EXPECT_EQ(rank_items(flat, 1, 0, InteractionGraph(1, 5, {}), 5),
            (std::vector<Index>{0, 1, 2, 3, 4}));
}

TEST(RankItems, ScoreVectorForm) {
  const std::vector<double> scores{0.2, 0.7, 0.7, -1.0, 0.9};
  const std::vector<Index> masked{4};
  EXPECT_EQ(top_k_from_scores(scores, masked, 3), (std::vector<Index>{1, 2, 0}));
  EXPECT_EQ(top_k_from_scores(scores, {}, 1), (std::vector<Index>{4}));
}

TEST(RankItems, ScaleInvariant) {
  TestRng rng(1);
  const auto train = random_graph(6, 30, 0.2, rng);
  const Matrix<double> readout = random_matrix(36, 5, rng);
  const Matrix<double> scaled = 3.7 * readout;
  for (Index u = 0; u < 6; ++u) {
    EXPECT_EQ(rank_items(readout, 6, u, train, 10), rank_items(scaled, 6, u, train, 10));
  }
}

TEST(Recall, Examples) {
  const std::vector<Index> test{3, 7};
  EXPECT_DOUBLE_EQ(recall_at_k(std::vector<Index>{3, 1, 2}, test), 0.5);
  EXPECT_DOUBLE_EQ(recall_at_k(std::vector<Index>{7, 1, 3}, test), 1.0);
  EXPECT_DOUBLE_EQ(recall_at_k(std::vector<Index>{0, 1}, test), 0.0);
}

TEST(Ndcg, Examples) {
  const std::vector<Index> test{5};
  EXPECT_DOUBLE_EQ(ndcg_at_k(std::vector<Index>{5, 1}, test, 2), 1.0);
  EXPECT_NEAR(ndcg_at_k(std::vector<Index>{1, 5}, test, 2), std::log(2.0) / std::log(3.0), 1e-15);
  EXPECT_DOUBLE_EQ(ndcg_at_k(std::vector<Index>{1, 2}, test, 2), 0.0);
}

// Definition-following NDCG: loops over ranks and test items explicitly.
double ndcg_oracle(const std::vector<Index>& topk, const std::vector<Index>& test, Index k) {
  double dcg = 0.0;
  for (Index r = 0; r < std::min<Index>(k, static_cast<Index>(topk.size())); ++r) {
    for (Index t : test) {
      if (topk[static_cast<std::size_t>(r)] == t) dcg += 1.0 / std::log2(r + 2.0);
    }
  }
  double idcg = 0.0;
  for (Index r = 0; r < std::min<Index>(k, static_cast<Index>(test.size())); ++r) {
    idcg += 1.0 / std::log2(r + 2.0);
  }
  return dcg / idcg;
}

TEST(Ndcg, MatchesDefinitionOracle) {
  TestRng rng(2);
  for (int trial = 0; trial < 500; ++trial) {
    const Index items = 5 + static_cast<Index>(rng() % 40);
    std::vector<Index> all(static_cast<std::size_t>(items));
    std::iota(all.begin(), all.end(), 0);
    std::shuffle(all.begin(), all.end(), rng);
    const Index k = 1 + static_cast<Index>(rng() % items);
    const std::vector<Index> topk(all.begin(), all.begin() + k);
    std::shuffle(all.begin(), all.end(), rng);
    const Index size = std::min<Index>(items, 1 + static_cast<Index>(rng() % 8));
    std::vector<Index> test(all.begin(), all.begin() + size);
    std::sort(test.begin(), test.end());
    const double value = ndcg_at_k(topk, test, k);
    EXPECT_NEAR(value, ndcg_oracle(topk, test, k), 1e-12);
    EXPECT_GE(value, 0.0);
    EXPECT_LE(value, 1.0 + 1e-15);
  }
}

TEST(Evaluate, EmptyTestGraph) {
  TestRng rng(3);
  const auto train = random_graph(4, 6, 0.5, rng);
  const auto report = evaluate(random_matrix(10, 3, rng), train, InteractionGraph(4, 6, {}), {20});
  EXPECT_EQ(report.users_evaluated, 0);
  EXPECT_FALSE(report.defined());
  EXPECT_TRUE(std::isnan(report.recall_at(20)));
}

TEST(Evaluate, PerfectModel) {
  Matrix<double> scores(1, 6);
  scores << 0.0, 0.9, 0.1, 0.8, 0.2, 0.95;
  const InteractionGraph train(1, 6, {{0, 5}});
  const InteractionGraph test(1, 6, {{0, 1}, {0, 3}});
  const auto report = evaluate(readout_from_scores(scores), train, test, {2, 20});
  EXPECT_EQ(report.users_evaluated, 1);
  EXPECT_DOUBLE_EQ(report.recall_at(2), 1.0);
  EXPECT_DOUBLE_EQ(report.ndcg_at(2), 1.0);
  EXPECT_DOUBLE_EQ(report.recall_at(20), 1.0);
  EXPECT_DOUBLE_EQ(report.ndcg_at(20), 1.0);
  EXPECT_THROW(report.recall_at(5), UsageError);
}

TEST(Evaluate, FourUserScriptedCase) {
  // Items 0..5. Rows give per-user scores.
  Matrix<double> scores(4, 6);
  scores << 0.9, 0.8, 0.7, 0.6, 0.5, 0.4,   // u0
      0.1, 0.2, 0.3, 0.4, 0.5, 0.6,         // u1
      0.5, 0.5, 0.5, 0.5, 0.5, 0.5,         // u2, all tied
      0.3, 0.9, 0.1, 0.8, 0.2, 0.7;         // u3, no test items
  const InteractionGraph train(4, 6, {{0, 0}, {1, 5}, {2, 1}, {3, 0}});
  const InteractionGraph test(4, 6, {{0, 2}, {0, 5}, {1, 0}, {2, 0}, {2, 4}});
  const auto report = evaluate(readout_from_scores(scores), train, test, {2, 3});
  // u0 ranking (0 masked): 1 2 3 4 5. k=2: hits {2} at rank 2.
  // u1 ranking (5 masked): 4 3 2 1 0. k=2,3: no hit.
  // u2 ranking (1 masked, ties by index): 0 2 3 4 5. k=2: hit 0 at rank 1; k=3 same.
  const double l2 = 1.0, l3 = 1.0 / std::log2(3.0);
  const double u0_r2 = 0.5, u0_n2 = l3 / (l2 + l3);
  const double u0_r3 = 0.5, u0_n3 = l3 / (l2 + l3);
  const double u2_r2 = 0.5, u2_n2 = l2 / (l2 + l3);
  const double u2_r3 = 0.5, u2_n3 = l2 / (l2 + l3);
  EXPECT_EQ(report.users_evaluated, 3);
  EXPECT_NEAR(report.recall_at(2), (u0_r2 + 0.0 + u2_r2) / 3.0, 1e-15);
  EXPECT_NEAR(report.ndcg_at(2), (u0_n2 + 0.0 + u2_n2) / 3.0, 1e-15);
  EXPECT_NEAR(report.recall_at(3), (u0_r3 + 0.0 + u2_r3) / 3.0, 1e-15);
  EXPECT_NEAR(report.ndcg_at(3), (u0_n3 + 0.0 + u2_n3) / 3.0, 1e-15);
}

TEST(Evaluate, RecallMonotoneInK) {
  TestRng rng(4);
  const auto train = random_graph(20, 50, 0.1, rng);
  const auto test = random_graph(20, 50, 0.05, rng);
  const auto report =
      evaluate(random_matrix(70, 6, rng), train, test, {1, 2, 5, 10, 20, 30, 40, 50});
  for (std::size_t k = 1; k < report.ks.size(); ++k) {
    EXPECT_GE(report.recall[k], report.recall[k - 1]);
  }
  for (double r : report.recall) EXPECT_LE(r, 1.0);
}

TEST(Evaluate, ThreadPartitionGivesIdenticalReport) {
  TestRng rng(5);
  const auto train = random_graph(57, 80, 0.08, rng);
  const auto test = random_graph(57, 80, 0.04, rng);
  const Matrix<double> readout = random_matrix(137, 8, rng);
  const auto single = evaluate(readout, train, test, {5, 20});
  for (int threads : {2, 3, 7, 64}) {
    const auto multi = evaluate(readout, train, test, {5, 20}, threads);
    EXPECT_EQ(multi.recall, single.recall);
    EXPECT_EQ(multi.ndcg, single.ndcg);
    EXPECT_EQ(multi.users_evaluated, single.users_evaluated);
  }
}

TEST(Evaluate, MatchesPerUserOracle) {
  TestRng rng(6);
  const auto train = random_graph(15, 25, 0.15, rng);
  const auto test = random_graph(15, 25, 0.1, rng);
  const Matrix<double> readout = random_matrix(40, 4, rng);
  const Index k = 7;
  double recall = 0.0, ndcg = 0.0;
  Index users = 0;
  for (Index u = 0; u < 15; ++u) {
    std::vector<Index> test_items;
    for (Index i : test.user_items(u)) test_items.push_back(i);
    if (test_items.empty()) continue;
    std::vector<std::pair<double, Index>> ranked;
    for (Index i = 0; i < 25; ++i) {
      if (!train.has_edge(u, i)) ranked.emplace_back(-readout.row(u).dot(readout.row(15 + i)), i);
    }
    std::sort(ranked.begin(), ranked.end());
    std::vector<Index> topk;
    for (Index r = 0; r < std::min<Index>(k, static_cast<Index>(ranked.size())); ++r) {
      topk.push_back(ranked[static_cast<std::size_t>(r)].second);
    }
    Index hits = 0;
    for (Index i : topk) hits += std::count(test_items.begin(), test_items.end(), i);
    recall += static_cast<double>(hits) / static_cast<double>(test_items.size());
    ndcg += ndcg_oracle(topk, test_items, k);
    ++users;
  }
  const auto report = evaluate(readout, train, test, {k});
  EXPECT_EQ(report.users_evaluated, users);
  EXPECT_NEAR(report.recall_at(k), recall / static_cast<double>(users), 1e-12);
  EXPECT_NEAR(report.ndcg_at(k), ndcg / static_cast<double>(users), 1e-12);
}

TEST(MetricsReport, Serialization) {
  MetricsReport report;
  report.ks = {20};
  report.recall = {0.25};
  report.ndcg = {0.125};
  report.users_evaluated = 4;
  report.row_diff = 1.5;
  const std::string json = report.to_json();
  EXPECT_NE(json.find("\"recall@20\""), std::string::npos);
  EXPECT_NE(json.find("0.125"), std::string::npos);
  EXPECT_NE(json.find("row_diff"), std::string::npos);
  EXPECT_EQ(report.to_csv(), "k,recall,ndcg,users_evaluated\n20,0.25,0.125,4\n");
}

TEST(DumpTopK, WritesRankedRows) {
  Matrix<double> scores(2, 3);
  scores << 0.1, 0.9, 0.5, 0.3, 0.2, 0.1;
  std::ostringstream out;
  dump_top_k(out, readout_from_scores(scores), InteractionGraph(2, 3, {{1, 0}}), 2);
  EXPECT_EQ(out.str(), "user,rank,item\n0,1,1\n0,2,2\n1,1,1\n1,2,2\n");
}

}  // namespace
}  // namespace dgr
