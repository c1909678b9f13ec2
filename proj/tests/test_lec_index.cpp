#include <gtest/gtest.h>

#include <filesystem>
#include <set>
#include <sstream>

#include "dgr/lec_index.hpp"
#include "lec_oracle.hpp"
#include "test_support.hpp"

namespace dgr {
namespace {

using testing::brute_force_lec_index;
using testing::random_graph;
using testing::TestRng;

InteractionGraph star_graph() {
  // Items 0 and 1 both linked to users 0, 1, 2; item 2 only to user 0.
  return InteractionGraph(3, 3, {{0, 0}, {1, 0}, {2, 0}, {0, 1}, {1, 1}, {2, 1}, {0, 2}});
}

TEST(LecIndex, StarGraphAboveThreshold) {
  const auto index = build_lec_index(star_graph(), {30, 50, 2, 0});
  ASSERT_EQ(index.similar[0].size(), 1u);
  EXPECT_EQ(index.similar[0][0], (CoItem{1, 3}));
  EXPECT_TRUE(index.marginal[0].empty());
  EXPECT_TRUE(index.similar[2].empty());
}

TEST(LecIndex, ThresholdEqualityIsSkipped) {
  const auto index = build_lec_index(star_graph(), {30, 50, 3, 0});
  for (Index i = 0; i < 3; ++i) {
    EXPECT_TRUE(index.similar[static_cast<std::size_t>(i)].empty());
    EXPECT_TRUE(index.marginal[static_cast<std::size_t>(i)].empty());
  }
}

TEST(LecIndex, SmallPoolFillsSimilarFirst) {
  std::vector<CoItem> similar, marginal;
  select_similar_and_marginal({{4, 2}, {1, 5}, {3, 2}, {7, 9}}, 3, 3, similar, marginal);
  EXPECT_EQ(similar, (std::vector<CoItem>{{7, 9}, {1, 5}, {3, 2}}));
  EXPECT_EQ(marginal, (std::vector<CoItem>{{4, 2}}));
  select_similar_and_marginal({{4, 2}, {1, 5}, {3, 2}, {7, 9}, {0, 1}}, 1, 2, similar, marginal);
  EXPECT_EQ(similar, (std::vector<CoItem>{{7, 9}}));
  EXPECT_EQ(marginal, (std::vector<CoItem>{{4, 2}, {0, 1}}));
  select_similar_and_marginal({{4, 2}}, 0, 0, similar, marginal);
  EXPECT_TRUE(similar.empty());
  EXPECT_TRUE(marginal.empty());
}

TEST(LecIndex, TwelveUserFixtureMatchesBruteForce) {
  TestRng rng(1);
  const auto g = random_graph(12, 15, 0.4, rng);
  const LecParams params{2, 2, 1, 0};
  EXPECT_EQ(build_lec_index(g, params), brute_force_lec_index(g, 2, 2, 1));
}

TEST(LecIndex, MatchesBruteForceOnRandomGraphs) {
  TestRng rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    const Index users = 1 + static_cast<Index>(rng() % 25);
    const Index items = 1 + static_cast<Index>(rng() % 20);
    const double p = std::uniform_real_distribution<double>(0.05, 0.7)(rng);
    const auto g = random_graph(users, items, p, rng);
    const Index k1 = static_cast<Index>(rng() % 5);
    const Index k2 = static_cast<Index>(rng() % 5);
    const Index theta = static_cast<Index>(rng() % 4);
    const auto built = build_lec_index(g, {k1, k2, theta, 0});
    ASSERT_EQ(built, brute_force_lec_index(g, k1, k2, theta)) << "trial " << trial;
  }
}

TEST(LecIndex, StructuralInvariants) {
  TestRng rng(3);
  const auto g = random_graph(30, 20, 0.3, rng);
  const auto index = build_lec_index(g, {4, 4, 1, 0});
  for (Index i = 0; i < index.num_items(); ++i) {
    std::set<Index> seen;
    const auto& S = index.similar[static_cast<std::size_t>(i)];
    const auto& M = index.marginal[static_cast<std::size_t>(i)];
    for (const auto& list : {S, M}) {
      for (std::size_t k = 0; k < list.size(); ++k) {
        EXPECT_NE(list[k].item, i);
        EXPECT_GT(list[k].count, 1);
        EXPECT_TRUE(seen.insert(list[k].item).second) << "S and M overlap for item " << i;
        if (k > 0) {
          EXPECT_GE(list[k - 1].count, list[k].count);
        }
      }
    }
    if (!S.empty() && !M.empty()) {
      EXPECT_GE(S.back().count, M.front().count);
    }
    // Symmetric counts.
    for (const auto& entry : S) {
      const auto& other = index.similar[static_cast<std::size_t>(entry.item)];
      const auto& other_m = index.marginal[static_cast<std::size_t>(entry.item)];
      for (const auto& back : other) {
        if (back.item == i) {
          EXPECT_EQ(back.count, entry.count);
        }
      }
      for (const auto& back : other_m) {
        if (back.item == i) {
          EXPECT_EQ(back.count, entry.count);
        }
      }
    }
  }
}

TEST(LecIndex, Deterministic) {
  TestRng rng(4);
  const auto g = random_graph(40, 30, 0.25, rng);
  EXPECT_EQ(build_lec_index(g, {5, 5, 2, 0}), build_lec_index(g, {5, 5, 2, 0}));
}

TEST(LecIndex, CandidateCapIsCounted) {
  TestRng rng(5);
  const auto g = random_graph(20, 10, 0.8, rng);
  const auto exact = build_lec_index(g, {3, 3, 0, 0});
  EXPECT_EQ(exact.capped_items, 0);
  const auto capped = build_lec_index(g, {3, 3, 0, 5});
  EXPECT_GT(capped.capped_items, 0);
}

TEST(LecIndex, NegativeParametersThrow) {
  EXPECT_THROW(build_lec_index(star_graph(), {-1, 1, 0, 0}), UsageError);
  EXPECT_THROW(build_lec_index(star_graph(), {1, 1, -1, 0}), UsageError);
}

TEST(LecIndex, TextAndBinaryRoundTrip) {
  TestRng rng(6);
  const auto g = random_graph(25, 18, 0.35, rng);
  const auto index = build_lec_index(g, {3, 4, 1, 1000});

  std::stringstream text;
  write_lec_index_text(index, text);
  EXPECT_EQ(read_lec_index_text(text), index);

  std::stringstream binary(std::ios::in | std::ios::out | std::ios::binary);
  write_lec_index_binary(index, binary);
  EXPECT_EQ(read_lec_index_binary(binary), index);

  const auto dir = std::filesystem::temp_directory_path() / "dgr_lec_test";
  std::filesystem::create_directories(dir);
  save_lec_index(index, dir / "idx.txt", false);
  save_lec_index(index, dir / "idx.bin", true);
  EXPECT_EQ(load_lec_index(dir / "idx.txt"), index);
  EXPECT_EQ(load_lec_index(dir / "idx.bin"), index);
  std::filesystem::remove_all(dir);
}

TEST(LecIndex, MalformedTextIsRejected) {
  std::stringstream empty;
  EXPECT_THROW(read_lec_index_text(empty), DataError);
  std::stringstream magic("NOTANINDEX K1=1\n");
  EXPECT_THROW(read_lec_index_text(magic), DataError);
  std::stringstream entry("LECINDEX1 K1=1 K2=1 theta=0 items=1 cap=0\n0 | 3-2 |\n");
  EXPECT_THROW(read_lec_index_text(entry), ParseError);
  EXPECT_THROW(load_lec_index("/nonexistent/dgr/index.txt"), DataError);
}

}  // namespace
}  // namespace dgr
