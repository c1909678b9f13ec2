#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "dgr/types.hpp"

namespace dgr {

// Bipartite user-item interaction structure with implicit (0/1) feedback.
//
// Both directions are stored as compressed adjacency lists with strictly
// ascending neighbor indices. The object is immutable after construction.
class InteractionGraph {
 public:
  InteractionGraph() = default;

  // Builds from (user, item) pairs. Duplicate pairs collapse to one edge.
  // Throws DataError on out-of-range indices.
  InteractionGraph(Index num_users, Index num_items,
                   std::vector<std::pair<Index, Index>> edges);

  Index num_users() const { return num_users_; }
  Index num_items() const { return num_items_; }
  Index num_edges() const { return static_cast<Index>(user_cols_.size()); }
  Index num_nodes() const { return num_users_ + num_items_; }

  std::span<const Index> user_items(Index u) const {
    return {user_cols_.data() + user_offsets_[u],
            static_cast<std::size_t>(user_offsets_[u + 1] - user_offsets_[u])};
  }
  std::span<const Index> item_users(Index i) const {
    return {item_cols_.data() + item_offsets_[i],
            static_cast<std::size_t>(item_offsets_[i + 1] - item_offsets_[i])};
  }

  Index user_degree(Index u) const { return user_offsets_[u + 1] - user_offsets_[u]; }
  Index item_degree(Index i) const { return item_offsets_[i + 1] - item_offsets_[i]; }

  // Degree of a node in the global indexing (users first, then items).
  Index node_degree(Index a) const {
    return a < num_users_ ? user_degree(a) : item_degree(a - num_users_);
  }

  bool has_edge(Index u, Index i) const;

  // Edges in user-major order: (u, i) with i ascending within each u.
  std::vector<std::pair<Index, Index>> edges() const;

  // Number of connected components of the bipartite graph, counting
  // isolated nodes as their own component.
  Index connected_components() const;

  bool operator==(const InteractionGraph&) const = default;

 private:
  Index num_users_ = 0;
  Index num_items_ = 0;
  std::vector<Index> user_offsets_{0};
  std::vector<Index> user_cols_;
  std::vector<Index> item_offsets_{0};
  std::vector<Index> item_cols_;
};

enum class InputFormat { kAdjacencyList, kPairList };

InputFormat parse_input_format(const std::string& name);

struct LoadReport {
  Index num_users = 0;
  Index num_items = 0;
  Index num_edges = 0;
  Index duplicates_dropped = 0;
  bool users_reindexed = false;
  bool items_reindexed = false;
  Index min_degree = 0;
  Index max_degree = 0;
  double mean_degree = 0.0;
  Index zero_degree_users = 0;
  Index zero_degree_items = 0;

  std::string to_text() const;
};

LoadReport make_load_report(const InteractionGraph& graph);

struct LoadResult {
  InteractionGraph graph;
  LoadReport report;
  // Original id of each compact index.
  std::vector<Index> user_ids;
  std::vector<Index> item_ids;
};

// Parses an interaction file. Ids that already form a contiguous 0-based
// range are kept as-is; otherwise they are compacted in order of first
// appearance. Blank lines and lines starting with '#' are ignored.
LoadResult load_interactions(const std::filesystem::path& path, InputFormat format);
LoadResult parse_interactions(std::istream& in, InputFormat format);

// Writes the graph as a pair list using compact indices.
void save_pair_list(const InteractionGraph& graph, const std::filesystem::path& path);

// Per-user random partition. Each user with degree d keeps round(ratio * d)
// training interactions, and at least one when d >= 1.
std::pair<InteractionGraph, InteractionGraph> split_train_test(
    const InteractionGraph& graph, double ratio, std::uint64_t seed);

// Symmetric normalization D^-1/2 (A + I) D^-1/2 of the bipartite adjacency
// with self-loops, stored as CSR over num_users + num_items nodes. Users
// occupy rows [0, num_users), items follow.
struct NormalizedAdjacency {
  Index n = 0;
  Index num_users = 0;
  std::vector<Index> degree;  // graph degree d_a, without the self-loop
  std::vector<Index> row_offsets;
  std::vector<Index> cols;
  std::vector<double> values;
  std::vector<float> values_f32;

  Index nnz() const { return static_cast<Index>(cols.size()); }

  template <typename Scalar>
  const Scalar* values_as() const {
    if constexpr (std::is_same_v<Scalar, float>) {
      return values_f32.data();
    } else {
      return values.data();
    }
  }

  Matrix<double> to_dense() const;
};

NormalizedAdjacency build_normalized_adjacency(const InteractionGraph& graph);

// out = adj * dense. Rows are split into contiguous blocks across threads;
// each output row depends only on the input, so the result does not depend
// on the thread count.
template <typename Scalar>
void spmm(const NormalizedAdjacency& adj, const Matrix<Scalar>& dense,
          Matrix<Scalar>& out, int threads = 1);

template <typename Scalar>
Matrix<Scalar> spmm(const NormalizedAdjacency& adj, const Matrix<Scalar>& dense,
                    int threads = 1) {
  Matrix<Scalar> out;
  spmm(adj, dense, out, threads);
  return out;
}

// Thread cap from the DGR_THREADS environment variable (default 1).
int default_thread_count();

}  // namespace dgr
