#pragma once

#include <filesystem>
#include <iosfwd>
#include <vector>

#include "dgr/graph.hpp"

namespace dgr {

struct LecParams {
  Index similar_count = 30;   // K1
  Index marginal_count = 50;  // K2
  Index threshold = 50;       // theta; co-occurrence must exceed it
  // Upper bound on (user, item) visits while enumerating one item's
  // second-order neighbors; 0 disables the cap.
  Index candidate_cap = 200000;

  bool operator==(const LecParams&) const = default;
};

struct CoItem {
  Index item = 0;
  Index count = 0;  // number of users linked to both items

  bool operator==(const CoItem&) const = default;
};

// Per-item similar set S(i) and marginal set M(i) mined from item-item
// co-occurrence. Both lists are ordered by count descending, ties by item
// index ascending, and are disjoint.
struct LecIndex {
  LecParams params;
  std::vector<std::vector<CoItem>> similar;
  std::vector<std::vector<CoItem>> marginal;
  // Items whose enumeration hit the candidate cap.
  Index capped_items = 0;

  Index num_items() const { return static_cast<Index>(similar.size()); }
  bool operator==(const LecIndex&) const = default;
};

// Mines the index from the training graph. For each item i, every item j
// sharing at least one user is counted by |N_i intersect N_j|; j survives
// when the count exceeds the threshold. The K1 highest-count survivors form
// S(i) and the K2 lowest-count survivors of the remainder form M(i).
LecIndex build_lec_index(const InteractionGraph& train, const LecParams& params);

// Selection step shared with the test oracle: ranks survivors and splits
// them into (similar, marginal).
void select_similar_and_marginal(std::vector<CoItem> survivors, Index similar_count,
                                 Index marginal_count, std::vector<CoItem>& similar,
                                 std::vector<CoItem>& marginal);

// Text form: header line with K1, K2, theta and item count, then one
// "i | s:count ... | m:count ..." record per item.
void write_lec_index_text(const LecIndex& index, std::ostream& out);
LecIndex read_lec_index_text(std::istream& in);

// Binary form: magic line, key=value header, blank line, then little-endian
// int32 records (n_similar, n_marginal, item/count pairs) per item.
void write_lec_index_binary(const LecIndex& index, std::ostream& out);
LecIndex read_lec_index_binary(std::istream& in);

void save_lec_index(const LecIndex& index, const std::filesystem::path& path, bool binary);
LecIndex load_lec_index(const std::filesystem::path& path);

}  // namespace dgr
