#pragma once

#include <cstdint>
#include <vector>

#include "dgr/graph.hpp"
#include "dgr/types.hpp"

namespace dgr {

// Limit of repeated propagation, kept in rank-1 form.
//
// With w_a = sqrt(d_a + 1) and c = 2|E| + n, the infinite power of the
// normalized adjacency is w w^T / c, so the steady-state row of node a is
// m(a) = (w_a / c) * s with s = sum_a w_a E0_a. No n x n or n x T matrix is
// formed.
template <typename Scalar>
struct OverSmoothingState {
  double c = 0.0;
  Vector<Scalar> weight;  // w_a
  RowVector<Scalar> s;
  // Connected components of the source graph, or -1 when unknown.
  Index components = -1;

  Index num_nodes() const { return weight.size(); }
  Index dim() const { return s.size(); }

  Scalar coefficient(Index a) const { return weight(a) / static_cast<Scalar>(c); }
  RowVector<Scalar> point(Index a) const { return coefficient(a) * s; }

  // Stacked steady-state rows M (n x T). For tests and small graphs.
  Matrix<Scalar> materialize() const;

  // (1/c) w w^T (n x n). For tests and small graphs.
  Matrix<double> dense_limit() const;
};

// Computes the state from node degrees. Emits a warning with the component
// count when the graph is disconnected; the global formula is still used.
template <typename Scalar>
OverSmoothingState<Scalar> compute_oversmoothing_state(const InteractionGraph& graph,
                                                       const Matrix<Scalar>& e0);

// Same, reading degrees from the adjacency. Connectivity is not checked.
template <typename Scalar>
OverSmoothingState<Scalar> compute_oversmoothing_state(const NormalizedAdjacency& adj,
                                                       const Matrix<Scalar>& e0);

// Entry (a, b) = sqrt((d_a+1)(d_b+1)) / (2|E| + N_u + N_i), written out
// per entry from the degree formula.
Matrix<double> steady_state_operator(const InteractionGraph& graph);

// adj^k * e0 by k repeated products; k = 0 returns e0.
template <typename Scalar>
Matrix<Scalar> power_iterate_reference(const NormalizedAdjacency& adj,
                                       const Matrix<Scalar>& e0, int k, int threads = 1);

// (1/n) sum_a ||ek_a - m(a)||_2
template <typename Scalar>
double mean_distance_to_steady_state(const Matrix<Scalar>& ek,
                                     const OverSmoothingState<Scalar>& state);

// Distances for k = 1..max_k of plain propagation from e0.
template <typename Scalar>
std::vector<double> distance_curve(const NormalizedAdjacency& adj, const Matrix<Scalar>& e0,
                                   const OverSmoothingState<Scalar>& state, int max_k = 20);

struct RowDiffResult {
  double value = 0.0;
  double std_error = 0.0;  // zero in exact mode
  bool sampled = false;
  std::int64_t pairs = 0;
};

// (1/n^2) sum_{a,b} ||E_a - E_b||_2 over all ordered pairs, a == b included.
template <typename Scalar>
double row_diff(const Matrix<Scalar>& e);

// Monte-Carlo estimate over uniformly drawn ordered pairs (a == b allowed,
// matching the exact definition).
template <typename Scalar>
RowDiffResult row_diff_sampled(const Matrix<Scalar>& e, std::int64_t pairs,
                               std::uint64_t seed);

inline constexpr Index kRowDiffExactLimit = 20000;
inline constexpr std::int64_t kRowDiffDefaultPairs = 1000000;

// Exact up to kRowDiffExactLimit rows, sampled above.
template <typename Scalar>
RowDiffResult row_diff_auto(const Matrix<Scalar>& e, std::uint64_t seed = 0);

}  // namespace dgr
