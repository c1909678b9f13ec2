#include "dgr/oversmooth.hpp"

#include <cmath>
#include <random>
#include <string>

#include "dgr/log.hpp"

namespace dgr {

namespace {

template <typename Scalar, typename DegreeFn>
OverSmoothingState<Scalar> state_from_degrees(Index n, Index edges, DegreeFn degree,
                                              const Matrix<Scalar>& e0) {
  if (e0.rows() != n) {
    throw UsageError("steady state: embedding rows " + std::to_string(e0.rows()) +
                     " != nodes " + std::to_string(n));
  }
  OverSmoothingState<Scalar> state;
  state.c = static_cast<double>(2 * edges + n);
  state.weight.resize(n);
  state.s = RowVector<Scalar>::Zero(e0.cols());
  for (Index a = 0; a < n; ++a) {
    const Scalar w = static_cast<Scalar>(std::sqrt(static_cast<double>(degree(a) + 1)));
    state.weight(a) = w;
    state.s.noalias() += w * e0.row(a);
  }
  return state;
}

}  // namespace

template <typename Scalar>
Matrix<Scalar> OverSmoothingState<Scalar>::materialize() const {
  Matrix<Scalar> m(num_nodes(), dim());
  for (Index a = 0; a < num_nodes(); ++a) m.row(a) = point(a);
  return m;
}

template <typename Scalar>
Matrix<double> OverSmoothingState<Scalar>::dense_limit() const {
  const Vector<double> w = weight.template cast<double>();
  return (w * w.transpose()) / c;
}

template <typename Scalar>
OverSmoothingState<Scalar> compute_oversmoothing_state(const InteractionGraph& graph,
                                                       const Matrix<Scalar>& e0) {
  auto state = state_from_degrees<Scalar>(
      graph.num_nodes(), graph.num_edges(),
      [&](Index a) { return graph.node_degree(a); }, e0);
  state.components = graph.connected_components();
  if (state.components > 1) {
    log::warn("graph has " + std::to_string(state.components) +
              " connected components; steady state uses the global formula");
  }
  return state;
}

template <typename Scalar>
OverSmoothingState<Scalar> compute_oversmoothing_state(const NormalizedAdjacency& adj,
                                                       const Matrix<Scalar>& e0) {
  // Every edge appears twice off the diagonal.
  const Index edges = (adj.nnz() - adj.n) / 2;
  return state_from_degrees<Scalar>(
      adj.n, edges, [&](Index a) { return adj.degree[static_cast<std::size_t>(a)]; }, e0);
}

Matrix<double> steady_state_operator(const InteractionGraph& graph) {
  const Index n = graph.num_nodes();
  const double denom =
      static_cast<double>(2 * graph.num_edges() + graph.num_items() + graph.num_users());
  Matrix<double> out(n, n);
  for (Index a = 0; a < n; ++a) {
    for (Index b = 0; b < n; ++b) {
      out(a, b) = std::sqrt(static_cast<double>((graph.node_degree(a) + 1) *
                                                (graph.node_degree(b) + 1))) /
                  denom;
    }
  }
  return out;
}

template <typename Scalar>
Matrix<Scalar> power_iterate_reference(const NormalizedAdjacency& adj,
                                       const Matrix<Scalar>& e0, int k, int threads) {
  if (k < 0) throw UsageError("power iteration count must be nonnegative");
  Matrix<Scalar> current = e0;
  Matrix<Scalar> next;
  for (int step = 0; step < k; ++step) {
    spmm(adj, current, next, threads);
    current.swap(next);
  }
  return current;
}

template <typename Scalar>
double mean_distance_to_steady_state(const Matrix<Scalar>& ek,
                                     const OverSmoothingState<Scalar>& state) {
  if (ek.rows() != state.num_nodes() || ek.cols() != state.dim()) {
    throw UsageError("mean distance: embedding shape does not match steady state");
  }
  if (ek.rows() == 0) return 0.0;
  double total = 0.0;
  for (Index a = 0; a < ek.rows(); ++a) {
    total += static_cast<double>((ek.row(a) - state.point(a)).norm());
  }
  return total / static_cast<double>(ek.rows());
}

template <typename Scalar>
std::vector<double> distance_curve(const NormalizedAdjacency& adj, const Matrix<Scalar>& e0,
                                   const OverSmoothingState<Scalar>& state, int max_k) {
  std::vector<double> curve;
  curve.reserve(static_cast<std::size_t>(std::max(max_k, 0)));
  Matrix<Scalar> current = e0;
  Matrix<Scalar> next;
  for (int k = 1; k <= max_k; ++k) {
    spmm(adj, current, next);
    current.swap(next);
    curve.push_back(mean_distance_to_steady_state(current, state));
  }
  return curve;
}

template <typename Scalar>
double row_diff(const Matrix<Scalar>& e) {
  const Index n = e.rows();
  if (n == 0) return 0.0;
  const Matrix<double> rows = e.template cast<double>();
  double total = 0.0;
  for (Index a = 0; a < n; ++a) {
    double partial = 0.0;
    for (Index b = a + 1; b < n; ++b) partial += (rows.row(a) - rows.row(b)).norm();
    total += partial;
  }
  return 2.0 * total / (static_cast<double>(n) * static_cast<double>(n));
}

template <typename Scalar>
RowDiffResult row_diff_sampled(const Matrix<Scalar>& e, std::int64_t pairs,
                               std::uint64_t seed) {
  RowDiffResult result;
  result.sampled = true;
  result.pairs = pairs;
  if (e.rows() == 0 || pairs <= 0) return result;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<Index> pick(0, e.rows() - 1);
  double mean = 0.0;
  double m2 = 0.0;
  for (std::int64_t k = 0; k < pairs; ++k) {
    const Index a = pick(rng);
    const Index b = pick(rng);
    const double x = static_cast<double>((e.row(a) - e.row(b)).norm());
    const double delta = x - mean;
    mean += delta / static_cast<double>(k + 1);
    m2 += delta * (x - mean);
  }
  result.value = mean;
  if (pairs > 1) {
    const double variance = m2 / static_cast<double>(pairs - 1);
    result.std_error = std::sqrt(variance / static_cast<double>(pairs));
  }
  return result;
}

template <typename Scalar>
RowDiffResult row_diff_auto(const Matrix<Scalar>& e, std::uint64_t seed) {
  if (e.rows() <= kRowDiffExactLimit) {
    RowDiffResult result;
    result.value = row_diff(e);
    result.pairs = e.rows() * e.rows();
    return result;
  }
  return row_diff_sampled(e, kRowDiffDefaultPairs, seed);
}

#define DGR_INSTANTIATE(S)                                                                 \
  template struct OverSmoothingState<S>;                                                   \
  template OverSmoothingState<S> compute_oversmoothing_state(const InteractionGraph&,      \
                                                             const Matrix<S>&);            \
  template OverSmoothingState<S> compute_oversmoothing_state(const NormalizedAdjacency&,   \
                                                             const Matrix<S>&);            \
  template Matrix<S> power_iterate_reference(const NormalizedAdjacency&, const Matrix<S>&, \
                                             int, int);                                    \
  template double mean_distance_to_steady_state(const Matrix<S>&,                          \
                                                const OverSmoothingState<S>&);             \
  template std::vector<double> distance_curve(const NormalizedAdjacency&, const Matrix<S>&, \
                                              const OverSmoothingState<S>&, int);          \
  template double row_diff(const Matrix<S>&);                                              \
  template RowDiffResult row_diff_sampled(const Matrix<S>&, std::int64_t, std::uint64_t);  \
  template RowDiffResult row_diff_auto(const Matrix<S>&, std::uint64_t);

DGR_INSTANTIATE(float)
DGR_INSTANTIATE(double)

#undef DGR_INSTANTIATE

}  // namespace dgr
