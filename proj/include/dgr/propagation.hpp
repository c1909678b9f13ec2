#pragma once

#include <optional>
#include <vector>

#include "dgr/graph.hpp"
#include "dgr/oversmooth.hpp"
#include "dgr/types.hpp"

namespace dgr {

// Per-layer strength of the push away from the steady state, alpha_k >= 0.
struct GmpSchedule {
  std::vector<double> alpha;

  static GmpSchedule zeros(int layers) {
    return {std::vector<double>(static_cast<std::size_t>(layers), 0.0)};
  }
  int layers() const { return static_cast<int>(alpha.size()); }
  bool all_zero() const;
  // Throws UsageError unless |alpha| == layers and every entry is finite and
  // nonnegative.
  void validate(int layers) const;
};

enum class LayerRule {
  // e = (1 + a) * A e_prev - a * m; a = 0 is plain LightGCN propagation.
  kDesmoothing,
  // e = A e_prev + a * (e0 - A e_prev), the initial-residual comparison rule.
  kInitialResidual,
};

struct PropagationOptions {
  int layers = 3;
  // Absent means plain propagation.
  std::optional<GmpSchedule> schedule;
  LayerRule rule = LayerRule::kDesmoothing;
  // Include the dependence of the steady state on e0 in the gradient.
  bool differentiate_steady_state = false;
  int threads = 1;

  std::vector<double> layer_alphas() const;
  void validate() const;
};

template <typename Scalar>
struct EmbeddingState {
  std::vector<Matrix<Scalar>> layers;  // E^(0) .. E^(K)
  Matrix<Scalar> readout;              // mean of all layers
  // Steady state used by the desmoothing layers; empty for plain runs.
  std::optional<OverSmoothingState<Scalar>> steady;
  std::vector<double> alphas;
  LayerRule rule = LayerRule::kDesmoothing;

  int num_layers() const { return static_cast<int>(layers.size()) - 1; }
};

// out = (1 + alpha) * adj * prev - alpha * M
template <typename Scalar>
void gmp_step(const NormalizedAdjacency& adj, const Matrix<Scalar>& prev,
              const OverSmoothingState<Scalar>& state, double alpha, Matrix<Scalar>& out,
              int threads = 1);

template <typename Scalar>
Matrix<Scalar> gmp_step(const NormalizedAdjacency& adj, const Matrix<Scalar>& prev,
                        const OverSmoothingState<Scalar>& state, double alpha) {
  Matrix<Scalar> out;
  gmp_step(adj, prev, state, alpha, out);
  return out;
}

// out = adj * prev + alpha * (e0 - adj * prev), alpha in [0, 1]
template <typename Scalar>
void residual_step(const NormalizedAdjacency& adj, const Matrix<Scalar>& prev,
                   const Matrix<Scalar>& e0, double alpha, Matrix<Scalar>& out,
                   int threads = 1);

template <typename Scalar>
Matrix<Scalar> residual_step(const NormalizedAdjacency& adj, const Matrix<Scalar>& prev,
                             const Matrix<Scalar>& e0, double alpha) {
  Matrix<Scalar> out;
  residual_step(adj, prev, e0, alpha, out);
  return out;
}

// Runs all layers. The steady state is recomputed from e0 when any desmoothing
// layer is active.
template <typename Scalar>
EmbeddingState<Scalar> forward(const NormalizedAdjacency& adj, const Matrix<Scalar>& e0,
                               const PropagationOptions& options);

// Same, with a caller-supplied (frozen) steady state.
template <typename Scalar>
EmbeddingState<Scalar> forward(const NormalizedAdjacency& adj, const Matrix<Scalar>& e0,
                               const PropagationOptions& options,
                               const OverSmoothingState<Scalar>& steady);

// Gradient with respect to e0 given the gradient with respect to the readout.
// Throws UsageError if the cache does not match the options.
template <typename Scalar>
Matrix<Scalar> backward(const NormalizedAdjacency& adj, const EmbeddingState<Scalar>& cache,
                        const Matrix<Scalar>& grad_readout,
                        const PropagationOptions& options);

// <readout_u, readout_{num_users + i}>
template <typename Scalar>
Scalar predict(const Matrix<Scalar>& readout, Index num_users, Index u, Index i);

}  // namespace dgr
