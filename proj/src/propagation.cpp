#include "dgr/propagation.hpp"

#include <cmath>
#include <string>

namespace dgr {

bool GmpSchedule::all_zero() const {
  for (double a : alpha) {
    if (a != 0.0) return false;
  }
  return true;
}

void GmpSchedule::validate(int layers) const {
  if (static_cast<int>(alpha.size()) != layers) {
    throw UsageError("alpha schedule has " + std::to_string(alpha.size()) +
                     " entries for " + std::to_string(layers) + " layers");
  }
  for (double a : alpha) {
    if (!std::isfinite(a) || a < 0.0) {
      throw UsageError("alpha must be finite and nonnegative, got " + std::to_string(a));
    }
  }
}

std::vector<double> PropagationOptions::layer_alphas() const {
  if (schedule) return schedule->alpha;
  return std::vector<double>(static_cast<std::size_t>(layers), 0.0);
}

void PropagationOptions::validate() const {
  if (layers < 1) throw UsageError("layer count must be at least 1");
  if (schedule) schedule->validate(layers);
  if (rule == LayerRule::kInitialResidual) {
    for (double a : layer_alphas()) {
      if (a > 1.0) throw UsageError("residual alpha must lie in [0, 1]");
    }
  }
}

template <typename Scalar>
void gmp_step(const NormalizedAdjacency& adj, const Matrix<Scalar>& prev,
              const OverSmoothingState<Scalar>& state, double alpha, Matrix<Scalar>& out,
              int threads) {
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) {
    throw UsageError("gmp_step: alpha must be finite and nonnegative");
  }
  spmm(adj, prev, out, threads);
  if (alpha == 0.0) return;
  if (state.num_nodes() != adj.n || state.dim() != prev.cols()) {
    throw UsageError("gmp_step: steady state shape mismatch");
  }
  const auto scale = static_cast<Scalar>(1.0 + alpha);
  const auto a = static_cast<Scalar>(alpha);
  for (Index row = 0; row < out.rows(); ++row) {
    out.row(row) = scale * out.row(row) - (a * state.coefficient(row)) * state.s;
  }
}

template <typename Scalar>
void residual_step(const NormalizedAdjacency& adj, const Matrix<Scalar>& prev,
                   const Matrix<Scalar>& e0, double alpha, Matrix<Scalar>& out,
                   int threads) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw UsageError("residual_step: alpha must lie in [0, 1]");
  }
  if (e0.rows() != prev.rows() || e0.cols() != prev.cols()) {
    throw UsageError("residual_step: e0 shape mismatch");
  }
  spmm(adj, prev, out, threads);
  if (alpha == 0.0) return;
  if (alpha == 1.0) {
    out = e0;
    return;
  }
  const auto a = static_cast<Scalar>(alpha);
  out = (Scalar(1) - a) * out + a * e0;
}

namespace {

template <typename Scalar>
EmbeddingState<Scalar> run_layers(const NormalizedAdjacency& adj, const Matrix<Scalar>& e0,
                                  const PropagationOptions& options,
                                  std::optional<OverSmoothingState<Scalar>> steady) {
  options.validate();
  if (e0.rows() != adj.n) {
    throw UsageError("forward: embedding rows " + std::to_string(e0.rows()) +
                     " != nodes " + std::to_string(adj.n));
  }
  EmbeddingState<Scalar> state;
  state.alphas = options.layer_alphas();
  state.rule = options.rule;
  state.layers.reserve(static_cast<std::size_t>(options.layers + 1));
  state.layers.push_back(e0);
  for (int k = 1; k <= options.layers; ++k) {
    const double alpha = state.alphas[static_cast<std::size_t>(k - 1)];
    Matrix<Scalar> next;
    if (options.rule == LayerRule::kInitialResidual) {
      residual_step(adj, state.layers.back(), e0, alpha, next, options.threads);
    } else if (alpha == 0.0) {
      spmm(adj, state.layers.back(), next, options.threads);
    } else {
      gmp_step(adj, state.layers.back(), *steady, alpha, next, options.threads);
    }
    state.layers.push_back(std::move(next));
  }
  state.readout = state.layers[0];
  for (int k = 1; k <= options.layers; ++k) state.readout += state.layers[static_cast<std::size_t>(k)];
  state.readout /= static_cast<Scalar>(options.layers + 1);
  state.steady = std::move(steady);
  return state;
}

bool needs_steady_state(const PropagationOptions& options) {
  return options.rule == LayerRule::kDesmoothing && options.schedule &&
         !options.schedule->all_zero();
}

}  // namespace

template <typename Scalar>
EmbeddingState<Scalar> forward(const NormalizedAdjacency& adj, const Matrix<Scalar>& e0,
                               const PropagationOptions& options) {
  std::optional<OverSmoothingState<Scalar>> steady;
  if (needs_steady_state(options)) steady = compute_oversmoothing_state(adj, e0);
  return run_layers(adj, e0, options, std::move(steady));
}

template <typename Scalar>
EmbeddingState<Scalar> forward(const NormalizedAdjacency& adj, const Matrix<Scalar>& e0,
                               const PropagationOptions& options,
                               const OverSmoothingState<Scalar>& steady) {
  return run_layers(adj, e0, options, std::optional<OverSmoothingState<Scalar>>(steady));
}

template <typename Scalar>
Matrix<Scalar> backward(const NormalizedAdjacency& adj, const EmbeddingState<Scalar>& cache,
                        const Matrix<Scalar>& grad_readout,
                        const PropagationOptions& options) {
  options.validate();
  const int layers = options.layers;
  if (cache.num_layers() != layers || cache.alphas != options.layer_alphas() ||
      cache.rule != options.rule) {
    throw UsageError("backward: cache does not match propagation options");
  }
  if (grad_readout.rows() != adj.n || grad_readout.cols() != cache.readout.cols()) {
    throw UsageError("backward: gradient shape mismatch");
  }
  const bool coupled = options.differentiate_steady_state && needs_steady_state(options);
  if (coupled && !cache.steady) {
    throw UsageError("backward: cache lacks the steady state");
  }

  const Matrix<Scalar> share = grad_readout / static_cast<Scalar>(layers + 1);
  Matrix<Scalar> grad = share;  // gradient w.r.t. E^(K)
  Matrix<Scalar> upstream;
  Matrix<Scalar> into_e0;  // direct e0 terms from residual layers
  RowVector<Scalar> coupling_row;  // -sum_k a_k (w^T g_k) / c
  if (coupled) coupling_row = RowVector<Scalar>::Zero(grad.cols());

  for (int k = layers; k >= 1; --k) {
    const double alpha = cache.alphas[static_cast<std::size_t>(k - 1)];
    spmm(adj, grad, upstream, options.threads);  // adjacency is symmetric
    if (options.rule == LayerRule::kInitialResidual) {
      if (alpha != 0.0) {
        const auto a = static_cast<Scalar>(alpha);
        if (into_e0.size() == 0) into_e0 = Matrix<Scalar>::Zero(grad.rows(), grad.cols());
        into_e0 += a * grad;
        upstream *= (Scalar(1) - a);
      }
    } else if (alpha != 0.0) {
      if (coupled) {
        // d(-a M)/d e0 applied to g_k: -a * w (w^T g_k) / c
        coupling_row.noalias() -=
            static_cast<Scalar>(alpha / cache.steady->c) *
            (cache.steady->weight.transpose() * grad);
      }
      upstream *= static_cast<Scalar>(1.0 + alpha);
    }
    grad = upstream + share;
  }
  if (into_e0.size() != 0) grad += into_e0;
  if (coupled) {
    grad.noalias() += cache.steady->weight * coupling_row;
  }
  return grad;
}

template <typename Scalar>
Scalar predict(const Matrix<Scalar>& readout, Index num_users, Index u, Index i) {
  if (u < 0 || u >= num_users || i < 0 || num_users + i >= readout.rows()) {
    throw UsageError("predict: index out of range (u=" + std::to_string(u) +
                     ", i=" + std::to_string(i) + ")");
  }
  return readout.row(u).dot(readout.row(num_users + i));
}

#define DGR_INSTANTIATE(S)                                                                \
  template void gmp_step(const NormalizedAdjacency&, const Matrix<S>&,                    \
                         const OverSmoothingState<S>&, double, Matrix<S>&, int);          \
  template void residual_step(const NormalizedAdjacency&, const Matrix<S>&,               \
                              const Matrix<S>&, double, Matrix<S>&, int);                 \
  template EmbeddingState<S> forward(const NormalizedAdjacency&, const Matrix<S>&,        \
                                     const PropagationOptions&);                          \
  template EmbeddingState<S> forward(const NormalizedAdjacency&, const Matrix<S>&,        \
                                     const PropagationOptions&,                           \
                                     const OverSmoothingState<S>&);                       \
  template Matrix<S> backward(const NormalizedAdjacency&, const EmbeddingState<S>&,       \
                              const Matrix<S>&, const PropagationOptions&);               \
  template S predict(const Matrix<S>&, Index, Index, Index);

DGR_INSTANTIATE(float)
DGR_INSTANTIATE(double)

#undef DGR_INSTANTIATE

}  // namespace dgr
