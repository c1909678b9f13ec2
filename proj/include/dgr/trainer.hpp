#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "dgr/graph.hpp"
#include "dgr/lec_index.hpp"
#include "dgr/losses.hpp"
#include "dgr/metrics.hpp"
#include "dgr/propagation.hpp"
#include "dgr/train_config.hpp"

namespace dgr {

using Rng = std::mt19937_64;

// Adam over an embedding table with one step counter per row: a row's
// moments and bias correction advance only when that row is updated.
template <typename Scalar>
struct AdamState {
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEpsilon = 1e-8;

  Matrix<Scalar> first;
  Matrix<Scalar> second;
  std::vector<std::int64_t> steps;

  AdamState() = default;
  AdamState(Index rows, Index dim)
      : first(Matrix<Scalar>::Zero(rows, dim)),
        second(Matrix<Scalar>::Zero(rows, dim)),
        steps(static_cast<std::size_t>(rows), 0) {}

  // Updates only rows whose gradient has a nonzero entry. Returns the number
  // of rows updated.
  Index apply(Matrix<Scalar>& params, const Matrix<Scalar>& grad, double lr);
};

// Draws `batch_size` (u, i, j) triples: (u, i) uniform over training edges,
// j uniform over items with rejection of u's positives. A draw that needs
// more than 100 rejections is dropped with a warning.
BatchTriples sample_batch(const InteractionGraph& train,
                          const std::vector<std::pair<Index, Index>>& edges,
                          int batch_size, Rng& rng, Index* dropped = nullptr);

BatchTriples sample_batch(const InteractionGraph& train, int batch_size, Rng& rng);

struct StepReport {
  double loss_cf = 0.0;   // batch sum
  double loss_lec = 0.0;  // batch sum, before lambda
  double loss_l2 = 0.0;
  double grad_norm = 0.0;
  Index triples = 0;
  Index rows_updated = 0;
};

struct HistoryRow {
  int epoch = 0;
  double loss_cf = 0.0;   // mean per triple over the epoch
  double loss_lec = 0.0;  // mean per triple over the epoch
  double recall = 0.0;    // Recall@20
  double ndcg = 0.0;      // NDCG@20
  double row_diff = 0.0;  // NaN when not tracked

  bool operator==(const HistoryRow&) const = default;
};

std::string history_csv_header();
std::string history_csv_row(const HistoryRow& row);
void write_history_csv(std::ostream& out, const std::vector<HistoryRow>& rows);

template <typename Scalar>
Matrix<Scalar> init_embeddings(Index rows, int dim, double stddev, Rng& rng);

PropagationOptions propagation_options(const TrainConfig& config);

// One model plus its optimizer, bound to a training graph.
template <typename Scalar>
class Trainer {
 public:
  // `lec_index` is required when config.lec_enabled; built here when absent.
  Trainer(TrainConfig config, const InteractionGraph& train,
          std::optional<LecIndex> lec_index = std::nullopt);

  const TrainConfig& config() const { return config_; }
  const NormalizedAdjacency& adjacency() const { return adj_; }
  const InteractionGraph& train_graph() const { return train_; }
  const std::optional<LecIndex>& lec_index() const { return lec_; }

  Matrix<Scalar>& embeddings() { return e0_; }
  const Matrix<Scalar>& embeddings() const { return e0_; }
  AdamState<Scalar>& optimizer() { return adam_; }
  Rng& rng() { return rng_; }

  // Forward with the current embeddings (desmoothing applied as in training).
  EmbeddingState<Scalar> propagate() const;

  // Computes losses and the gradient with respect to e0 without updating.
  StepReport compute_gradient(const BatchTriples& batch, Matrix<Scalar>& grad_e0);

  // Full step: forward, BPR + lambda * LEC on the readout, backward, L2 on
  // the batch's e0 rows, sparse Adam update. Throws NumericError on a
  // non-finite loss.
  StepReport step(const BatchTriples& batch);

  // ceil(edges / batch_size) sampled steps. Returns per-triple mean losses.
  std::pair<double, double> run_epoch();

  // Refreshes the cached steady state (per-epoch refresh mode).
  void refresh_steady_state();

 private:
  TrainConfig config_;
  const InteractionGraph& train_;
  NormalizedAdjacency adj_;
  std::optional<LecIndex> lec_;
  std::vector<std::pair<Index, Index>> edges_;
  Matrix<Scalar> e0_;
  AdamState<Scalar> adam_;
  Rng rng_;
  PropagationOptions options_;
  std::optional<OverSmoothingState<Scalar>> frozen_steady_;
  std::int64_t step_count_ = 0;
};

struct FitProgress {
  int next_epoch = 1;
  double best_recall = -1.0;
  int best_epoch = 0;
  int stale_evals = 0;
  std::vector<HistoryRow> history;
};

template <typename Scalar>
struct FitResult {
  Matrix<Scalar> final_e0;
  Matrix<Scalar> best_e0;
  int best_epoch = 0;
  double best_recall = 0.0;
  int epochs_run = 0;
  bool early_stopped = false;
  std::vector<HistoryRow> history;
};

struct FitHooks {
  // Called after every evaluation row is appended; `improved` marks a new
  // best Recall@20.
  std::function<void(const HistoryRow&, bool improved)> on_eval;
  // Called at the end of every epoch with the epoch number.
  std::function<void(int)> on_epoch_end;
};

// Trains from scratch (or continues `trainer`'s current state when
// `progress` is given) and evaluates every eval_every epochs on `test`.
template <typename Scalar>
FitResult<Scalar> fit(Trainer<Scalar>& trainer, const InteractionGraph& test,
                      FitProgress progress = {}, const FitHooks& hooks = {});

// Convenience: builds a trainer and runs fit.
template <typename Scalar>
FitResult<Scalar> fit(const TrainConfig& config, const InteractionGraph& train,
                      const InteractionGraph& test,
                      std::optional<LecIndex> lec_index = std::nullopt);

}  // namespace dgr
