#include "dgr/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <sstream>

#include "dgr/log.hpp"
#include "dgr/oversmooth.hpp"

namespace dgr {

template <typename Scalar>
Index AdamState<Scalar>::apply(Matrix<Scalar>& params, const Matrix<Scalar>& grad, double lr) {
  if (params.rows() != grad.rows() || params.cols() != grad.cols() ||
      first.rows() != params.rows() || first.cols() != params.cols()) {
    throw UsageError("adam: parameter, gradient and state shapes disagree");
  }
  const Scalar b1 = static_cast<Scalar>(kBeta1);
  const Scalar b2 = static_cast<Scalar>(kBeta2);
  const Scalar eps = static_cast<Scalar>(kEpsilon);
  const Scalar step = static_cast<Scalar>(lr);
  Index updated = 0;
  for (Index r = 0; r < params.rows(); ++r) {
    const auto g = grad.row(r);
    if (!(g.array() != Scalar(0)).any()) continue;
    const std::int64_t t = ++steps[static_cast<std::size_t>(r)];
    const Scalar bc1 = static_cast<Scalar>(1.0 - std::pow(kBeta1, static_cast<double>(t)));
    const Scalar bc2 = static_cast<Scalar>(1.0 - std::pow(kBeta2, static_cast<double>(t)));
    // Scalar loop: Eigen's packet sqrt/div differ from std::sqrt by an ulp
    // under some instruction sets.
    for (Index c = 0; c < params.cols(); ++c) {
      Scalar& m = first(r, c);
      Scalar& v = second(r, c);
      m = b1 * m + (Scalar(1) - b1) * g(c);
      v = b2 * v + (Scalar(1) - b2) * (g(c) * g(c));
      params(r, c) -= step * (m / bc1) / (std::sqrt(v / bc2) + eps);
    }
    ++updated;
  }
  return updated;
}

BatchTriples sample_batch(const InteractionGraph& train,
                          const std::vector<std::pair<Index, Index>>& edges, int batch_size,
                          Rng& rng, Index* dropped) {
  if (edges.empty()) throw UsageError("sample_batch: training graph has no edges");
  if (batch_size < 1) throw UsageError("sample_batch: batch_size must be >= 1");
  constexpr int kMaxRejections = 100;
  std::uniform_int_distribution<std::size_t> pick_edge(0, edges.size() - 1);
  std::uniform_int_distribution<Index> pick_item(0, train.num_items() - 1);
  BatchTriples batch;
  batch.reserve(static_cast<std::size_t>(batch_size));
  Index skipped = 0;
  for (int b = 0; b < batch_size; ++b) {
    const auto [u, i] = edges[pick_edge(rng)];
    const auto positives = train.user_items(u);
    bool found = false;
    Index j = 0;
    for (int attempt = 0; attempt <= kMaxRejections; ++attempt) {
      j = pick_item(rng);
      if (!std::binary_search(positives.begin(), positives.end(), j)) {
        found = true;
        break;
      }
    }
    if (!found) {
      ++skipped;
      continue;
    }
    batch.push_back({u, i, j});
  }
  if (skipped > 0) {
    log::warn("sample_batch: skipped " + std::to_string(skipped) +
              " triple(s) whose user has no sampleable negative");
  }
  if (dropped) *dropped = skipped;
  return batch;
}

BatchTriples sample_batch(const InteractionGraph& train, int batch_size, Rng& rng) {
  return sample_batch(train, train.edges(), batch_size, rng);
}

std::string history_csv_header() { return "epoch,loss_cf,loss_lec,recall@20,ndcg@20,row_diff"; }

std::string history_csv_row(const HistoryRow& row) {
  char buffer[256];
  std::snprintf(buffer, sizeof(buffer), "%d,%.17g,%.17g,%.17g,%.17g,%.17g", row.epoch,
                row.loss_cf, row.loss_lec, row.recall, row.ndcg, row.row_diff);
  return buffer;
}

void write_history_csv(std::ostream& out, const std::vector<HistoryRow>& rows) {
  out << history_csv_header() << '\n';
  for (const auto& row : rows) out << history_csv_row(row) << '\n';
}

template <typename Scalar>
Matrix<Scalar> init_embeddings(Index rows, int dim, double stddev, Rng& rng) {
  std::normal_distribution<double> normal(0.0, stddev);
  Matrix<Scalar> e(rows, dim);
  for (Index r = 0; r < rows; ++r) {
    for (Index c = 0; c < dim; ++c) e(r, c) = static_cast<Scalar>(normal(rng));
  }
  return e;
}

PropagationOptions propagation_options(const TrainConfig& config) {
  PropagationOptions options;
  options.layers = config.layers;
  options.rule = config.residual_rule ? LayerRule::kInitialResidual : LayerRule::kDesmoothing;
  const auto alphas = config.effective_alpha();
  GmpSchedule schedule{alphas};
  if (config.residual_rule || !schedule.all_zero()) options.schedule = schedule;
  options.differentiate_steady_state = config.differentiate_steady_state;
  options.threads = config.deterministic ? 1 : std::max(1, config.threads);
  return options;
}

template <typename Scalar>
Trainer<Scalar>::Trainer(TrainConfig config, const InteractionGraph& train,
                         std::optional<LecIndex> lec_index)
    : config_(std::move(config)),
      train_(train),
      adj_(build_normalized_adjacency(train)),
      lec_(std::move(lec_index)),
      edges_(train.edges()),
      rng_(config_.seed) {
  config_.validate();
  if (edges_.empty()) throw DataError("training graph has no edges");
  if (config_.lec_enabled && !lec_) {
    lec_ = build_lec_index(train, LecParams{config_.lec_k1, config_.lec_k2, config_.lec_theta,
                                            config_.lec_candidate_cap});
  }
  if (lec_ && lec_->num_items() != train.num_items()) {
    throw DataError("LEC index item count does not match the training graph");
  }
  e0_ = init_embeddings<Scalar>(train.num_nodes(), config_.dim, config_.init_std, rng_);
  adam_ = AdamState<Scalar>(train.num_nodes(), config_.dim);
  options_ = propagation_options(config_);
}

template <typename Scalar>
EmbeddingState<Scalar> Trainer<Scalar>::propagate() const {
  return forward(adj_, e0_, options_);
}

template <typename Scalar>
StepReport Trainer<Scalar>::compute_gradient(const BatchTriples& batch, Matrix<Scalar>& grad_e0) {
  const bool use_frozen = config_.steady_refresh == SteadyRefresh::kEveryEpoch &&
                          options_.rule == LayerRule::kDesmoothing && options_.schedule &&
                          frozen_steady_;
  const EmbeddingState<Scalar> cache =
      use_frozen ? forward(adj_, e0_, options_, *frozen_steady_) : forward(adj_, e0_, options_);
  const Index nu = train_.num_users();

#ifndef NDEBUG
  const InteractionGraph* check = &train_;
#else
  const InteractionGraph* check = nullptr;
#endif
  const LossResult<Scalar> cf = bpr_loss(batch, cache.readout, nu, check);
  Matrix<Scalar> grad_readout = Matrix<Scalar>::Zero(e0_.rows(), e0_.cols());
  cf.grads.add_into(grad_readout);

  StepReport report;
  report.loss_cf = cf.loss;
  report.triples = static_cast<Index>(batch.size());
  if (config_.lec_enabled && lec_) {
    std::vector<std::pair<Index, Index>> positives;
    positives.reserve(batch.size());
    for (const auto& t : batch) positives.emplace_back(t.user, t.positive);
    const LossResult<Scalar> lec = lec_loss(positives, cache.readout, *lec_, train_,
                                            LecOptions{config_.lec_normalize_pairs});
    report.loss_lec = lec.loss;
    if (config_.lambda != 0.0) lec.grads.add_into(grad_readout, static_cast<Scalar>(config_.lambda));
  }

  grad_e0 = backward(adj_, cache, grad_readout, options_);

  if (config_.l2 != 0.0) {
    std::vector<Index> rows;
    rows.reserve(batch.size() * 3);
    for (const auto& t : batch) {
      rows.push_back(t.user);
      rows.push_back(nu + t.positive);
      rows.push_back(nu + t.negative);
    }
    const LossResult<Scalar> reg = l2_regularizer(e0_, rows, config_.l2);
    report.loss_l2 = reg.loss;
    reg.grads.add_into(grad_e0);
  }
  report.grad_norm = grad_e0.template cast<double>().norm();
  return report;
}

template <typename Scalar>
StepReport Trainer<Scalar>::step(const BatchTriples& batch) {
  Matrix<Scalar> grad_e0;
  StepReport report = compute_gradient(batch, grad_e0);
  ++step_count_;
  const double total = total_loss(report.loss_cf, report.loss_lec, config_.lambda) + report.loss_l2;
  if (!std::isfinite(total) || !std::isfinite(report.grad_norm)) {
    std::ostringstream os;
    os << "non-finite loss at step " << step_count_ << ": loss_cf=" << report.loss_cf
       << " loss_lec=" << report.loss_lec << " loss_l2=" << report.loss_l2
       << " grad_norm=" << report.grad_norm << " max|E0|="
       << e0_.template cast<double>().cwiseAbs().maxCoeff() << " triples=" << report.triples;
    throw NumericError(os.str());
  }
  report.rows_updated = adam_.apply(e0_, grad_e0, config_.lr);
  return report;
}

template <typename Scalar>
void Trainer<Scalar>::refresh_steady_state() {
  frozen_steady_ = compute_oversmoothing_state(adj_, e0_);
}

template <typename Scalar>
std::pair<double, double> Trainer<Scalar>::run_epoch() {
  if (config_.steady_refresh == SteadyRefresh::kEveryEpoch) refresh_steady_state();
  const Index steps =
      (static_cast<Index>(edges_.size()) + config_.batch_size - 1) / config_.batch_size;
  double cf = 0.0;
  double lec = 0.0;
  Index triples = 0;
  for (Index s = 0; s < steps; ++s) {
    const BatchTriples batch = sample_batch(train_, edges_, config_.batch_size, rng_);
    if (batch.empty()) continue;
    const StepReport report = step(batch);
    cf += report.loss_cf;
    lec += report.loss_lec;
    triples += report.triples;
  }
  if (triples == 0) return {0.0, 0.0};
  return {cf / static_cast<double>(triples), lec / static_cast<double>(triples)};
}

template <typename Scalar>
FitResult<Scalar> fit(Trainer<Scalar>& trainer, const InteractionGraph& test,
                      FitProgress progress, const FitHooks& hooks) {
  const TrainConfig& config = trainer.config();
  std::vector<Index> ks = config.eval_ks;
  if (std::find(ks.begin(), ks.end(), Index{20}) == ks.end()) ks.push_back(20);

  FitResult<Scalar> result;
  result.best_e0 = trainer.embeddings();
  result.best_epoch = progress.best_epoch;
  result.best_recall = progress.best_recall;
  int stale = progress.stale_evals;
  std::vector<HistoryRow> history = std::move(progress.history);

  int epoch = progress.next_epoch;
  for (; epoch <= config.epochs; ++epoch) {
    const auto [loss_cf, loss_lec] = trainer.run_epoch();
    ++result.epochs_run;
    bool stop = false;
    if (epoch % config.eval_every == 0 || epoch == config.epochs) {
      const EmbeddingState<Scalar> state = trainer.propagate();
      const MetricsReport metrics = evaluate(state.readout, trainer.train_graph(), test, ks,
                                             config.deterministic ? 1 : config.threads);
      HistoryRow row;
      row.epoch = epoch;
      row.loss_cf = loss_cf;
      row.loss_lec = loss_lec;
      row.recall = metrics.recall_at(20);
      row.ndcg = metrics.ndcg_at(20);
      row.row_diff = config.track_row_diff ? row_diff_auto(state.readout, config.seed).value
                                           : std::numeric_limits<double>::quiet_NaN();
      history.push_back(row);
      const bool improved = row.recall > result.best_recall;
      if (improved) {
        result.best_recall = row.recall;
        result.best_epoch = epoch;
        result.best_e0 = trainer.embeddings();
        stale = 0;
      } else if (++stale >= config.patience) {
        stop = true;
      }
      log::info("epoch " + std::to_string(epoch) + " recall@20=" + std::to_string(row.recall) +
                " ndcg@20=" + std::to_string(row.ndcg));
      if (hooks.on_eval) hooks.on_eval(row, improved);
    }
    if (hooks.on_epoch_end) hooks.on_epoch_end(epoch);
    if (stop) {
      result.early_stopped = true;
      break;
    }
  }
  result.final_e0 = trainer.embeddings();
  if (result.best_recall < 0.0) result.best_recall = 0.0;
  result.history = std::move(history);
  return result;
}

template <typename Scalar>
FitResult<Scalar> fit(const TrainConfig& config, const InteractionGraph& train,
                      const InteractionGraph& test, std::optional<LecIndex> lec_index) {
  Trainer<Scalar> trainer(config, train, std::move(lec_index));
  return fit(trainer, test);
}

#define DGR_INSTANTIATE(S)                                                                  \
  template struct AdamState<S>;                                                             \
  template Matrix<S> init_embeddings<S>(Index, int, double, Rng&);                          \
  template class Trainer<S>;                                                                \
  template FitResult<S> fit(Trainer<S>&, const InteractionGraph&, FitProgress,              \
                            const FitHooks&);                                               \
  template FitResult<S> fit<S>(const TrainConfig&, const InteractionGraph&,                 \
                               const InteractionGraph&, std::optional<LecIndex>);

DGR_INSTANTIATE(float)
DGR_INSTANTIATE(double)

#undef DGR_INSTANTIATE

}  // namespace dgr
