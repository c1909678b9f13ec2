#include "dgr/losses.hpp"

#include <algorithm>
#include <string>

namespace dgr {

template <typename Scalar>
LossResult<Scalar> bpr_loss(const BatchTriples& triples, const Matrix<Scalar>& readout,
                            Index num_users, const InteractionGraph* check) {
  const Index items = readout.rows() - num_users;
  LossResult<Scalar> result{0.0, RowGradients<Scalar>(readout.cols())};
  for (const auto& t : triples) {
    if (t.user < 0 || t.user >= num_users || t.positive < 0 || t.positive >= items ||
        t.negative < 0 || t.negative >= items) {
      throw DataError("BPR triple index out of range");
    }
    if (check && (!check->has_edge(t.user, t.positive) || check->has_edge(t.user, t.negative))) {
      throw DataError("BPR triple (" + std::to_string(t.user) + ", " +
                      std::to_string(t.positive) + ", " + std::to_string(t.negative) +
                      ") violates the positive/negative contract");
    }
    const Index pos_row = num_users + t.positive;
    const Index neg_row = num_users + t.negative;
    const auto eu = readout.row(t.user);
    const auto ei = readout.row(pos_row);
    const auto ej = readout.row(neg_row);
    const double x = static_cast<double>(eu.dot(ei)) - static_cast<double>(eu.dot(ej));
    result.loss -= log_sigmoid(x);
    // d(-log sigmoid(x))/dx = -sigmoid(-x)
    const auto g = static_cast<Scalar>(-sigmoid(-x));
    result.grads.at(t.user) += g * (ei - ej);
    result.grads.at(pos_row) += g * eu;
    result.grads.at(neg_row) -= g * eu;
  }
  return result;
}

template <typename Scalar>
LossResult<Scalar> lec_loss(const std::vector<std::pair<Index, Index>>& positives,
                            const Matrix<Scalar>& readout, const LecIndex& index,
                            const InteractionGraph& train, const LecOptions& options) {
  const Index num_users = train.num_users();
  LossResult<Scalar> result{0.0, RowGradients<Scalar>(readout.cols())};
  for (const auto& [u, i] : positives) {
    if (u < 0 || u >= num_users || i < 0 || i >= index.num_items()) {
      throw DataError("LEC positive index out of range");
    }
    const auto& similar = index.similar[static_cast<std::size_t>(i)];
    const auto& marginal = index.marginal[static_cast<std::size_t>(i)];
    if (similar.empty() || marginal.empty()) continue;

    double scale = 1.0;
    if (options.normalize_pairs) {
      scale = 1.0 / (static_cast<double>(similar.size()) * static_cast<double>(marginal.size()));
    }
    const double similar_weight = scale * static_cast<double>(marginal.size());
    const double marginal_weight = scale * static_cast<double>(similar.size());
    const double user_norm = 1.0 / std::sqrt(static_cast<double>(train.user_degree(u) + 1));
    const auto eu = readout.row(u);

    for (const auto& s : similar) {
      const double omega =
          user_norm / std::sqrt(static_cast<double>(train.item_degree(s.item) + 1));
      const Index row = num_users + s.item;
      const auto es = readout.row(row);
      const double x = static_cast<double>(eu.dot(es));
      result.loss -= similar_weight * omega * log_sigmoid(x);
      const auto g = static_cast<Scalar>(-similar_weight * omega * sigmoid(-x));
      result.grads.at(u) += g * es;
      result.grads.at(row) += g * eu;
    }
    for (const auto& m : marginal) {
      const double omega =
          user_norm / std::sqrt(static_cast<double>(train.item_degree(m.item) + 1));
      const Index row = num_users + m.item;
      const auto em = readout.row(row);
      const double x = static_cast<double>(eu.dot(em));
      result.loss += marginal_weight * omega * log_sigmoid(x);
      const auto g = static_cast<Scalar>(marginal_weight * omega * sigmoid(-x));
      result.grads.at(u) += g * em;
      result.grads.at(row) += g * eu;
    }
  }
  return result;
}

double total_loss(double cf, double lec, double lambda) {
  if (!(lambda >= 0.0)) throw UsageError("lambda must be nonnegative");
  return cf + lambda * lec;
}

template <typename Scalar>
LossResult<Scalar> l2_regularizer(const Matrix<Scalar>& e0, const std::vector<Index>& rows,
                                  double coeff) {
  if (!(coeff >= 0.0)) throw UsageError("L2 coefficient must be nonnegative");
  LossResult<Scalar> result{0.0, RowGradients<Scalar>(e0.cols())};
  if (coeff == 0.0) return result;
  std::vector<Index> distinct(rows);
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  const auto c = static_cast<Scalar>(coeff);
  for (Index r : distinct) {
    if (r < 0 || r >= e0.rows()) throw DataError("L2 row out of range");
    result.loss += 0.5 * coeff * static_cast<double>(e0.row(r).squaredNorm());
    result.grads.at(r) = c * e0.row(r);
  }
  return result;
}

#define DGR_INSTANTIATE(S)                                                                  \
  template LossResult<S> bpr_loss(const BatchTriples&, const Matrix<S>&, Index,             \
                                  const InteractionGraph*);                                 \
  template LossResult<S> lec_loss(const std::vector<std::pair<Index, Index>>&,              \
                                  const Matrix<S>&, const LecIndex&, const InteractionGraph&, \
                                  const LecOptions&);                                       \
  template LossResult<S> l2_regularizer(const Matrix<S>&, const std::vector<Index>&, double);

DGR_INSTANTIATE(float)
DGR_INSTANTIATE(double)

#undef DGR_INSTANTIATE

}  // namespace dgr
