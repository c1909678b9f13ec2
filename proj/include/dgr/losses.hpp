#pragma once

#include <cmath>
#include <unordered_map>
#include <utility>
#include <vector>

#include "dgr/graph.hpp"
#include "dgr/lec_index.hpp"
#include "dgr/types.hpp"

namespace dgr {

// log(sigmoid(x)) without overflow for large |x|.
inline double log_sigmoid(double x) {
  return x < 0.0 ? x - std::log1p(std::exp(x)) : -std::log1p(std::exp(-x));
}

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// Sparse gradient over rows of an n x dim table. Rows keep insertion order,
// so accumulation into a dense table is deterministic.
template <typename Scalar>
class RowGradients {
 public:
  explicit RowGradients(Index dim = 0) : dim_(dim) {}

  Index dim() const { return dim_; }
  Index size() const { return static_cast<Index>(rows_.size()); }
  bool empty() const { return rows_.empty(); }
  const std::vector<Index>& rows() const { return rows_; }

  // Mutable view of the gradient for `row`, created as zero on first use.
  Eigen::Map<RowVector<Scalar>> at(Index row) {
    auto [it, inserted] = slot_.try_emplace(row, size());
    if (inserted) {
      rows_.push_back(row);
      values_.resize(values_.size() + static_cast<std::size_t>(dim_), Scalar(0));
    }
    return Eigen::Map<RowVector<Scalar>>(values_.data() + it->second * dim_, dim_);
  }

  // Gradient of the k-th inserted row.
  Eigen::Map<const RowVector<Scalar>> value(Index k) const {
    return Eigen::Map<const RowVector<Scalar>>(values_.data() + k * dim_, dim_);
  }

  bool contains(Index row) const { return slot_.contains(row); }

  // dense.row(r) += scale * g_r for every stored row.
  void add_into(Matrix<Scalar>& dense, Scalar scale = Scalar(1)) const {
    for (Index k = 0; k < size(); ++k) {
      dense.row(rows_[static_cast<std::size_t>(k)]) += scale * value(k);
    }
  }

  Matrix<Scalar> to_dense(Index rows) const {
    Matrix<Scalar> dense = Matrix<Scalar>::Zero(rows, dim_);
    add_into(dense);
    return dense;
  }

 private:
  Index dim_;
  std::unordered_map<Index, Index> slot_;
  std::vector<Index> rows_;
  std::vector<Scalar> values_;
};

template <typename Scalar>
struct LossResult {
  double loss = 0.0;
  RowGradients<Scalar> grads;
};

struct Triple {
  Index user = 0;
  Index positive = 0;  // item index, not node index
  Index negative = 0;

  bool operator==(const Triple&) const = default;
};

using BatchTriples = std::vector<Triple>;

// Sum over triples of -log sigmoid(y_ui - y_uj) with y = readout inner
// products. Gradients are with respect to readout rows (node indexing).
// When `check` is given, every triple must have a training positive and a
// non-interacted negative, else DataError.
template <typename Scalar>
LossResult<Scalar> bpr_loss(const BatchTriples& triples, const Matrix<Scalar>& readout,
                            Index num_users, const InteractionGraph* check = nullptr);

struct LecOptions {
  // Divide each positive's double sum by |S(i)| * |M(i)|.
  bool normalize_pairs = false;
};

// Sum over positives (u, i), s in S(i), m in M(i) of
//   -(w_us log sigmoid(e_u . e_s) - w_um log sigmoid(e_u . e_m)),
// w_ux = 1 / sqrt((d_u + 1)(d_x + 1)) with training-graph degrees.
// The double sum is evaluated in factored form: each similar term carries
// weight |M(i)| and each marginal term |S(i)|.
template <typename Scalar>
LossResult<Scalar> lec_loss(const std::vector<std::pair<Index, Index>>& positives,
                            const Matrix<Scalar>& readout, const LecIndex& index,
                            const InteractionGraph& train, const LecOptions& options = {});

// cf + lambda * lec
double total_loss(double cf, double lec, double lambda);

// coeff * 0.5 * sum ||E0_r||^2 over the distinct rows in `rows`.
template <typename Scalar>
LossResult<Scalar> l2_regularizer(const Matrix<Scalar>& e0, const std::vector<Index>& rows,
                                  double coeff);

}  // namespace dgr
