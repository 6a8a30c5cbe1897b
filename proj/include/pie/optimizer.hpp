#pragma once

#include <Eigen/Core>
#include <cmath>
#include <stdexcept>

#include "pie/embedding_table.hpp"
#include "pie/scoring.hpp"

namespace pie {

enum class OptimizerKind { kAdagrad, kSgd };

inline OptimizerKind optimizer_from_name(const std::string& name) {
  if (name == "adagrad") return OptimizerKind::kAdagrad;
  if (name == "sgd") return OptimizerKind::kSgd;
  throw std::runtime_error("unknown optimizer: " + name);
}

// Row-sparse Adagrad/SGD over a scoring model's parameters. Gradient
// buffers are double; parameters stay in the model's scalar type.
template <typename Scalar>
class KgeOptimizer {
 public:
  KgeOptimizer(OptimizerKind kind, double learning_rate, ScoringModel<Scalar>& m)
      : kind_(kind), lr_(learning_rate) {
    if (lr_ <= 0) throw std::runtime_error("learning_rate must be > 0");
    if (kind_ == OptimizerKind::kAdagrad) {
      entity_state_ = RowMatrix<double>::Zero(m.entities.rows().rows(),
                                              m.entities.rows().cols());
      relation_state_ = RowMatrix<double>::Zero(m.relations.rows(),
                                                m.relations.cols());
      if (m.entities.low_rank_kind()) {
        mix_state_ = RowMatrix<double>::Zero(m.entities.mix().rows(),
                                             m.entities.mix().cols());
      }
    }
  }

  // Applies minimizing updates. Each touched row is owned by exactly one
  // applier at a time (single-writer contract).
  void apply(ScoringModel<Scalar>& m, const ScoreGradients& g) {
    for (const auto& [e, grad] : g.entity_rows) {
      apply_row(m.entities.rows(), entity_state_, static_cast<Eigen::Index>(e),
                grad);
    }
    for (const auto& [r, grad] : g.relation_rows) {
      apply_row(m.relations, relation_state_, static_cast<Eigen::Index>(r),
                grad);
    }
    if (m.entities.low_rank_kind() && g.mix.size() > 0) {
      apply_dense(m.entities.mix(), mix_state_, g.mix);
    }
  }

 private:
  static constexpr double kEps = 1e-10;

  void apply_row(RowMatrix<Scalar>& params, RowMatrix<double>& state,
                 Eigen::Index row, const Eigen::RowVectorXd& grad) {
    if (kind_ == OptimizerKind::kSgd) {
      for (Eigen::Index j = 0; j < grad.size(); ++j) {
        params(row, j) =
            static_cast<Scalar>(double(params(row, j)) - lr_ * grad[j]);
      }
      return;
    }
    for (Eigen::Index j = 0; j < grad.size(); ++j) {
      state(row, j) += grad[j] * grad[j];
      params(row, j) = static_cast<Scalar>(
          double(params(row, j)) -
          lr_ * grad[j] / (std::sqrt(state(row, j)) + kEps));
    }
  }

  void apply_dense(RowMatrix<Scalar>& params, RowMatrix<double>& state,
                   const RowMatrix<double>& grad) {
    if (kind_ == OptimizerKind::kSgd) {
      params -= (lr_ * grad).cast<Scalar>();
      return;
    }
    state.array() += grad.array().square();
    params.array() -=
        (lr_ * grad.array() / (state.array().sqrt() + kEps)).template cast<Scalar>();
  }

  OptimizerKind kind_;
  double lr_;
  RowMatrix<double> entity_state_;
  RowMatrix<double> relation_state_;
  RowMatrix<double> mix_state_;
};

// Dense Adagrad/SGD used by the typing network (all parameters update every
// step).
class DenseOptimizer {
 public:
  DenseOptimizer(OptimizerKind kind, double learning_rate)
      : kind_(kind), lr_(learning_rate) {
    if (lr_ <= 0) throw std::runtime_error("learning_rate must be > 0");
  }

  template <typename Scalar>
  void step(RowMatrix<Scalar>& param, const RowMatrix<double>& grad,
            std::size_t slot) {
    if (kind_ == OptimizerKind::kSgd) {
      param.array() -= (lr_ * grad.array()).template cast<Scalar>();
      return;
    }
    if (slot >= states_.size()) states_.resize(slot + 1);
    auto& st = states_[slot];
    if (st.size() == 0) st = RowMatrix<double>::Zero(grad.rows(), grad.cols());
    st.array() += grad.array().square();
    param.array() -=
        (lr_ * grad.array() / (st.array().sqrt() + kEps)).template cast<Scalar>();
  }

 private:
  static constexpr double kEps = 1e-10;
  OptimizerKind kind_;
  double lr_;
  std::vector<RowMatrix<double>> states_;
};

}  // namespace pie
