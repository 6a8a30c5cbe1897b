#pragma once

#include <Eigen/Core>
#include <cmath>
#include <stdexcept>

namespace pie {

namespace detail {

// log(sigmoid(x)) without overflow.
inline double log_sigmoid(double x) {
  return x >= 0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x));
}

inline double sigmoid(double x) {
  return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

}  // namespace detail

struct SelfAdversarialLoss {
  double loss = 0.0;
  double d_pos = 0.0;         // dloss/dpos_score
  Eigen::VectorXd d_neg;      // dloss/dneg_scores
};

// loss = -log sigmoid(pos) - sum_i w_i log sigmoid(-neg_i) with
// w_i = softmax(alpha * neg_i) treated as constants (no gradient flows
// through the weights). Scores are expected to already carry the margin
// offset of the scoring model.
inline SelfAdversarialLoss self_adversarial_loss(
    double pos_score, const Eigen::VectorXd& neg_scores, double alpha) {
  if (neg_scores.size() == 0) {
    throw std::runtime_error("self_adversarial_loss: no negative scores");
  }
  if (!std::isfinite(pos_score) || !neg_scores.allFinite()) {
    throw std::runtime_error("self_adversarial_loss: non-finite score");
  }
  SelfAdversarialLoss out;
  out.loss = -detail::log_sigmoid(pos_score);
  out.d_pos = -detail::sigmoid(-pos_score);

  const Eigen::Index n = neg_scores.size();
  Eigen::VectorXd w = alpha * neg_scores;
  const double mx = w.maxCoeff();
  w = (w.array() - mx).exp();
  w /= w.sum();

  out.d_neg.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    out.loss -= w[i] * detail::log_sigmoid(-neg_scores[i]);
    out.d_neg[i] = w[i] * detail::sigmoid(neg_scores[i]);
  }
  return out;
}

}  // namespace pie
