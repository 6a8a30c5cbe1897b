#pragma once

#include <Eigen/Core>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "pie/embedding_table.hpp"
#include "pie/loss.hpp"
#include "pie/rng.hpp"
#include "pie/subgraph.hpp"

namespace pie {

// Alternate relational message passing over a relational subgraph.
//
// Edge states start as a learned embedding of the edge's directed relation
// type (the one-hot input factored through a 2|R| x h table). Each round
// sums edge states into node messages and, between rounds, refreshes every
// edge state from [m_src, m_dst, s_e] through a learned affine map + ReLU.
// The target's representation is the concatenation of its node-message
// snapshots from all K rounds; a final projection yields one logit per
// directed relation type.
//
// K snapshots need K-1 edge refreshes, so the network holds K-1 transforms.
template <typename Scalar>
struct TypingNetwork {
  std::size_t layer_count = 0;     // K
  std::size_t relation_count = 0;  // |R|
  std::size_t hidden = 0;          // h_edge == h_node

  RowMatrix<Scalar> edge_embedding;           // 2|R| x h
  std::vector<RowMatrix<Scalar>> transforms;  // K-1 matrices, 3h x h
  std::vector<RowMatrix<Scalar>> biases;      // K-1 row vectors, 1 x h
  RowMatrix<Scalar> out_proj;                 // K*h x 2|R|
  RowMatrix<Scalar> out_bias;                 // 1 x 2|R|

  std::size_t directed_type_count() const { return 2 * relation_count; }
  std::size_t param_count() const {
    std::size_t n = edge_embedding.size() + out_proj.size() + out_bias.size();
    for (std::size_t i = 0; i + 1 < layer_count; ++i) {
      n += transforms[i].size() + biases[i].size();
    }
    return n;
  }
};

template <typename Scalar>
TypingNetwork<Scalar> make_typing_network(std::size_t layer_count,
                                          std::size_t relation_count,
                                          std::size_t h_edge,
                                          std::size_t h_node) {
  if (layer_count < 1) throw std::runtime_error("typing network needs K >= 1");
  if (h_edge != h_node) {
    throw std::runtime_error(
        "node messages are sums of edge states, so h_node must equal h_edge");
  }
  if (relation_count == 0) throw std::runtime_error("relation_count == 0");
  TypingNetwork<Scalar> net;
  net.layer_count = layer_count;
  net.relation_count = relation_count;
  net.hidden = h_edge;
  const auto h = static_cast<Eigen::Index>(h_edge);
  net.edge_embedding =
      RowMatrix<Scalar>::Zero(static_cast<Eigen::Index>(2 * relation_count), h);
  for (std::size_t i = 0; i + 1 < layer_count; ++i) {
    net.transforms.push_back(RowMatrix<Scalar>::Zero(3 * h, h));
    net.biases.push_back(RowMatrix<Scalar>::Zero(1, h));
  }
  net.out_proj = RowMatrix<Scalar>::Zero(
      static_cast<Eigen::Index>(layer_count) * h,
      static_cast<Eigen::Index>(2 * relation_count));
  net.out_bias =
      RowMatrix<Scalar>::Zero(1, static_cast<Eigen::Index>(2 * relation_count));
  return net;
}

template <typename Scalar>
void init_typing_network(TypingNetwork<Scalar>& net, Rng& rng) {
  const auto glorot = [&](RowMatrix<Scalar>& m) {
    const double a =
        std::sqrt(6.0 / static_cast<double>(m.rows() + m.cols()));
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) {
        m(i, j) = static_cast<Scalar>(rng.uniform(-a, a));
      }
    }
  };
  glorot(net.edge_embedding);
  for (auto& w : net.transforms) glorot(w);
  glorot(net.out_proj);
  // biases stay zero
}

// Dense gradients, double precision, same shapes as the parameters.
struct TypingGradients {
  RowMatrix<double> edge_embedding;
  std::vector<RowMatrix<double>> transforms;
  std::vector<RowMatrix<double>> biases;
  RowMatrix<double> out_proj;
  RowMatrix<double> out_bias;

  template <typename Scalar>
  static TypingGradients zeros_like(const TypingNetwork<Scalar>& net) {
    TypingGradients g;
    g.edge_embedding = RowMatrix<double>::Zero(net.edge_embedding.rows(),
                                               net.edge_embedding.cols());
    for (std::size_t i = 0; i + 1 < net.layer_count; ++i) {
      g.transforms.push_back(RowMatrix<double>::Zero(
          net.transforms[i].rows(), net.transforms[i].cols()));
      g.biases.push_back(
          RowMatrix<double>::Zero(net.biases[i].rows(), net.biases[i].cols()));
    }
    g.out_proj =
        RowMatrix<double>::Zero(net.out_proj.rows(), net.out_proj.cols());
    g.out_bias =
        RowMatrix<double>::Zero(net.out_bias.rows(), net.out_bias.cols());
    return g;
  }
};

// Forward pass intermediates kept for backprop.
struct TypingWorkspace {
  std::vector<RowMatrix<double>> edge_states;    // K matrices, m x h
  std::vector<RowMatrix<double>> node_messages;  // K matrices, n x h
  std::vector<RowMatrix<double>> preacts;        // K-1 matrices, m x h
  Eigen::RowVectorXd jk;                         // 1 x K*h
};

// Logits over all 2|R| directed types. An edgeless subgraph (or a target
// with no outgoing edges) yields the bias-driven logits: the target's
// messages are all-zero sums.
template <typename Scalar>
Eigen::VectorXd typing_logits(const TypingNetwork<Scalar>& net,
                              const RelationalSubgraph& sg,
                              TypingWorkspace* ws = nullptr) {
  if (sg.relation_count != net.relation_count) {
    throw std::runtime_error("subgraph/network relation vocabulary mismatch");
  }
  const std::size_t K = net.layer_count;
  const auto h = static_cast<Eigen::Index>(net.hidden);
  const auto n_nodes = static_cast<Eigen::Index>(sg.nodes.size());
  const auto n_edges = static_cast<Eigen::Index>(sg.edges.size());

  TypingWorkspace local;
  TypingWorkspace& w = ws ? *ws : local;
  w.edge_states.assign(K, RowMatrix<double>());
  w.node_messages.assign(K, RowMatrix<double>());
  w.preacts.assign(K > 0 ? K - 1 : 0, RowMatrix<double>());
  w.jk = Eigen::RowVectorXd::Zero(static_cast<Eigen::Index>(K) * h);

  w.edge_states[0].resize(n_edges, h);
  for (Eigen::Index e = 0; e < n_edges; ++e) {
    w.edge_states[0].row(e) =
        net.edge_embedding.row(sg.edges[e].type).template cast<double>();
  }

  for (std::size_t i = 0; i < K; ++i) {
    auto& msg = w.node_messages[i];
    msg = RowMatrix<double>::Zero(n_nodes, h);
    for (Eigen::Index e = 0; e < n_edges; ++e) {
      msg.row(sg.edges[e].src) += w.edge_states[i].row(e);
    }
    w.jk.segment(static_cast<Eigen::Index>(i) * h, h) = msg.row(0);
    if (i + 1 < K) {
      const RowMatrix<double> W = net.transforms[i].template cast<double>();
      const Eigen::RowVectorXd b =
          net.biases[i].row(0).template cast<double>();
      auto& pre = w.preacts[i];
      pre.resize(n_edges, h);
      Eigen::RowVectorXd z(3 * h);
      for (Eigen::Index e = 0; e < n_edges; ++e) {
        z.segment(0, h) = msg.row(sg.edges[e].src);
        z.segment(h, h) = msg.row(sg.edges[e].dst);
        z.segment(2 * h, h) = w.edge_states[i].row(e);
        pre.row(e) = z * W + b;
      }
      w.edge_states[i + 1] = pre.cwiseMax(0.0);
    }
  }

  Eigen::VectorXd logits(static_cast<Eigen::Index>(net.directed_type_count()));
  for (Eigen::Index j = 0; j < logits.size(); ++j) {
    double acc = double(net.out_bias(0, j));
    for (Eigen::Index k = 0; k < w.jk.size(); ++k) {
      acc += w.jk[k] * double(net.out_proj(k, j));
    }
    logits[j] = acc;
  }
  return logits;
}

// Strict variant used in training: an empty subgraph has no defined target
// representation.
template <typename Scalar>
Eigen::VectorXd typing_forward(const TypingNetwork<Scalar>& net,
                               const RelationalSubgraph& sg,
                               TypingWorkspace* ws = nullptr) {
  if (sg.edges.empty()) {
    throw std::runtime_error("typing_forward: subgraph has no edges");
  }
  return typing_logits(net, sg, ws);
}

// Backpropagates dloss/dlogits through a stored forward pass, adding into
// `grads`.
template <typename Scalar>
void typing_backward(const TypingNetwork<Scalar>& net,
                     const RelationalSubgraph& sg, const TypingWorkspace& w,
                     const Eigen::VectorXd& dlogits, TypingGradients& grads) {
  const std::size_t K = net.layer_count;
  const auto h = static_cast<Eigen::Index>(net.hidden);
  const auto n_nodes = static_cast<Eigen::Index>(sg.nodes.size());
  const auto n_edges = static_cast<Eigen::Index>(sg.edges.size());

  grads.out_bias.row(0) += dlogits.transpose();
  grads.out_proj.noalias() += w.jk.transpose() * dlogits.transpose();
  Eigen::RowVectorXd djk(w.jk.size());
  for (Eigen::Index k = 0; k < djk.size(); ++k) {
    double acc = 0.0;
    for (Eigen::Index j = 0; j < dlogits.size(); ++j) {
      acc += dlogits[j] * double(net.out_proj(k, j));
    }
    djk[k] = acc;
  }

  std::vector<RowMatrix<double>> d_msg(K), d_state(K);
  for (std::size_t i = 0; i < K; ++i) {
    d_msg[i] = RowMatrix<double>::Zero(n_nodes, h);
    d_state[i] = RowMatrix<double>::Zero(n_edges, h);
  }

  for (std::size_t ii = K; ii-- > 0;) {
    const auto i = static_cast<Eigen::Index>(ii);
    d_msg[ii].row(0) += djk.segment(i * h, h);
    for (Eigen::Index e = 0; e < n_edges; ++e) {
      d_state[ii].row(e) += d_msg[ii].row(sg.edges[e].src);
    }
    if (ii == 0) break;
    const std::size_t layer = ii - 1;
    const RowMatrix<double> W = net.transforms[layer].template cast<double>();
    Eigen::RowVectorXd z(3 * h), dz(3 * h), dpre(h);
    for (Eigen::Index e = 0; e < n_edges; ++e) {
      for (Eigen::Index c = 0; c < h; ++c) {
        dpre[c] = w.preacts[layer](e, c) > 0.0 ? d_state[ii](e, c) : 0.0;
      }
      z.segment(0, h) = w.node_messages[layer].row(sg.edges[e].src);
      z.segment(h, h) = w.node_messages[layer].row(sg.edges[e].dst);
      z.segment(2 * h, h) = w.edge_states[layer].row(e);
      grads.transforms[layer].noalias() += z.transpose() * dpre;
      grads.biases[layer].row(0) += dpre;
      dz.noalias() = dpre * W.transpose();
      d_msg[layer].row(sg.edges[e].src) += dz.segment(0, h);
      d_msg[layer].row(sg.edges[e].dst) += dz.segment(h, h);
      d_state[layer].row(e) += dz.segment(2 * h, h);
    }
  }

  for (Eigen::Index e = 0; e < n_edges; ++e) {
    grads.edge_embedding.row(sg.edges[e].type) += d_state[0].row(e);
  }
}

struct TypingLossResult {
  double loss = 0.0;
  Eigen::VectorXd d_logits;
};

// Pairwise ranking between observed and unobserved directed types,
// log[1 + (sum_{j in uno} e^{g(s_j + m)})(sum_{i in obs} e^{-g s_i})],
// evaluated through log-sum-exp. Gradients do not flow into the set
// structure, only the logits.
inline TypingLossResult ranking_loss(const Eigen::VectorXd& logits,
                                     const std::vector<DirectedType>& omega_obs,
                                     double gamma_s, double margin) {
  if (omega_obs.empty()) {
    throw std::runtime_error("ranking_loss: empty observed set");
  }
  if (gamma_s <= 0) throw std::runtime_error("ranking_loss: gamma must be > 0");
  const Eigen::Index n = logits.size();
  std::vector<bool> observed(static_cast<std::size_t>(n), false);
  for (const DirectedType t : omega_obs) {
    if (t >= static_cast<DirectedType>(n)) {
      throw std::runtime_error("ranking_loss: observed type out of range");
    }
    observed[t] = true;
  }

  TypingLossResult out;
  out.d_logits = Eigen::VectorXd::Zero(n);

  // log-sum-exp over each side
  double max_u = -std::numeric_limits<double>::infinity();
  double max_o = -std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 0; k < n; ++k) {
    if (observed[static_cast<std::size_t>(k)]) {
      max_o = std::max(max_o, -gamma_s * logits[k]);
    } else {
      max_u = std::max(max_u, gamma_s * (logits[k] + margin));
    }
  }
  if (!std::isfinite(max_u)) return out;  // no unobserved types: loss 0

  double sum_u = 0.0, sum_o = 0.0;
  for (Eigen::Index k = 0; k < n; ++k) {
    if (observed[static_cast<std::size_t>(k)]) {
      sum_o += std::exp(-gamma_s * logits[k] - max_o);
    } else {
      sum_u += std::exp(gamma_s * (logits[k] + margin) - max_u);
    }
  }
  const double lse_u = max_u + std::log(sum_u);
  const double lse_o = max_o + std::log(sum_o);
  const double expo = lse_u + lse_o;
  // softplus(expo)
  out.loss = expo > 0 ? expo + std::log1p(std::exp(-expo))
                      : std::log1p(std::exp(expo));
  const double sig = detail::sigmoid(expo);
  for (Eigen::Index k = 0; k < n; ++k) {
    if (observed[static_cast<std::size_t>(k)]) {
      const double q = std::exp(-gamma_s * logits[k] - lse_o);
      out.d_logits[k] = -sig * gamma_s * q;
    } else {
      const double p = std::exp(gamma_s * (logits[k] + margin) - lse_u);
      out.d_logits[k] = sig * gamma_s * p;
    }
  }
  return out;
}

// Cross entropy of softmax(logits) against the single masked type.
inline TypingLossResult softmax_loss(const Eigen::VectorXd& logits,
                                     DirectedType masked_type) {
  const Eigen::Index n = logits.size();
  if (masked_type >= static_cast<DirectedType>(n)) {
    throw std::runtime_error("softmax_loss: masked type out of range");
  }
  const double mx = logits.maxCoeff();
  Eigen::VectorXd p = (logits.array() - mx).exp();
  const double z = p.sum();
  p /= z;
  TypingLossResult out;
  out.loss = std::log(z) + mx - logits[static_cast<Eigen::Index>(masked_type)];
  out.d_logits = p;
  out.d_logits[static_cast<Eigen::Index>(masked_type)] -= 1.0;
  return out;
}

}  // namespace pie
