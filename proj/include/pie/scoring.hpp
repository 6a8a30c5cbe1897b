#pragma once

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "pie/embedding_table.hpp"
#include "pie/ids.hpp"
#include "pie/rng.hpp"

namespace pie {

enum class ModelKind : std::uint8_t {
  kTransE = 0,
  kComplEx = 1,
  kPairRE = 2,
  kRotatE = 3,
};

enum class TransENorm { kL1, kL2 };

inline const char* model_kind_name(ModelKind k) {
  switch (k) {
    case ModelKind::kTransE: return "transe";
    case ModelKind::kComplEx: return "complex";
    case ModelKind::kPairRE: return "pairre";
    case ModelKind::kRotatE: return "rotate";
  }
  return "?";
}

// Relation row width per kind: TransE and ComplEx store one d-vector,
// PairRE two (head and tail projections), RotatE d/2 rotation phases.
inline std::size_t relation_dim(ModelKind kind, std::size_t d) {
  switch (kind) {
    case ModelKind::kTransE: return d;
    case ModelKind::kComplEx: return d;
    case ModelKind::kPairRE: return 2 * d;
    case ModelKind::kRotatE: return d / 2;
  }
  return d;
}

template <typename Scalar>
struct ScoringModel {
  ModelKind kind = ModelKind::kTransE;
  EmbeddingTable<Scalar> entities;
  RowMatrix<Scalar> relations;  // |R| x relation_dim(kind, d)
  double gamma = 12.0;          // margin offset for distance-based kinds
  TransENorm transe_norm = TransENorm::kL1;

  std::size_t dim() const { return entities.dim(); }
  std::size_t relation_count() const {
    return static_cast<std::size_t>(relations.rows());
  }
  void check_relation(RelationId r) const {
    if (r >= relation_count()) {
      throw std::runtime_error("relation id out of range: " +
                               std::to_string(r));
    }
  }
};

template <typename Scalar>
ScoringModel<Scalar> make_scoring_model(ModelKind kind,
                                        EmbeddingTable<Scalar> entities,
                                        std::size_t relation_count,
                                        double gamma,
                                        TransENorm norm = TransENorm::kL1) {
  if ((kind == ModelKind::kComplEx || kind == ModelKind::kRotatE) &&
      entities.dim() % 2 != 0) {
    throw std::runtime_error(
        "complex-valued models need an even embedding dimension");
  }
  ScoringModel<Scalar> m;
  m.kind = kind;
  m.gamma = gamma;
  m.transe_norm = norm;
  m.relations = RowMatrix<Scalar>::Zero(
      static_cast<Eigen::Index>(relation_count),
      static_cast<Eigen::Index>(relation_dim(kind, entities.dim())));
  m.entities = std::move(entities);
  return m;
}

// RotatE-convention init: all entries uniform in [-gamma/d, gamma/d].
template <typename Scalar>
void init_scoring_model(ScoringModel<Scalar>& m, Rng& rng) {
  const double b = m.gamma / static_cast<double>(m.dim());
  init_embedding_table(m.entities, b, rng);
  for (Eigen::Index i = 0; i < m.relations.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.relations.cols(); ++j) {
      m.relations(i, j) = static_cast<Scalar>(rng.uniform(-b, b));
    }
  }
}

namespace detail {

// Single scoring kernel shared by every evaluation path so that per-triple
// scores are bit-identical regardless of batch composition or order.
// Accumulates in double.
template <typename Scalar>
double score_rows(ModelKind kind, TransENorm norm, double gamma,
                  const RowVector<Scalar>& h, const RowVector<Scalar>& r,
                  const RowVector<Scalar>& t) {
  const Eigen::Index d = h.size();
  switch (kind) {
    case ModelKind::kTransE: {
      double acc = 0.0;
      if (norm == TransENorm::kL1) {
        for (Eigen::Index k = 0; k < d; ++k) {
          acc += std::abs(double(h[k]) + double(r[k]) - double(t[k]));
        }
      } else {
        for (Eigen::Index k = 0; k < d; ++k) {
          const double v = double(h[k]) + double(r[k]) - double(t[k]);
          acc += v * v;
        }
        acc = std::sqrt(acc);
      }
      return gamma - acc;
    }
    case ModelKind::kComplEx: {
      double acc = 0.0;
      for (Eigen::Index k = 0; k < d; k += 2) {
        const double ha = h[k], hb = h[k + 1];
        const double ra = r[k], rb = r[k + 1];
        const double ta = t[k], tb = t[k + 1];
        acc += (ha * ra - hb * rb) * ta + (ha * rb + hb * ra) * tb;
      }
      return acc;
    }
    case ModelKind::kPairRE: {
      double acc = 0.0;
      for (Eigen::Index k = 0; k < d; ++k) {
        acc += std::abs(double(h[k]) * double(r[k]) -
                        double(t[k]) * double(r[d + k]));
      }
      return gamma - acc;
    }
    case ModelKind::kRotatE: {
      double acc = 0.0;
      for (Eigen::Index k = 0; k < d; k += 2) {
        const double c = std::cos(double(r[k / 2]));
        const double s = std::sin(double(r[k / 2]));
        const double va = double(h[k]) * c - double(h[k + 1]) * s - double(t[k]);
        const double vb = double(h[k]) * s + double(h[k + 1]) * c -
                          double(t[k + 1]);
        acc += std::sqrt(va * va + vb * vb);
      }
      return gamma - acc;
    }
  }
  throw std::runtime_error("unknown model kind");
}

inline double sign0(double x) { return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0); }

// Adds d(weight * score)/d{h, r, t} into the row buffers and returns the
// score. Gradients are taken w.r.t. the materialized entity rows.
template <typename Scalar>
double score_and_grad_rows(ModelKind kind, TransENorm norm, double gamma,
                           const RowVector<Scalar>& h,
                           const RowVector<Scalar>& r,
                           const RowVector<Scalar>& t, double weight,
                           Eigen::RowVectorXd& gh, Eigen::RowVectorXd& gr,
                           Eigen::RowVectorXd& gt) {
  const Eigen::Index d = h.size();
  switch (kind) {
    case ModelKind::kTransE: {
      double acc = 0.0;
      if (norm == TransENorm::kL1) {
        for (Eigen::Index k = 0; k < d; ++k) {
          const double v = double(h[k]) + double(r[k]) - double(t[k]);
          acc += std::abs(v);
          const double g = -weight * sign0(v);
          gh[k] += g;
          gr[k] += g;
          gt[k] -= g;
        }
        return gamma - acc;
      }
      double sq = 0.0;
      for (Eigen::Index k = 0; k < d; ++k) {
        const double v = double(h[k]) + double(r[k]) - double(t[k]);
        sq += v * v;
      }
      acc = std::sqrt(sq);
      const double inv = acc > 0 ? 1.0 / acc : 0.0;
      for (Eigen::Index k = 0; k < d; ++k) {
        const double v = double(h[k]) + double(r[k]) - double(t[k]);
        const double g = -weight * v * inv;
        gh[k] += g;
        gr[k] += g;
        gt[k] -= g;
      }
      return gamma - acc;
    }
    case ModelKind::kComplEx: {
      double acc = 0.0;
      for (Eigen::Index k = 0; k < d; k += 2) {
        const double ha = h[k], hb = h[k + 1];
        const double ra = r[k], rb = r[k + 1];
        const double ta = t[k], tb = t[k + 1];
        acc += (ha * ra - hb * rb) * ta + (ha * rb + hb * ra) * tb;
        gh[k] += weight * (ra * ta + rb * tb);
        gh[k + 1] += weight * (-rb * ta + ra * tb);
        gr[k] += weight * (ha * ta + hb * tb);
        gr[k + 1] += weight * (-hb * ta + ha * tb);
        gt[k] += weight * (ha * ra - hb * rb);
        gt[k + 1] += weight * (ha * rb + hb * ra);
      }
      return acc;
    }
    case ModelKind::kPairRE: {
      double acc = 0.0;
      for (Eigen::Index k = 0; k < d; ++k) {
        const double rh = r[k], rt = r[d + k];
        const double v = double(h[k]) * rh - double(t[k]) * rt;
        acc += std::abs(v);
        const double g = -weight * sign0(v);
        gh[k] += g * rh;
        gr[k] += g * double(h[k]);
        gt[k] -= g * rt;
        gr[d + k] -= g * double(t[k]);
      }
      return gamma - acc;
    }
    case ModelKind::kRotatE: {
      double acc = 0.0;
      for (Eigen::Index k = 0; k < d; k += 2) {
        const double theta = r[k / 2];
        const double c = std::cos(theta), s = std::sin(theta);
        const double ha = h[k], hb = h[k + 1];
        const double va = ha * c - hb * s - double(t[k]);
        const double vb = ha * s + hb * c - double(t[k + 1]);
        const double len = std::sqrt(va * va + vb * vb);
        acc += len;
        const double inv = len > 0 ? -weight / len : 0.0;
        gh[k] += inv * (va * c + vb * s);
        gh[k + 1] += inv * (-va * s + vb * c);
        gt[k] -= inv * va;
        gt[k + 1] -= inv * vb;
        gr[k / 2] += inv * (va * (-ha * s - hb * c) + vb * (ha * c - hb * s));
      }
      return gamma - acc;
    }
  }
  throw std::runtime_error("unknown model kind");
}

}  // namespace detail

// Higher scores mean more plausible triples. Distance-based kinds return
// gamma minus the residual norm, so their scores never exceed gamma.
template <typename Scalar>
double score_triple(const ScoringModel<Scalar>& m, EntityId h, RelationId r,
                    EntityId t) {
  m.check_relation(r);
  const RowVector<Scalar> eh = materialize_entity(m.entities, h);
  const RowVector<Scalar> et = materialize_entity(m.entities, t);
  const RowVector<Scalar> er = m.relations.row(static_cast<Eigen::Index>(r));
  return detail::score_rows(m.kind, m.transe_norm, m.gamma, eh, er, et);
}

// Scores one query side against a list of candidates. `tail_side` means the
// candidates fill the tail slot (known entity is the head). Uses the exact
// same kernel as score_triple, candidate by candidate.
template <typename Scalar>
Eigen::VectorXd score_candidates(const ScoringModel<Scalar>& m,
                                 EntityId known, RelationId r, bool tail_side,
                                 std::span<const EntityId> candidates) {
  m.check_relation(r);
  const RowVector<Scalar> eknown = materialize_entity(m.entities, known);
  const RowVector<Scalar> er = m.relations.row(static_cast<Eigen::Index>(r));
  Eigen::VectorXd out(static_cast<Eigen::Index>(candidates.size()));
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const RowVector<Scalar> ec = materialize_entity(m.entities, candidates[i]);
    out[static_cast<Eigen::Index>(i)] =
        tail_side
            ? detail::score_rows(m.kind, m.transe_norm, m.gamma, eknown, er, ec)
            : detail::score_rows(m.kind, m.transe_norm, m.gamma, ec, er,
                                 eknown);
  }
  return out;
}

// Accumulated analytic score gradients for one batch, double precision.
// Entity gradients are in parameter space: rows of Z for full tables, rows of
// Z_d for low-rank ones, with the shared-W gradient summed once per batch.
struct ScoreGradients {
  std::unordered_map<EntityId, Eigen::RowVectorXd> entity_rows;
  std::unordered_map<RelationId, Eigen::RowVectorXd> relation_rows;
  RowMatrix<double> mix;  // r x d; zero-sized for full tables

  bool empty() const { return entity_rows.empty() && relation_rows.empty(); }
};

// Gradients of sum_k weights[k] * score(batch[k]) w.r.t. every touched
// parameter. Scores of the batch are returned through `scores` when given.
// `materialized` may supply a precomputed materialize_all matrix to reuse.
template <typename Scalar>
ScoreGradients score_gradients(const ScoringModel<Scalar>& m,
                               std::span<const Triple> batch,
                               std::span<const double> weights,
                               Eigen::VectorXd* scores = nullptr,
                               const RowMatrix<Scalar>* materialized = nullptr) {
  if (batch.empty()) throw std::runtime_error("score_gradients: empty batch");
  if (batch.size() != weights.size()) {
    throw std::runtime_error("score_gradients: batch/weights size mismatch");
  }
  const std::size_t d = m.dim();
  const std::size_t dr = relation_dim(m.kind, d);
  const bool low_rank = m.entities.low_rank_kind();

  // Materialize each touched entity at most once per batch.
  std::unordered_map<EntityId, RowVector<Scalar>> mat;
  if (!materialized) mat.reserve(2 * batch.size());
  const auto row_of = [&](EntityId e) -> RowVector<Scalar> {
    if (materialized) return materialized->row(static_cast<Eigen::Index>(e));
    auto it = mat.find(e);
    if (it == mat.end()) {
      it = mat.emplace(e, materialize_entity(m.entities, e)).first;
    }
    return it->second;
  };

  // Accumulate entity gradients in materialized space first.
  std::unordered_map<EntityId, Eigen::RowVectorXd> g_mat;
  ScoreGradients out;
  if (scores) scores->resize(static_cast<Eigen::Index>(batch.size()));
  for (std::size_t k = 0; k < batch.size(); ++k) {
    const Triple& tr = batch[k];
    m.check_relation(tr.relation);
    auto& gh = g_mat.try_emplace(tr.head, Eigen::RowVectorXd::Zero(d))
                   .first->second;
    auto& gt = g_mat.try_emplace(tr.tail, Eigen::RowVectorXd::Zero(d))
                   .first->second;
    auto& gr = out.relation_rows
                   .try_emplace(tr.relation, Eigen::RowVectorXd::Zero(dr))
                   .first->second;
    const double s = detail::score_and_grad_rows(
        m.kind, m.transe_norm, m.gamma, row_of(tr.head),
        RowVector<Scalar>(m.relations.row(tr.relation)), row_of(tr.tail),
        weights[k], gh, gr, gt);
    if (scores) (*scores)[static_cast<Eigen::Index>(k)] = s;
  }

  if (!low_rank) {
    out.entity_rows = std::move(g_mat);
    return out;
  }

  // Chain rule through the shared factor: dZ_d = g * W^T per entity and
  // dW = sum_e Z_d[e]^T g_e, summed once over the whole batch.
  const auto& W = m.entities.mix();
  const Eigen::MatrixXd Wd = W.template cast<double>();
  out.mix = RowMatrix<double>::Zero(W.rows(), W.cols());
  for (const auto& [e, ge] : g_mat) {
    out.entity_rows.emplace(e, ge * Wd.transpose());
    const Eigen::RowVectorXd zd =
        m.entities.rows().row(static_cast<Eigen::Index>(e))
            .template cast<double>();
    out.mix.noalias() += zd.transpose() * ge;
  }
  return out;
}

// Total learnable parameter count: entity part (|E|*d full, |E|*r + r*d
// low-rank) plus relation part |R| * relation_dim.
template <typename Scalar>
std::size_t param_count(const ScoringModel<Scalar>& m) {
  return m.entities.param_count() +
         m.relation_count() * relation_dim(m.kind, m.dim());
}

}  // namespace pie
