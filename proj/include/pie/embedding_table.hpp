#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <stdexcept>

#include "pie/ids.hpp"
#include "pie/rng.hpp"

namespace pie {

template <typename S>
using RowMatrix = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic,
                                Eigen::RowMajor>;
template <typename S>
using RowVector = Eigen::Matrix<S, 1, Eigen::Dynamic>;

enum class TableKind : std::uint8_t { kFull = 0, kLowRank = 1 };

// Entity representations, either a full |E| x d matrix or the factorization
// Z = Z_d * W with Z_d in R^{|E| x r} and a W in R^{r x d} shared by all
// entities. Materialized rows always have length d.
template <typename Scalar>
class EmbeddingTable {
 public:
  using Matrix = RowMatrix<Scalar>;

  static EmbeddingTable full(std::size_t entity_count, std::size_t dim) {
    EmbeddingTable t;
    t.kind_ = TableKind::kFull;
    t.dim_ = dim;
    t.rank_ = 0;
    t.rows_ = Matrix::Zero(static_cast<Eigen::Index>(entity_count),
                           static_cast<Eigen::Index>(dim));
    return t;
  }

  // Requires r < d unless `identity_override` is set (tests use r = d with
  // W = I to compare against the full table).
  static EmbeddingTable low_rank(std::size_t entity_count, std::size_t rank,
                                 std::size_t dim,
                                 bool identity_override = false) {
    if (rank == 0) throw std::runtime_error("low-rank table requires r >= 1");
    if (rank >= dim && !identity_override) {
      throw std::runtime_error(
          "low-rank table requires r < d (set the identity override to allow "
          "r = d)");
    }
    EmbeddingTable t;
    t.kind_ = TableKind::kLowRank;
    t.dim_ = dim;
    t.rank_ = rank;
    t.rows_ = Matrix::Zero(static_cast<Eigen::Index>(entity_count),
                           static_cast<Eigen::Index>(rank));
    t.mix_ = Matrix::Zero(static_cast<Eigen::Index>(rank),
                          static_cast<Eigen::Index>(dim));
    return t;
  }

  TableKind kind() const { return kind_; }
  bool low_rank_kind() const { return kind_ == TableKind::kLowRank; }
  std::size_t entity_count() const {
    return static_cast<std::size_t>(rows_.rows());
  }
  std::size_t dim() const { return dim_; }
  std::size_t rank() const { return rank_; }

  // Per-entity rows: Z (full) or Z_d (low rank).
  Matrix& rows() { return rows_; }
  const Matrix& rows() const { return rows_; }
  // Shared factor W; empty for full tables.
  Matrix& mix() { return mix_; }
  const Matrix& mix() const { return mix_; }

  std::size_t param_count() const {
    return low_rank_kind()
               ? entity_count() * rank_ + rank_ * dim_
               : entity_count() * dim_;
  }

  void check_entity(EntityId e) const {
    if (e >= entity_count()) {
      throw std::runtime_error("entity id out of range: " + std::to_string(e));
    }
  }

 private:
  TableKind kind_ = TableKind::kFull;
  std::size_t dim_ = 0;
  std::size_t rank_ = 0;
  Matrix rows_;
  Matrix mix_;
};

// Row copy for full tables, Z_d.row(e) * W for low-rank ones.
template <typename Scalar>
RowVector<Scalar> materialize_entity(const EmbeddingTable<Scalar>& table,
                                     EntityId e) {
  table.check_entity(e);
  if (table.low_rank_kind()) {
    return table.rows().row(static_cast<Eigen::Index>(e)) * table.mix();
  }
  return table.rows().row(static_cast<Eigen::Index>(e));
}

// Dense materialization of every entity row, built with the same per-row
// product as materialize_entity so downstream scores are bit-identical to
// per-entity materialization. Full tables are returned as a plain copy.
template <typename Scalar>
RowMatrix<Scalar> materialize_all(const EmbeddingTable<Scalar>& table) {
  if (!table.low_rank_kind()) return table.rows();
  RowMatrix<Scalar> out(static_cast<Eigen::Index>(table.entity_count()),
                        static_cast<Eigen::Index>(table.dim()));
  for (Eigen::Index e = 0; e < out.rows(); ++e) {
    out.row(e) = table.rows().row(e) * table.mix();
  }
  return out;
}

// Uniform init in [-bound, bound] for the per-entity rows. For low-rank
// tables W gets U[-sqrt(3/r), sqrt(3/r)] so materialized rows keep the same
// entry scale as a full table initialized with `bound`.
template <typename Scalar>
void init_embedding_table(EmbeddingTable<Scalar>& table, double bound,
                          Rng& rng) {
  auto& rows = table.rows();
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    for (Eigen::Index j = 0; j < rows.cols(); ++j) {
      rows(i, j) = static_cast<Scalar>(rng.uniform(-bound, bound));
    }
  }
  if (table.low_rank_kind()) {
    const double wb = std::sqrt(3.0 / static_cast<double>(table.rank()));
    auto& mix = table.mix();
    for (Eigen::Index i = 0; i < mix.rows(); ++i) {
      for (Eigen::Index j = 0; j < mix.cols(); ++j) {
        mix(i, j) = static_cast<Scalar>(rng.uniform(-wb, wb));
      }
    }
  }
}

}  // namespace pie
