#pragma once

#include <chrono>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "pie/knowledge_graph.hpp"
#include "pie/loss.hpp"
#include "pie/optimizer.hpp"
#include "pie/parallel.hpp"
#include "pie/rng.hpp"
#include "pie/scoring.hpp"

namespace pie {

struct TrainConfig {
  std::size_t batch_size = 512;
  std::size_t negatives_per_positive = 64;
  double adversarial_temperature = 1.0;
  double learning_rate = 0.1;
  OptimizerKind optimizer = OptimizerKind::kAdagrad;
  std::size_t epochs = 100;
  std::size_t eval_every = 10;
  std::uint64_t seed = 42;
  bool filter_negatives = true;
  std::size_t threads = 1;

  void validate() const {
    if (negatives_per_positive < 1) {
      throw std::runtime_error("n_neg must be >= 1");
    }
    if (adversarial_temperature < 0) {
      throw std::runtime_error("adversarial_temperature must be >= 0");
    }
    if (learning_rate <= 0) throw std::runtime_error("learning_rate must be > 0");
    if (batch_size < 1) throw std::runtime_error("batch_size must be >= 1");
  }
};

enum class CorruptionMode { kHead, kTail };

// Uniform entity ids replacing the chosen slot. With filtering on,
// corruptions that reproduce an observed train triple are rejected and
// resampled; if rejection stalls, the remaining valid candidates are
// enumerated exactly.
inline std::vector<EntityId> sample_negatives(const KnowledgeGraph& kg,
                                              const Triple& positive,
                                              std::size_t n_neg,
                                              CorruptionMode mode, Rng& rng,
                                              bool filtered = true) {
  if (n_neg < 1) throw std::runtime_error("n_neg must be >= 1");
  const std::size_t num_entities = kg.entity_count();
  std::vector<EntityId> out;
  out.reserve(n_neg);
  const auto observed = [&](EntityId e) {
    return mode == CorruptionMode::kTail
               ? kg.has_train_triple(positive.head, positive.relation, e)
               : kg.has_train_triple(e, positive.relation, positive.tail);
  };
  std::size_t attempts = 0;
  const std::size_t max_attempts = 32 * n_neg + 128;
  while (out.size() < n_neg && attempts < max_attempts) {
    ++attempts;
    const auto e = static_cast<EntityId>(rng.below(num_entities));
    if (filtered && observed(e)) continue;
    out.push_back(e);
  }
  if (out.size() < n_neg) {
    // Dense corner: enumerate entities that are still valid corruptions.
    std::vector<EntityId> valid;
    for (EntityId e = 0; e < num_entities; ++e) {
      if (!observed(e)) valid.push_back(e);
    }
    if (valid.empty()) {
      throw std::runtime_error(
          "no valid negative exists for this triple (every corruption is an "
          "observed train triple)");
    }
    while (out.size() < n_neg) {
      out.push_back(valid[rng.below(valid.size())]);
    }
  }
  return out;
}

struct EpochStats {
  std::size_t epoch = 0;
  double mean_loss = 0.0;
  double triples_per_sec = 0.0;
  double wall_ms = 0.0;
};

// One pass over shuffled train triples; every batch is trained with both
// tail and head corruption. Deterministic for a fixed seed and one thread:
// worker gradients merge in worker order, updates apply once per batch.
template <typename Scalar>
EpochStats train_kge_epoch(ScoringModel<Scalar>& model,
                           const KnowledgeGraph& kg, const TrainConfig& config,
                           std::size_t epoch, KgeOptimizer<Scalar>& opt) {
  config.validate();
  if (model.entities.entity_count() != kg.entity_count() ||
      model.relation_count() != kg.relation_count()) {
    throw std::runtime_error("model and graph vocabularies disagree");
  }
  const auto start = std::chrono::steady_clock::now();
  const std::span<const Triple> train = kg.train();
  if (train.empty()) throw std::runtime_error("empty train split");

  std::vector<std::size_t> order(train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng shuffle_rng = Rng::substream(config.seed, "kge-shuffle", epoch);
  shuffle_rng.shuffle(order);

  const std::size_t n_neg = config.negatives_per_positive;
  double loss_sum = 0.0;
  std::size_t loss_count = 0;

  std::vector<Triple> batch;
  for (std::size_t batch_start = 0; batch_start < order.size();
       batch_start += config.batch_size) {
    const std::size_t batch_end =
        std::min(batch_start + config.batch_size, order.size());
    batch.clear();
    for (std::size_t i = batch_start; i < batch_end; ++i) {
      batch.push_back(train[order[i]]);
    }
    for (const CorruptionMode mode :
         {CorruptionMode::kTail, CorruptionMode::kHead}) {
      // Assemble positives followed by their negatives so one gradient batch
      // covers the whole update.
      std::vector<Triple> items;
      items.reserve(batch.size() * (1 + n_neg));
      std::vector<std::vector<EntityId>> negs(batch.size());
      Rng neg_rng = Rng::substream(
          config.seed, mode == CorruptionMode::kTail ? "neg-tail" : "neg-head",
          epoch * 1000003 + batch_start);
      for (std::size_t k = 0; k < batch.size(); ++k) {
        items.push_back(batch[k]);
        negs[k] = sample_negatives(kg, batch[k], n_neg, mode, neg_rng,
                                   config.filter_negatives);
        for (const EntityId e : negs[k]) {
          Triple t = batch[k];
          (mode == CorruptionMode::kTail ? t.tail : t.head) = e;
          items.push_back(t);
        }
      }

      // Scores for every item, computed in parallel chunks.
      Eigen::VectorXd scores(static_cast<Eigen::Index>(items.size()));
      parallel_chunks(items.size(), config.threads,
                      [&](std::size_t, std::size_t lo, std::size_t hi) {
                        for (std::size_t i = lo; i < hi; ++i) {
                          scores[static_cast<Eigen::Index>(i)] =
                              score_triple(model, items[i].head,
                                           items[i].relation, items[i].tail);
                        }
                      });

      // Per-positive loss and upstream weights; mean over the batch.
      std::vector<double> weights(items.size(), 0.0);
      const double inv_batch = 1.0 / static_cast<double>(batch.size());
      double batch_loss = 0.0;
      std::size_t cursor = 0;
      for (std::size_t k = 0; k < batch.size(); ++k) {
        const double pos = scores[static_cast<Eigen::Index>(cursor)];
        Eigen::VectorXd neg(static_cast<Eigen::Index>(n_neg));
        for (std::size_t j = 0; j < n_neg; ++j) {
          neg[static_cast<Eigen::Index>(j)] =
              scores[static_cast<Eigen::Index>(cursor + 1 + j)];
        }
        const SelfAdversarialLoss l =
            self_adversarial_loss(pos, neg, config.adversarial_temperature);
        batch_loss += l.loss;
        weights[cursor] = l.d_pos * inv_batch;
        for (std::size_t j = 0; j < n_neg; ++j) {
          weights[cursor + 1 + j] = l.d_neg[static_cast<Eigen::Index>(j)] *
                                    inv_batch;
        }
        cursor += 1 + n_neg;
      }
      batch_loss *= inv_batch;
      if (!std::isfinite(batch_loss)) {
        throw std::runtime_error(
            "training diverged: non-finite loss in epoch " +
            std::to_string(epoch) + " (batch at " +
            std::to_string(batch_start) + ", " +
            (mode == CorruptionMode::kTail ? "tail" : "head") +
            " corruption)");
      }
      loss_sum += batch_loss;
      ++loss_count;

      const ScoreGradients grads = score_gradients(
          model, std::span<const Triple>(items), std::span<const double>(weights));
      opt.apply(model, grads);
    }
  }

  EpochStats stats;
  stats.epoch = epoch;
  stats.mean_loss = loss_sum / static_cast<double>(loss_count);
  const auto elapsed = std::chrono::duration<double, std::milli>(
                           std::chrono::steady_clock::now() - start)
                           .count();
  stats.wall_ms = elapsed;
  stats.triples_per_sec =
      elapsed > 0 ? 1000.0 * static_cast<double>(train.size()) / elapsed : 0.0;
  return stats;
}

}  // namespace pie
