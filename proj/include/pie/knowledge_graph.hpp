#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "pie/ids.hpp"

namespace pie {

enum class UnknownVocabPolicy {
  kSkipWithWarning,  // drop valid/test triples outside the train vocabulary
  kError,
};

struct LoadOptions {
  UnknownVocabPolicy unknown_policy = UnknownVocabPolicy::kSkipWithWarning;
  std::string entity_vocab_path;    // optional; built from train when empty
  std::string relation_vocab_path;  // optional
};

struct LoadReport {
  std::size_t duplicate_train_triples = 0;
  std::size_t skipped_valid = 0;
  std::size_t skipped_test = 0;
};

// One direction of a CSR adjacency index over the train split.
// Entries of row `e` are (relation, neighbor) pairs sorted ascending.
struct CsrIndex {
  std::vector<std::size_t> row_ptr;        // entity_count + 1
  std::vector<RelationId> relations;       // train size
  std::vector<EntityId> neighbors;         // train size

  std::size_t row_begin(EntityId e) const { return row_ptr[e]; }
  std::size_t row_end(EntityId e) const { return row_ptr[e + 1]; }
  std::size_t degree(EntityId e) const { return row_end(e) - row_begin(e); }
};

struct DegreePriors {
  Eigen::VectorXd entity;    // p_e, sums to 1
  Eigen::VectorXd relation;  // p_r, sums to 1
};

// Immutable triple store with dense integer vocabularies. Safe to share
// across threads after construction; every operation here is read-only.
class KnowledgeGraph {
 public:
  std::size_t entity_count() const { return entity_labels_.size(); }
  std::size_t relation_count() const { return relation_labels_.size(); }
  std::size_t directed_type_count() const { return 2 * relation_count(); }

  std::span<const Triple> train() const { return train_; }
  std::span<const Triple> valid() const { return valid_; }
  std::span<const Triple> test() const { return test_; }
  std::span<const Triple> split(std::string_view name) const;

  const CsrIndex& by_head() const { return by_head_; }
  const CsrIndex& by_tail() const { return by_tail_; }

  // Train degree; each triple counts once at its head and once at its tail.
  std::size_t entity_degree(EntityId e) const {
    return by_head_.degree(e) + by_tail_.degree(e);
  }
  std::size_t relation_degree(RelationId r) const { return relation_degree_[r]; }

  bool has_train_triple(EntityId h, RelationId r, EntityId t) const;

  const std::string& entity_label(EntityId e) const { return entity_labels_[e]; }
  const std::string& relation_label(RelationId r) const {
    return relation_labels_[r];
  }
  std::optional<EntityId> entity_id(const std::string& label) const;
  std::optional<RelationId> relation_id(const std::string& label) const;

  // Distinct directed types incident to `e` in the train split, ascending.
  // Outgoing triples contribute their relation id, incoming ones id + |R|.
  std::vector<DirectedType> observed_directed_types(EntityId e) const;

  // Writes a split back to head<TAB>relation<TAB>tail using the labels.
  void save_split_tsv(std::string_view name, const std::string& path) const;

  const LoadReport& load_report() const { return report_; }

  friend KnowledgeGraph load_knowledge_graph(const std::string&,
                                             const std::string&,
                                             const std::string&,
                                             const LoadOptions&);
  friend KnowledgeGraph make_graph_from_triples(std::size_t, std::size_t,
                                                std::vector<Triple>,
                                                std::vector<Triple>,
                                                std::vector<Triple>);

 private:
  void build_indexes();

  std::vector<std::string> entity_labels_;
  std::vector<std::string> relation_labels_;
  std::unordered_map<std::string, EntityId> entity_ids_;
  std::unordered_map<std::string, RelationId> relation_ids_;

  std::vector<Triple> train_, valid_, test_;
  CsrIndex by_head_, by_tail_;
  std::vector<std::size_t> relation_degree_;
  LoadReport report_;
};

KnowledgeGraph load_knowledge_graph(const std::string& train_path,
                                    const std::string& valid_path,
                                    const std::string& test_path,
                                    const LoadOptions& options = {});

// Construct directly from id-level triples (tests, synthetic data).
// Labels default to "e<i>" / "r<i>".
KnowledgeGraph make_graph_from_triples(std::size_t entity_count,
                                       std::size_t relation_count,
                                       std::vector<Triple> train,
                                       std::vector<Triple> valid = {},
                                       std::vector<Triple> test = {});

// p(i) = (deg(i) + smoothing) / sum_j (deg(j) + smoothing).
DegreePriors degree_priors(const KnowledgeGraph& kg, double smoothing);

// Breadth-first expansion over undirected train adjacency up to `hops`.
// When the running result would exceed `cap`, the newly discovered nodes of
// that level are truncated by ascending degree, then ascending id. The query
// entity itself is excluded. Result is sorted ascending.
std::vector<EntityId> k_hop_neighborhood(const KnowledgeGraph& kg,
                                         EntityId entity, std::size_t hops,
                                         std::size_t cap);

}  // namespace pie
