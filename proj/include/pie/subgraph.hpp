#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "pie/ids.hpp"
#include "pie/knowledge_graph.hpp"
#include "pie/rng.hpp"

namespace pie {

// Directed edge inside a subgraph; node indices are local.
struct SubgraphEdge {
  std::uint32_t src;
  std::uint32_t dst;
  DirectedType type;  // in [0, 2|R|)

  friend bool operator==(const SubgraphEdge&, const SubgraphEdge&) = default;
};

// Local edge-labeled neighborhood of a target entity. Every original triple
// in the neighborhood appears as two directed edges: (u, v, rho) and its
// reverse (v, u, rho + |R|). Node 0 is always the target. Edges are kept
// sorted by (src, type, dst) so summations have a fixed order.
struct RelationalSubgraph {
  EntityId target = 0;
  std::size_t relation_count = 0;           // |R| of the source graph
  std::vector<EntityId> nodes;              // local index -> entity id
  std::vector<SubgraphEdge> edges;
  std::vector<DirectedType> masked_types;   // removed at the target, sorted

  std::size_t directed_type_count() const { return 2 * relation_count; }

  // Distinct directed types on target-outgoing edges, ascending.
  std::vector<DirectedType> target_types() const;
};

// BFS expansion to `hops` around `entity`. At each expanded node, incident
// train triples are grouped by the directed type they realize there and at
// most `per_type_cap` triples are sampled per type, so every incident type
// stays represented. Deterministic for a fixed rng stream.
RelationalSubgraph extract_relational_subgraph(const KnowledgeGraph& kg,
                                               EntityId entity,
                                               std::size_t hops,
                                               std::size_t per_type_cap,
                                               Rng& rng);

// Removes every target-incident edge whose underlying relation matches
// `masked_type` (both directed copies; keeping the paired reverse edge would
// hand the model the label through the type bijection). Records
// {masked_type, reverse} in masked_types.
void mask_target_type(RelationalSubgraph& sg, DirectedType masked_type);

struct MaskOutcome {
  RelationalSubgraph masked;
  std::vector<DirectedType> omega_obs;  // all observed directed types at the
                                        // target in the unmasked train graph
  DirectedType masked_type = 0;
};

// Draws the masked type uniformly from the target's distinct incident
// directed types. Targets with fewer than two distinct types produce a skip
// signal (nullopt), not an error.
std::optional<MaskOutcome> apply_relation_mask(const RelationalSubgraph& sg,
                                               const KnowledgeGraph& kg,
                                               Rng& rng);

}  // namespace pie
