#include "pie/subgraph.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <stdexcept>
#include <unordered_map>

namespace pie {

std::vector<DirectedType> RelationalSubgraph::target_types() const {
  std::set<DirectedType> types;
  for (const SubgraphEdge& e : edges) {
    if (e.src == 0) types.insert(e.type);
  }
  return {types.begin(), types.end()};
}

RelationalSubgraph extract_relational_subgraph(const KnowledgeGraph& kg,
                                               EntityId entity,
                                               std::size_t hops,
                                               std::size_t per_type_cap,
                                               Rng& rng) {
  if (entity >= kg.entity_count()) {
    throw std::runtime_error("entity id out of range: " +
                             std::to_string(entity));
  }
  if (hops < 1 || per_type_cap < 1) {
    throw std::runtime_error(
        "subgraph extraction requires hops >= 1 and per_type_cap >= 1");
  }
  const auto num_rel = static_cast<DirectedType>(kg.relation_count());

  RelationalSubgraph sg;
  sg.target = entity;
  sg.relation_count = kg.relation_count();
  sg.nodes.push_back(entity);
  std::unordered_map<EntityId, std::uint32_t> local;
  local.emplace(entity, 0);

  std::set<Triple> chosen;
  std::vector<EntityId> frontier{entity};
  for (std::size_t hop = 0; hop < hops && !frontier.empty(); ++hop) {
    std::vector<EntityId> next;
    for (const EntityId v : frontier) {
      // Incident train triples grouped by the directed type they realize at
      // v: outgoing triples under their relation id, incoming ones under
      // relation id + |R|. CSR rows are sorted, so groups are contiguous.
      std::map<DirectedType, std::vector<Triple>> groups;
      const CsrIndex& heads = kg.by_head();
      for (std::size_t i = heads.row_begin(v); i < heads.row_end(v); ++i) {
        groups[heads.relations[i]].push_back(
            {v, heads.relations[i], heads.neighbors[i]});
      }
      const CsrIndex& tails = kg.by_tail();
      for (std::size_t i = tails.row_begin(v); i < tails.row_end(v); ++i) {
        groups[tails.relations[i] + num_rel].push_back(
            {tails.neighbors[i], tails.relations[i], v});
      }
      for (auto& [type, triples] : groups) {
        std::vector<std::size_t> pick;
        if (triples.size() <= per_type_cap) {
          pick.resize(triples.size());
          for (std::size_t i = 0; i < pick.size(); ++i) pick[i] = i;
        } else {
          pick = rng.sample_indices(triples.size(), per_type_cap);
          std::sort(pick.begin(), pick.end());
        }
        for (const std::size_t i : pick) {
          const Triple& t = triples[i];
          if (!chosen.insert(t).second) continue;
          const EntityId other = t.head == v ? t.tail : t.head;
          if (!local.contains(other)) {
            local.emplace(other, static_cast<std::uint32_t>(sg.nodes.size()));
            sg.nodes.push_back(other);
            next.push_back(other);
          }
        }
      }
    }
    frontier = std::move(next);
  }

  sg.edges.reserve(chosen.size() * 2);
  for (const Triple& t : chosen) {
    const std::uint32_t h = local.at(t.head), tl = local.at(t.tail);
    sg.edges.push_back({h, tl, t.relation});
    sg.edges.push_back({tl, h, t.relation + num_rel});
  }
  std::sort(sg.edges.begin(), sg.edges.end(),
            [](const SubgraphEdge& a, const SubgraphEdge& b) {
              return std::tie(a.src, a.type, a.dst) <
                     std::tie(b.src, b.type, b.dst);
            });
  return sg;
}

void mask_target_type(RelationalSubgraph& sg, DirectedType masked_type) {
  if (masked_type >= sg.directed_type_count()) {
    throw std::runtime_error("masked type out of range");
  }
  const RelationId rel = underlying_relation(masked_type, sg.relation_count);
  std::erase_if(sg.edges, [&](const SubgraphEdge& e) {
    return (e.src == 0 || e.dst == 0) &&
           underlying_relation(e.type, sg.relation_count) == rel;
  });
  sg.masked_types.push_back(masked_type);
  const DirectedType rev = reverse_type(masked_type, sg.relation_count);
  if (rev != masked_type) sg.masked_types.push_back(rev);
  std::sort(sg.masked_types.begin(), sg.masked_types.end());
  sg.masked_types.erase(
      std::unique(sg.masked_types.begin(), sg.masked_types.end()),
      sg.masked_types.end());
}

std::optional<MaskOutcome> apply_relation_mask(const RelationalSubgraph& sg,
                                               const KnowledgeGraph& kg,
                                               Rng& rng) {
  const std::vector<DirectedType> types = sg.target_types();
  if (types.size() < 2) return std::nullopt;
  MaskOutcome out;
  out.masked_type = types[rng.below(types.size())];
  out.masked = sg;
  mask_target_type(out.masked, out.masked_type);
  out.omega_obs = kg.observed_directed_types(sg.target);
  return out;
}

}  // namespace pie
