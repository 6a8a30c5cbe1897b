#include "pie/knowledge_graph.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iostream>
#include <set>
#include <stdexcept>

namespace pie {
namespace {

struct RawTriple {
  std::string head, relation, tail;
};

std::vector<RawTriple> read_tsv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open triple file: " + path);
  std::vector<RawTriple> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto t1 = line.find('\t');
    const auto t2 = t1 == std::string::npos ? t1 : line.find('\t', t1 + 1);
    if (t1 == std::string::npos || t2 == std::string::npos ||
        line.find('\t', t2 + 1) != std::string::npos) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": expected 3 tab-separated fields");
    }
    rows.push_back({line.substr(0, t1), line.substr(t1 + 1, t2 - t1 - 1),
                    line.substr(t2 + 1)});
  }
  return rows;
}

void read_vocab(const std::string& path, std::vector<std::string>& labels,
                std::unordered_map<std::string, std::uint32_t>& ids) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open vocabulary file: " + path);
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::pair<std::uint32_t, std::string>> entries;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": expected id<TAB>label");
    }
    std::uint32_t id = 0;
    const auto* first = line.data();
    auto [ptr, ec] = std::from_chars(first, first + tab, id);
    if (ec != std::errc{} || ptr != first + tab) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": malformed integer id");
    }
    entries.emplace_back(id, line.substr(tab + 1));
  }
  labels.resize(entries.size());
  std::vector<bool> seen(entries.size(), false);
  for (auto& [id, label] : entries) {
    if (id >= entries.size() || seen[id]) {
      throw std::runtime_error(path + ": vocabulary ids must be dense [0,n) " +
                               "without repeats (offending id " +
                               std::to_string(id) + ")");
    }
    seen[id] = true;
    if (!ids.emplace(label, id).second) {
      throw std::runtime_error(path + ": duplicate label '" + label + "'");
    }
    labels[id] = std::move(label);
  }
}

void build_csr(std::size_t entity_count, const std::vector<Triple>& train,
               bool by_head, CsrIndex& out) {
  out.row_ptr.assign(entity_count + 1, 0);
  out.relations.resize(train.size());
  out.neighbors.resize(train.size());
  for (const Triple& t : train) {
    ++out.row_ptr[(by_head ? t.head : t.tail) + 1];
  }
  for (std::size_t i = 1; i <= entity_count; ++i) {
    out.row_ptr[i] += out.row_ptr[i - 1];
  }
  std::vector<std::size_t> cursor(out.row_ptr.begin(), out.row_ptr.end() - 1);
  for (const Triple& t : train) {
    const EntityId key = by_head ? t.head : t.tail;
    const std::size_t slot = cursor[key]++;
    out.relations[slot] = t.relation;
    out.neighbors[slot] = by_head ? t.tail : t.head;
  }
  // Sort each row by (relation, neighbor) so lookups can binary-search.
  for (std::size_t e = 0; e < entity_count; ++e) {
    const std::size_t lo = out.row_ptr[e], hi = out.row_ptr[e + 1];
    std::vector<std::pair<RelationId, EntityId>> row;
    row.reserve(hi - lo);
    for (std::size_t i = lo; i < hi; ++i) {
      row.emplace_back(out.relations[i], out.neighbors[i]);
    }
    std::sort(row.begin(), row.end());
    for (std::size_t i = lo; i < hi; ++i) {
      out.relations[i] = row[i - lo].first;
      out.neighbors[i] = row[i - lo].second;
    }
  }
}

}  // namespace

std::span<const Triple> KnowledgeGraph::split(std::string_view name) const {
  if (name == "train") return train_;
  if (name == "valid") return valid_;
  if (name == "test") return test_;
  throw std::runtime_error("unknown split: " + std::string(name));
}

bool KnowledgeGraph::has_train_triple(EntityId h, RelationId r,
                                      EntityId t) const {
  const std::size_t lo = by_head_.row_begin(h), hi = by_head_.row_end(h);
  const auto first = by_head_.relations.begin();
  // Rows are sorted by (relation, neighbor); do a binary search on pairs.
  std::size_t a = lo, b = hi;
  while (a < b) {
    const std::size_t mid = a + (b - a) / 2;
    const auto key = std::make_pair(*(first + mid), by_head_.neighbors[mid]);
    if (key < std::make_pair(r, t)) {
      a = mid + 1;
    } else {
      b = mid;
    }
  }
  return a < hi && by_head_.relations[a] == r && by_head_.neighbors[a] == t;
}

std::optional<EntityId> KnowledgeGraph::entity_id(
    const std::string& label) const {
  const auto it = entity_ids_.find(label);
  if (it == entity_ids_.end()) return std::nullopt;
  return it->second;
}

std::optional<RelationId> KnowledgeGraph::relation_id(
    const std::string& label) const {
  const auto it = relation_ids_.find(label);
  if (it == relation_ids_.end()) return std::nullopt;
  return it->second;
}

std::vector<DirectedType> KnowledgeGraph::observed_directed_types(
    EntityId e) const {
  std::vector<DirectedType> types;
  const auto r = static_cast<DirectedType>(relation_count());
  for (std::size_t i = by_head_.row_begin(e); i < by_head_.row_end(e); ++i) {
    if (types.empty() || types.back() != by_head_.relations[i]) {
      types.push_back(by_head_.relations[i]);
    }
  }
  const std::size_t forward_end = types.size();
  for (std::size_t i = by_tail_.row_begin(e); i < by_tail_.row_end(e); ++i) {
    const DirectedType t = by_tail_.relations[i] + r;
    if (types.size() == forward_end || types.back() != t) types.push_back(t);
  }
  return types;  // both halves emitted in ascending order
}

void KnowledgeGraph::save_split_tsv(std::string_view name,
                                    const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write: " + path);
  for (const Triple& t : split(name)) {
    out << entity_labels_[t.head] << '\t' << relation_labels_[t.relation]
        << '\t' << entity_labels_[t.tail] << '\n';
  }
}

void KnowledgeGraph::build_indexes() {
  build_csr(entity_count(), train_, /*by_head=*/true, by_head_);
  build_csr(entity_count(), train_, /*by_head=*/false, by_tail_);
  relation_degree_.assign(relation_count(), 0);
  for (const Triple& t : train_) ++relation_degree_[t.relation];
}

KnowledgeGraph load_knowledge_graph(const std::string& train_path,
                                    const std::string& valid_path,
                                    const std::string& test_path,
                                    const LoadOptions& options) {
  KnowledgeGraph kg;
  const bool fixed_entity_vocab = !options.entity_vocab_path.empty();
  const bool fixed_relation_vocab = !options.relation_vocab_path.empty();
  if (fixed_entity_vocab) {
    read_vocab(options.entity_vocab_path, kg.entity_labels_, kg.entity_ids_);
  }
  if (fixed_relation_vocab) {
    read_vocab(options.relation_vocab_path, kg.relation_labels_,
               kg.relation_ids_);
  }

  const auto intern_entity = [&](const std::string& label) -> EntityId {
    const auto it = kg.entity_ids_.find(label);
    if (it != kg.entity_ids_.end()) return it->second;
    if (fixed_entity_vocab) {
      throw std::runtime_error("train entity '" + label +
                               "' missing from entity vocabulary");
    }
    const auto id = static_cast<EntityId>(kg.entity_labels_.size());
    kg.entity_labels_.push_back(label);
    kg.entity_ids_.emplace(label, id);
    return id;
  };
  const auto intern_relation = [&](const std::string& label) -> RelationId {
    const auto it = kg.relation_ids_.find(label);
    if (it != kg.relation_ids_.end()) return it->second;
    if (fixed_relation_vocab) {
      throw std::runtime_error("train relation '" + label +
                               "' missing from relation vocabulary");
    }
    const auto id = static_cast<RelationId>(kg.relation_labels_.size());
    kg.relation_labels_.push_back(label);
    kg.relation_ids_.emplace(label, id);
    return id;
  };

  for (const RawTriple& row : read_tsv(train_path)) {
    kg.train_.push_back({intern_entity(row.head), intern_relation(row.relation),
                         intern_entity(row.tail)});
  }
  // Deduplicate the train split (duplicates distort degree priors),
  // keeping first occurrences in file order.
  {
    std::set<Triple> seen;
    std::vector<Triple> kept;
    kept.reserve(kg.train_.size());
    for (const Triple& t : kg.train_) {
      if (seen.insert(t).second) kept.push_back(t);
    }
    kg.report_.duplicate_train_triples = kg.train_.size() - kept.size();
    kg.train_ = std::move(kept);
    if (kg.report_.duplicate_train_triples > 0) {
      std::cerr << "[load] deduplicated " << kg.report_.duplicate_train_triples
                << " train triples\n";
    }
  }

  const auto load_eval_split = [&](const std::string& path,
                                   std::vector<Triple>& dst,
                                   std::size_t& skipped) {
    for (const RawTriple& row : read_tsv(path)) {
      const auto h = kg.entity_id(row.head);
      const auto r = kg.relation_id(row.relation);
      const auto t = kg.entity_id(row.tail);
      if (!h || !r || !t) {
        if (options.unknown_policy == UnknownVocabPolicy::kError) {
          throw std::runtime_error(path + ": triple '" + row.head + " " +
                                   row.relation + " " + row.tail +
                                   "' uses labels missing from the train "
                                   "vocabulary");
        }
        ++skipped;
        continue;
      }
      dst.push_back({*h, *r, *t});
    }
    if (skipped > 0) {
      std::cerr << "[load] skipped " << skipped << " triples in " << path
                << " with out-of-vocabulary labels\n";
    }
  };
  load_eval_split(valid_path, kg.valid_, kg.report_.skipped_valid);
  load_eval_split(test_path, kg.test_, kg.report_.skipped_test);

  kg.build_indexes();
  return kg;
}

KnowledgeGraph make_graph_from_triples(std::size_t entity_count,
                                       std::size_t relation_count,
                                       std::vector<Triple> train,
                                       std::vector<Triple> valid,
                                       std::vector<Triple> test) {
  KnowledgeGraph kg;
  kg.entity_labels_.resize(entity_count);
  kg.relation_labels_.resize(relation_count);
  for (std::size_t i = 0; i < entity_count; ++i) {
    kg.entity_labels_[i] = "e" + std::to_string(i);
    kg.entity_ids_.emplace(kg.entity_labels_[i], static_cast<EntityId>(i));
  }
  for (std::size_t i = 0; i < relation_count; ++i) {
    kg.relation_labels_[i] = "r" + std::to_string(i);
    kg.relation_ids_.emplace(kg.relation_labels_[i],
                             static_cast<RelationId>(i));
  }
  const auto check = [&](const std::vector<Triple>& ts) {
    for (const Triple& t : ts) {
      if (t.head >= entity_count || t.tail >= entity_count ||
          t.relation >= relation_count) {
        throw std::runtime_error("triple id out of range");
      }
    }
  };
  check(train);
  check(valid);
  check(test);
  {
    std::set<Triple> seen;
    std::vector<Triple> kept;
    kept.reserve(train.size());
    for (const Triple& t : train) {
      if (seen.insert(t).second) kept.push_back(t);
    }
    kg.report_.duplicate_train_triples = train.size() - kept.size();
    train = std::move(kept);
  }
  kg.train_ = std::move(train);
  kg.valid_ = std::move(valid);
  kg.test_ = std::move(test);
  kg.build_indexes();
  return kg;
}

DegreePriors degree_priors(const KnowledgeGraph& kg, double smoothing) {
  if (smoothing < 0) throw std::runtime_error("smoothing must be >= 0");
  DegreePriors p;
  p.entity.resize(static_cast<Eigen::Index>(kg.entity_count()));
  for (std::size_t e = 0; e < kg.entity_count(); ++e) {
    p.entity[static_cast<Eigen::Index>(e)] =
        static_cast<double>(kg.entity_degree(static_cast<EntityId>(e))) +
        smoothing;
  }
  const double esum = p.entity.sum();
  if (esum > 0) p.entity /= esum;
  p.relation.resize(static_cast<Eigen::Index>(kg.relation_count()));
  for (std::size_t r = 0; r < kg.relation_count(); ++r) {
    p.relation[static_cast<Eigen::Index>(r)] =
        static_cast<double>(kg.relation_degree(static_cast<RelationId>(r))) +
        smoothing;
  }
  const double rsum = p.relation.sum();
  if (rsum > 0) p.relation /= rsum;
  return p;
}

std::vector<EntityId> k_hop_neighborhood(const KnowledgeGraph& kg,
                                         EntityId entity, std::size_t hops,
                                         std::size_t cap) {
  if (entity >= kg.entity_count()) {
    throw std::runtime_error("entity id out of range: " +
                             std::to_string(entity));
  }
  if (hops < 1 || cap < 1) {
    throw std::runtime_error("k_hop_neighborhood requires hops >= 1, cap >= 1");
  }
  std::vector<bool> visited(kg.entity_count(), false);
  visited[entity] = true;
  std::vector<EntityId> result;
  std::vector<EntityId> frontier{entity};
  for (std::size_t hop = 0; hop < hops && !frontier.empty(); ++hop) {
    std::vector<EntityId> discovered;
    for (const EntityId v : frontier) {
      const auto visit = [&](const CsrIndex& idx) {
        for (std::size_t i = idx.row_begin(v); i < idx.row_end(v); ++i) {
          const EntityId nb = idx.neighbors[i];
          if (!visited[nb]) {
            visited[nb] = true;
            discovered.push_back(nb);
          }
        }
      };
      visit(kg.by_head());
      visit(kg.by_tail());
    }
    if (result.size() + discovered.size() > cap) {
      std::sort(discovered.begin(), discovered.end(),
                [&](EntityId a, EntityId b) {
                  const auto da = kg.entity_degree(a), db = kg.entity_degree(b);
                  return da != db ? da < db : a < b;
                });
      discovered.resize(cap - result.size());
    }
    result.insert(result.end(), discovered.begin(), discovered.end());
    frontier = std::move(discovered);
    if (result.size() >= cap) break;
  }
  std::sort(result.begin(), result.end());
  return result;
}

}  // namespace pie
