#pragma once

#include <cstdint>
#include <tuple>

namespace pie {

using EntityId = std::uint32_t;
using RelationId = std::uint32_t;

// A directed relation type lives in [0, 2|R|): ids >= |R| are reverse types.
using DirectedType = std::uint32_t;

struct Triple {
  EntityId head;
  RelationId relation;
  EntityId tail;

  friend bool operator==(const Triple&, const Triple&) = default;
  friend auto operator<=>(const Triple& a, const Triple& b) {
    return std::tie(a.head, a.relation, a.tail) <=>
           std::tie(b.head, b.relation, b.tail);
  }
};

inline DirectedType reverse_type(DirectedType t, std::size_t relation_count) {
  const auto r = static_cast<DirectedType>(relation_count);
  return t < r ? t + r : t - r;
}

inline RelationId underlying_relation(DirectedType t, std::size_t relation_count) {
  const auto r = static_cast<DirectedType>(relation_count);
  return t < r ? t : t - r;
}

inline bool is_reverse_type(DirectedType t, std::size_t relation_count) {
  return t >= static_cast<DirectedType>(relation_count);
}

}  // namespace pie
