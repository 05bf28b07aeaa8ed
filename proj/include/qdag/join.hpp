#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "qdag/qdag.hpp"
#include "qdag/quadtree.hpp"

namespace qdag {

// Work done while unfolding a query output, counted over the non-pruned
// output tree. per_level[t] is the number of generated nodes at depth t
// (0 = root, h = cells) whose value is not 0, i.e. the nodes whose subgrid
// survives every operand at that granularity. The root always counts.
struct JoinStats {
  std::uint64_t nodes_expanded = 0;
  std::vector<std::uint64_t> per_level;
  std::uint64_t max_level_width = 0;
  // Operand child_at calls made while expanding.
  std::uint64_t child_steps = 0;

  void record(unsigned depth) {
    if (per_level.size() <= depth) per_level.resize(depth + 1, 0);
    ++nodes_expanded;
    if (++per_level[depth] > max_level_width) max_level_width = per_level[depth];
  }
};

struct JoinResult {
  CompactQuadtree tree;
  JoinStats stats;
  AttributeSet attributes;
};

// Synchronized traversal of n qdags over the same attributes; the output
// stores the cells present in every completion. Children are visited 0..2^d-1
// depth first; a node whose children all come back empty is pruned to an
// empty leaf, and full-child merging happens when the output is compacted.
// Throws SchemaError on mismatched attributes or heights and
// ContractViolation for an empty operand list.
JoinResult and_n(std::span<const Qdag> qdags);

struct RelationInput {
  const CompactQuadtree* tree = nullptr;
  AttributeSet attributes;
};

// Extends every relation to the union of all attributes and intersects.
JoinResult multijoin(std::span<const RelationInput> relations);

}  // namespace qdag
