#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "qdag/grid.hpp"
#include "qdag/quadtree.hpp"
#include "qdag/value.hpp"

namespace qdag {

struct ExtendCounter {
  std::uint64_t map_writes = 0;
};

// A quadtree node plus a child mapping M. The qdag over attributes A
// simulates the quadtree of R(A') x All(A \ A') where the base quadtree
// stores R(A'): child i of the qdag is child M[i] of the base node.
//
// Qdags are cheap value objects; the map and attribute sets are shared
// between a qdag and all its descendants. The base tree must outlive them.
class Qdag {
 public:
  // Identity qdag: M[i] = i over the tree's own attributes.
  static Qdag over(const CompactQuadtree& tree, AttributeSet attributes);

  Value value() const { return base_.value(); }

  // Requires value() == kHalf.
  Qdag child_at(ChildIndex i) const;

  const CompactQuadtree& tree() const { return *tree_; }
  const NodeRef& base() const { return base_; }
  const std::vector<ChildIndex>& map() const { return *map_; }
  // Attributes of the completion.
  const AttributeSet& attributes() const { return *attributes_; }
  // Attributes of the base quadtree.
  const AttributeSet& source_attributes() const { return *source_; }
  GridParams params() const { return tree_->params().with_dims(unsigned(attributes_->size())); }

 private:
  friend Qdag extend(const Qdag&, const AttributeSet&, ExtendCounter*);

  const CompactQuadtree* tree_ = nullptr;
  NodeRef base_;
  std::shared_ptr<const std::vector<ChildIndex>> map_;
  std::shared_ptr<const AttributeSet> attributes_;
  std::shared_ptr<const AttributeSet> source_;
};

// New map M[i] = M_old[project(i)] for all 2^|target| child indices; the base
// node is untouched. Throws SchemaError when `target` lacks a current
// attribute.
Qdag extend(const Qdag& q, const AttributeSet& target, ExtendCounter* counter = nullptr);

inline Value qdag_value(const Qdag& q) { return q.value(); }
inline Qdag qdag_child_at(const Qdag& q, ChildIndex i) { return q.child_at(i); }

}  // namespace qdag
