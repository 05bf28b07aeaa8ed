#include "qdag/qdag.hpp"

#include "qdag/error.hpp"

namespace qdag {

Qdag Qdag::over(const CompactQuadtree& tree, AttributeSet attributes) {
  if (attributes.size() != tree.params().dims()) {
    throw SchemaError("quadtree has " + std::to_string(tree.params().dims()) +
                      " dimensions but {" + attributes.to_string() + "} was given");
  }
  Qdag q;
  q.tree_ = &tree;
  q.base_ = tree.root();
  auto map = std::make_shared<std::vector<ChildIndex>>(tree.params().fanout());
  for (ChildIndex i = 0; i < map->size(); ++i) (*map)[i] = i;
  q.map_ = std::move(map);
  q.attributes_ = std::make_shared<const AttributeSet>(std::move(attributes));
  q.source_ = q.attributes_;
  return q;
}

Qdag Qdag::child_at(ChildIndex i) const {
  if (base_.value() != Value::kHalf) throw ContractViolation("qdag child_at on a leaf");
  if (i >= map_->size()) throw ContractViolation("qdag child index out of range");
  Qdag child = *this;
  child.base_ = tree_->child_at(base_, (*map_)[i]);
  return child;
}

Qdag extend(const Qdag& q, const AttributeSet& target, ExtendCounter* counter) {
  if (target.size() > kMaxDims) throw SchemaError("extension exceeds the dimension cap");
  const auto table = ProjectionTable::get(AttributeMask::embed(q.attributes(), target));
  const auto& old_map = q.map();
  auto map = std::make_shared<std::vector<ChildIndex>>(table->size());
  for (ChildIndex i = 0; i < map->size(); ++i) (*map)[i] = old_map[(*table)[i]];
  if (counter != nullptr) counter->map_writes += map->size();
  Qdag out = q;
  out.map_ = std::move(map);
  out.attributes_ = std::make_shared<const AttributeSet>(target);
  return out;
}

}  // namespace qdag
