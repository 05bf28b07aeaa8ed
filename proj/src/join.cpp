#include "qdag/join.hpp"

#include "qdag/error.hpp"

namespace qdag {

namespace {

class Intersector {
 public:
  Intersector(const GridParams& params, MutableQuadtree& out, JoinStats& stats)
      : params_(params), out_(out), stats_(stats) {
    stats_.per_level.assign(params.height() + 1, 0);
  }

  void run(const std::vector<Qdag>& operands, MutableQuadtree::NodeId node, unsigned depth) {
    if (depth == 0) stats_.record(0);
    std::vector<const Qdag*> active;
    active.reserve(operands.size());
    for (const Qdag& q : operands) {
      switch (q.value()) {
        case Value::kZero: out_.set_leaf(node, MutableQuadtree::Kind::kEmpty); return;
        case Value::kOne: break;  // a full operand does not constrain this subgrid
        default: active.push_back(&q);
      }
    }
    if (depth > 0) stats_.record(depth);
    if (active.empty()) {
      out_.set_leaf(node, MutableQuadtree::Kind::kFull);
      return;
    }
    const MutableQuadtree::NodeId first = out_.expand(node);
    std::vector<Qdag> children;
    children.reserve(active.size());
    bool all_empty = true;
    for (ChildIndex i = 0; i < params_.fanout(); ++i) {
      children.clear();
      for (const Qdag* q : active) children.push_back(q->child_at(i));
      stats_.child_steps += active.size();
      run(children, first + i, depth + 1);
      all_empty = all_empty && out_.kind(first + i) == MutableQuadtree::Kind::kEmpty;
    }
    if (all_empty) out_.collapse(node, MutableQuadtree::Kind::kEmpty);
  }

 private:
  GridParams params_;
  MutableQuadtree& out_;
  JoinStats& stats_;
};

}  // namespace

JoinResult and_n(std::span<const Qdag> qdags) {
  if (qdags.empty()) throw ContractViolation("and_n needs at least one operand");
  const AttributeSet& attributes = qdags.front().attributes();
  const unsigned height = qdags.front().tree().params().height();
  for (const Qdag& q : qdags) {
    if (!(q.attributes() == attributes)) {
      throw SchemaError("cannot intersect {" + q.attributes().to_string() + "} with {" +
                        attributes.to_string() + "}");
    }
    if (q.tree().params().height() != height) {
      throw SchemaError("operands disagree on the grid height");
    }
  }
  const GridParams params(static_cast<unsigned>(attributes.size()), height);
  JoinResult result;
  result.attributes = attributes;
  MutableQuadtree out(params);
  Intersector(params, out, result.stats)
      .run(std::vector<Qdag>(qdags.begin(), qdags.end()), out.root(), 0);
  result.tree = compact(out);
  return result;
}

JoinResult multijoin(std::span<const RelationInput> relations) {
  if (relations.empty()) throw ContractViolation("multijoin needs at least one relation");
  AttributeSet all;
  for (const auto& r : relations) all = AttributeSet::unite(all, r.attributes);
  if (all.size() > kMaxDims) throw SchemaError("join spans more than 16 attributes");
  std::vector<Qdag> extended;
  extended.reserve(relations.size());
  for (const auto& r : relations) extended.push_back(extend(Qdag::over(*r.tree, r.attributes), all));
  return and_n(extended);
}

}  // namespace qdag
