#include "qdag/lqdag.hpp"

#include <map>
#include <utility>

#include "qdag/catalog.hpp"
#include "qdag/error.hpp"

namespace qdag {

namespace {

Value negated(Value v) {
  switch (v) {
    case Value::kZero: return Value::kOne;
    case Value::kOne: return Value::kZero;
    default: return v;
  }
}

void require_same_attributes(const Lqdag& a, const Lqdag& b, const char* op) {
  if (!(a->attributes() == b->attributes())) {
    throw SchemaError(std::string(op) + " needs equal attribute sets, got {" +
                      a->attributes().to_string() + "} and {" + b->attributes().to_string() + "}");
  }
}

}  // namespace

Lqdag LqdagNode::qtree(unsigned atom, const CompactQuadtree& tree,
                       std::shared_ptr<const AttributeSet> attributes) {
  auto n = std::shared_ptr<LqdagNode>(new LqdagNode());
  n->functor_ = Functor::kQtree;
  n->attributes_ = std::move(attributes);
  n->atom_ = atom;
  n->tree_ = &tree;
  n->node_ = tree.root();
  return n;
}

Lqdag LqdagNode::negate(unsigned atom, const CompactQuadtree& tree,
                        std::shared_ptr<const AttributeSet> attributes) {
  auto n = std::shared_ptr<LqdagNode>(new LqdagNode());
  n->functor_ = Functor::kNot;
  n->attributes_ = std::move(attributes);
  n->atom_ = atom;
  n->tree_ = &tree;
  n->node_ = tree.root();
  return n;
}

Lqdag LqdagNode::conjunction(Lqdag left, Lqdag right) {
  require_same_attributes(left, right, "AND");
  auto n = std::shared_ptr<LqdagNode>(new LqdagNode());
  n->functor_ = Functor::kAnd;
  n->attributes_ = left->attributes_;
  n->size_ = 1 + left->size() + right->size();
  n->left_ = std::move(left);
  n->right_ = std::move(right);
  return n;
}

Lqdag LqdagNode::disjunction(Lqdag left, Lqdag right) {
  require_same_attributes(left, right, "OR");
  auto n = std::shared_ptr<LqdagNode>(new LqdagNode());
  n->functor_ = Functor::kOr;
  n->attributes_ = left->attributes_;
  n->size_ = 1 + left->size() + right->size();
  n->left_ = std::move(left);
  n->right_ = std::move(right);
  return n;
}

Lqdag LqdagNode::extend(Lqdag inner, std::shared_ptr<const AttributeSet> target) {
  if (inner->attributes() == *target) return inner;
  if (target->size() > kMaxDims) throw SchemaError("extension spans more than 16 attributes");
  if (inner->functor() == Functor::kExtend) inner = inner->inner();
  auto table = ProjectionTable::get(AttributeMask::embed(inner->attributes(), *target));
  if (inner->attributes() == *target) return inner;
  auto n = std::shared_ptr<LqdagNode>(new LqdagNode());
  n->functor_ = Functor::kExtend;
  n->attributes_ = std::move(target);
  n->size_ = 1 + inner->size();
  n->left_ = std::move(inner);
  n->table_ = std::move(table);
  return n;
}

LqdagEvaluator::LqdagEvaluator(std::size_t atom_count) {
  counters_.value_calls.assign(atom_count, 0);
  counters_.child_calls.assign(atom_count, 0);
}

void LqdagEvaluator::reset_counters() {
  std::fill(counters_.value_calls.begin(), counters_.value_calls.end(), 0);
  std::fill(counters_.child_calls.begin(), counters_.child_calls.end(), 0);
}

void LqdagEvaluator::count(std::vector<std::uint64_t>& v, unsigned atom) {
  if (v.size() <= atom) v.resize(atom + 1, 0);
  ++v[atom];
}

const NodeRef& LqdagEvaluator::resolve(const LqdagNode& atom) {
  if (!atom.node_) {
    count(counters_.child_calls, atom.atom_);
    atom.node_ = atom.tree_->child_at(atom.parent_, *atom.pending_);
  }
  return *atom.node_;
}

Value LqdagEvaluator::value(const Lqdag& e) {
  if (e->value_) return *e->value_;
  Value v = Value::kDiamond;
  switch (e->functor()) {
    case Functor::kQtree:
    case Functor::kNot: {
      const Value base = resolve(*e).value();
      count(counters_.value_calls, e->atom());
      v = e->functor() == Functor::kQtree ? base : negated(base);
      break;
    }
    case Functor::kAnd:
    case Functor::kOr: {
      const bool is_and = e->functor() == Functor::kAnd;
      const Value absorbing = is_and ? Value::kZero : Value::kOne;
      const Value neutral = is_and ? Value::kOne : Value::kZero;
      const bool left_first = e->left()->size() <= e->right()->size();
      const Lqdag& a = left_first ? e->left() : e->right();
      const Lqdag& b = left_first ? e->right() : e->left();
      const Value va = value(a);
      if (va == absorbing) {
        v = absorbing;
        break;
      }
      const Value vb = value(b);
      if (vb == absorbing) {
        v = absorbing;
      } else if (va == neutral) {
        v = vb;
      } else if (vb == neutral) {
        v = va;
      } else {
        v = Value::kDiamond;
      }
      break;
    }
    case Functor::kExtend: v = value(e->inner()); break;
  }
  e->value_ = v;
  return v;
}

Lqdag LqdagEvaluator::child_at(const Lqdag& e, ChildIndex i) {
  const Value v = value(e);
  if (v != Value::kHalf && v != Value::kDiamond) {
    throw ContractViolation("child_at on a determined lazy node");
  }
  switch (e->functor()) {
    case Functor::kQtree:
    case Functor::kNot: {
      auto n = std::shared_ptr<LqdagNode>(new LqdagNode());
      n->functor_ = e->functor();
      n->attributes_ = e->attributes_;
      n->atom_ = e->atom_;
      n->tree_ = e->tree_;
      n->parent_ = *e->node_;
      n->pending_ = i;
      return n;
    }
    case Functor::kAnd:
    case Functor::kOr: {
      const Value neutral = e->functor() == Functor::kAnd ? Value::kOne : Value::kZero;
      if (value(e->left()) == neutral) return child_at(e->right(), i);
      if (value(e->right()) == neutral) return child_at(e->left(), i);
      auto n = std::shared_ptr<LqdagNode>(new LqdagNode());
      n->functor_ = e->functor();
      n->attributes_ = e->attributes_;
      n->left_ = child_at(e->left(), i);
      n->right_ = child_at(e->right(), i);
      n->size_ = 1 + n->left_->size() + n->right_->size();
      return n;
    }
    case Functor::kExtend: {
      auto n = std::shared_ptr<LqdagNode>(new LqdagNode());
      n->functor_ = Functor::kExtend;
      n->attributes_ = e->attributes_;
      n->table_ = e->table_;
      n->left_ = child_at(e->inner(), (*e->table_)[i]);
      n->size_ = 1 + n->left_->size();
      return n;
    }
  }
  throw ContractViolation("unknown functor");
}

MutableQuadtree LqdagEvaluator::scompletion(const Lqdag& e, unsigned height, JoinStats* stats) {
  const GridParams params(static_cast<unsigned>(e->attributes().size()), height);
  MutableQuadtree out(params);
  if (stats) stats->per_level.assign(height + 1, 0);
  scompletion_rec(e, out, out.root(), 0, stats);
  return out;
}

void LqdagEvaluator::scompletion_rec(const Lqdag& e, MutableQuadtree& out,
                                     MutableQuadtree::NodeId node, unsigned depth,
                                     JoinStats* stats) {
  if (stats && depth == 0) stats->record(0);
  const Value v = value(e);
  if (v == Value::kZero) {
    out.set_leaf(node, MutableQuadtree::Kind::kEmpty);
    return;
  }
  if (stats && depth > 0) stats->record(depth);
  if (v == Value::kOne) {
    out.set_leaf(node, MutableQuadtree::Kind::kFull);
    return;
  }
  if (depth >= out.params().height()) throw ContractViolation("undetermined cell");
  const MutableQuadtree::NodeId first = out.expand(node);
  for (ChildIndex i = 0; i < out.params().fanout(); ++i) {
    scompletion_rec(child_at(e, i), out, first + i, depth + 1, stats);
  }
}

namespace {

void print(const Lqdag& e, const std::vector<RelationSource>& atoms, std::string& out) {
  switch (e->functor()) {
    case Functor::kQtree:
    case Functor::kNot:
      out += e->functor() == Functor::kQtree ? "(QTREE," : "(NOT,";
      out += e->atom() < atoms.size() ? atoms[e->atom()].name : "?";
      out += ')';
      return;
    case Functor::kAnd:
    case Functor::kOr:
      out += e->functor() == Functor::kAnd ? "(AND," : "(OR,";
      print(e->left(), atoms, out);
      out += ',';
      print(e->right(), atoms, out);
      out += ')';
      return;
    case Functor::kExtend:
      out += "(EXTEND,";
      print(e->inner(), atoms, out);
      out += ",{" + e->attributes().to_string() + "})";
      return;
  }
}

bool contains_not(const Lqdag& e) {
  switch (e->functor()) {
    case Functor::kNot: return true;
    case Functor::kQtree: return false;
    case Functor::kExtend: return contains_not(e->inner());
    default: return contains_not(e->left()) || contains_not(e->right());
  }
}

class Normalizer {
 public:
  explicit Normalizer(const RelationResolver& resolve) : resolve_(resolve) {}

  NormalizedQuery run(const QueryAst& ast) {
    NormalizedQuery q;
    q.root = norm(ast, false);
    q.atoms = std::move(atoms_);
    q.height = height_.value_or(1);
    return q;
  }

 private:
  unsigned add_atom(RelationSource source) {
    auto it = ids_.find(source.name);
    if (it != ids_.end()) return it->second;
    if (!source.tree) throw SchemaError("relation '" + source.name + "' has no index");
    if (source.tree->params().dims() != source.attributes.size()) {
      throw SchemaError("relation '" + source.name + "' index does not match its attributes");
    }
    const unsigned h = source.tree->params().height();
    if (height_ && *height_ != h) {
      throw SchemaError("relation '" + source.name + "' uses a different grid height");
    }
    height_ = h;
    const auto id = static_cast<unsigned>(atoms_.size());
    ids_.emplace(source.name, id);
    attrs_.push_back(std::make_shared<const AttributeSet>(source.attributes));
    atoms_.push_back(std::move(source));
    return id;
  }

  Lqdag atom(unsigned id, bool neg) {
    const CompactQuadtree& tree = *atoms_[id].tree;
    return neg ? LqdagNode::negate(id, tree, attrs_[id]) : LqdagNode::qtree(id, tree, attrs_[id]);
  }

  Lqdag combine(Lqdag a, Lqdag b, bool conj) {
    return conj ? LqdagNode::conjunction(std::move(a), std::move(b))
                : LqdagNode::disjunction(std::move(a), std::move(b));
  }

  Lqdag norm(const QueryAst& ast, bool neg) {
    using K = QueryAst::Kind;
    switch (ast.kind) {
      case K::kRelation: return atom(add_atom(resolve_(ast.name)), neg);
      case K::kNot: return norm(ast.children.at(0), !neg);
      case K::kAnd: {
        Lqdag acc = norm(ast.children.at(0), neg);
        for (std::size_t k = 1; k < ast.children.size(); ++k) {
          acc = combine(std::move(acc), norm(ast.children[k], neg), !neg);
        }
        return acc;
      }
      case K::kOr:
        return combine(norm(ast.children.at(0), neg), norm(ast.children.at(1), neg), neg);
      case K::kDiff:
        return combine(norm(ast.children.at(0), neg), norm(ast.children.at(1), !neg), !neg);
      case K::kJoin: {
        Lqdag acc = norm(ast.children.at(0), neg);
        for (std::size_t k = 1; k < ast.children.size(); ++k) {
          Lqdag next = norm(ast.children[k], neg);
          auto all = std::make_shared<const AttributeSet>(
              AttributeSet::unite(acc->attributes(), next->attributes()));
          acc = combine(LqdagNode::extend(std::move(acc), all),
                        LqdagNode::extend(std::move(next), all), !neg);
        }
        return acc;
      }
      case K::kProject: return atom(materialize(ast), neg);
    }
    throw ContractViolation("unknown query node");
  }

  unsigned materialize(const QueryAst& ast) {
    const std::string name = ast.to_string();
    if (auto it = ids_.find(name); it != ids_.end()) return it->second;
    EvalResult inner = evaluate(ast.children.at(0), resolve_);
    const AttributeSet target(ast.attributes);
    RelationSource source;
    source.name = name;
    source.attributes = target;
    source.tree = std::make_shared<const CompactQuadtree>(
        project(inner.tree, inner.attributes, target));
    return add_atom(std::move(source));
  }

  const RelationResolver& resolve_;
  std::vector<RelationSource> atoms_;
  std::vector<std::shared_ptr<const AttributeSet>> attrs_;
  std::map<std::string, unsigned> ids_;
  std::optional<unsigned> height_;
};

}  // namespace

std::string NormalizedQuery::to_string() const {
  std::string out;
  if (root) print(root, atoms, out);
  return out;
}

bool NormalizedQuery::has_complement() const { return root && contains_not(root); }

NormalizedQuery normalize(const QueryAst& ast, const RelationResolver& resolve) {
  return Normalizer(resolve).run(ast);
}

EvalResult evaluate(const NormalizedQuery& query) {
  LqdagEvaluator eval(query.atoms.size());
  EvalResult result;
  result.attributes = query.root->attributes();
  result.tree = compact(eval.scompletion(query.root, query.height, &result.stats));
  result.counters = eval.counters();
  for (const auto& a : query.atoms) result.atom_names.push_back(a.name);
  return result;
}

EvalResult evaluate(const QueryAst& ast, const RelationResolver& resolve, EvalOptions options) {
  const NormalizedQuery query = normalize(ast, resolve);
  if (!options.allow_complement && query.has_complement()) {
    throw SchemaError("query needs the complement of a relation");
  }
  return evaluate(query);
}

EvalResult evaluate(const QueryAst& ast, const Catalog& catalog, EvalOptions options) {
  RelationResolver resolve = [&catalog](const std::string& name) {
    RelationSource source;
    source.name = name;
    source.attributes = catalog.meta(name).attributes;
    source.tree = catalog.tree(name);
    return source;
  };
  return evaluate(ast, resolve, options);
}

namespace {

class Projector {
 public:
  Projector(const CompactQuadtree& tree, std::shared_ptr<const ProjectionTable> table,
            MutableQuadtree& out)
      : tree_(tree), table_(std::move(table)), out_(out) {}

  void run(const std::vector<NodeRef>& nodes, MutableQuadtree::NodeId node) {
    bool any = false;
    for (const NodeRef& n : nodes) {
      if (n.value() == Value::kOne) {
        out_.set_leaf(node, MutableQuadtree::Kind::kFull);
        return;
      }
      any = any || n.value() == Value::kHalf;
    }
    if (!any) {
      out_.set_leaf(node, MutableQuadtree::Kind::kEmpty);
      return;
    }
    const ChildIndex fanout = out_.params().fanout();
    std::vector<std::vector<NodeRef>> buckets(fanout);
    for (const NodeRef& n : nodes) {
      if (n.value() != Value::kHalf) continue;
      for (ChildIndex j = 0; j < tree_.params().fanout(); ++j) {
        if (tree_.child_bit(n, j)) buckets[(*table_)[j]].push_back(tree_.child_at(n, j));
      }
    }
    const MutableQuadtree::NodeId first = out_.expand(node);
    for (ChildIndex i = 0; i < fanout; ++i) run(buckets[i], first + i);
  }

 private:
  const CompactQuadtree& tree_;
  std::shared_ptr<const ProjectionTable> table_;
  MutableQuadtree& out_;
};

}  // namespace

CompactQuadtree project(const CompactQuadtree& tree, const AttributeSet& attributes,
                        const AttributeSet& target) {
  if (target.empty()) throw SchemaError("projection onto no attributes");
  if (!target.is_subset_of(attributes)) {
    throw SchemaError("cannot project {" + attributes.to_string() + "} onto {" +
                      target.to_string() + "}");
  }
  if (tree.params().dims() != attributes.size()) {
    throw SchemaError("index does not match attributes {" + attributes.to_string() + "}");
  }
  const GridParams params(static_cast<unsigned>(target.size()), tree.params().height());
  MutableQuadtree out(params);
  Projector(tree, ProjectionTable::get(AttributeMask::embed(target, attributes)), out)
      .run({tree.root()}, out.root());
  return compact(out);
}

}  // namespace qdag
