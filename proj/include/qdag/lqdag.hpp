#pragma once

// Lazy qdags: expression trees over quadtrees with functors QTREE, NOT, AND,
// OR and EXTEND that can be navigated like a quadtree without evaluating the
// whole formula. evaluate() unfolds the super-completion of a normalized
// formula and compacts it into the output quadtree.

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "qdag/grid.hpp"
#include "qdag/join.hpp"
#include "qdag/query.hpp"
#include "qdag/quadtree.hpp"
#include "qdag/value.hpp"

namespace qdag {

class Catalog;

enum class Functor : std::uint8_t { kQtree, kNot, kAnd, kOr, kExtend };

class LqdagNode;
using Lqdag = std::shared_ptr<const LqdagNode>;

// One node of a lazy expression. QTREE and NOT wrap a quadtree node (the
// atom); NOT never wraps a compound expression. A child of an atom is kept
// as (parent, index) and only looked up when its value is first needed.
class LqdagNode {
 public:
  static Lqdag qtree(unsigned atom, const CompactQuadtree& tree,
                     std::shared_ptr<const AttributeSet> attributes);
  static Lqdag negate(unsigned atom, const CompactQuadtree& tree,
                      std::shared_ptr<const AttributeSet> attributes);
  // Operands must share their attribute set.
  static Lqdag conjunction(Lqdag left, Lqdag right);
  static Lqdag disjunction(Lqdag left, Lqdag right);
  // `target` must contain the inner attributes; equal sets return `inner`
  // and nested extensions collapse into one.
  static Lqdag extend(Lqdag inner, std::shared_ptr<const AttributeSet> target);

  Functor functor() const { return functor_; }
  const AttributeSet& attributes() const { return *attributes_; }
  const std::shared_ptr<const AttributeSet>& attributes_ptr() const { return attributes_; }
  const Lqdag& left() const { return left_; }
  const Lqdag& right() const { return right_; }
  const Lqdag& inner() const { return left_; }
  unsigned atom() const { return atom_; }
  bool is_atom() const { return functor_ == Functor::kQtree || functor_ == Functor::kNot; }
  // Number of functor nodes in the expression.
  std::size_t size() const { return size_; }

 private:
  friend class LqdagEvaluator;
  LqdagNode() = default;

  Functor functor_ = Functor::kQtree;
  std::shared_ptr<const AttributeSet> attributes_;
  Lqdag left_;
  Lqdag right_;
  std::size_t size_ = 1;

  // Atoms.
  unsigned atom_ = 0;
  const CompactQuadtree* tree_ = nullptr;
  NodeRef parent_;
  std::optional<ChildIndex> pending_;
  mutable std::optional<NodeRef> node_;

  // EXTEND.
  std::shared_ptr<const ProjectionTable> table_;

  mutable std::optional<Value> value_;
};

// Per base quadtree (atom id) counts of node lookups.
struct AccessCounters {
  std::vector<std::uint64_t> value_calls;
  std::vector<std::uint64_t> child_calls;

  std::uint64_t total(unsigned atom) const {
    return (atom < value_calls.size() ? value_calls[atom] : 0) +
           (atom < child_calls.size() ? child_calls[atom] : 0);
  }
};

class LqdagEvaluator {
 public:
  explicit LqdagEvaluator(std::size_t atom_count = 0);

  // Short-circuit value tables of AND/OR/NOT/EXTEND. For AND and OR the
  // smaller operand is inspected first and the other one is skipped when the
  // first already decides the result.
  Value value(const Lqdag& e);

  // Requires value(e) to be 1/2 or <>. Drops operands whose value already
  // fixes the result (AND with a full side, OR with an empty side).
  Lqdag child_at(const Lqdag& e, ChildIndex i);

  // Unfolds the super-completion, reading <> as 1/2 and never pruning.
  MutableQuadtree scompletion(const Lqdag& e, unsigned height, JoinStats* stats = nullptr);

  const AccessCounters& counters() const { return counters_; }
  void reset_counters();

 private:
  void scompletion_rec(const Lqdag& e, MutableQuadtree& out, MutableQuadtree::NodeId node,
                       unsigned depth, JoinStats* stats);
  const NodeRef& resolve(const LqdagNode& atom);
  void count(std::vector<std::uint64_t>& v, unsigned atom);

  AccessCounters counters_;
};

inline Value lvalue(const Lqdag& e, LqdagEvaluator& eval) { return eval.value(e); }
inline Lqdag lchild_at(const Lqdag& e, ChildIndex i, LqdagEvaluator& eval) {
  return eval.child_at(e, i);
}

// A relation available to a formula.
struct RelationSource {
  std::string name;
  std::shared_ptr<const CompactQuadtree> tree;
  AttributeSet attributes;
};

// Throws SchemaError for unknown names.
using RelationResolver = std::function<RelationSource(const std::string&)>;

struct NormalizedQuery {
  Lqdag root;
  // Atom id -> relation (projections appear as materialized relations).
  std::vector<RelationSource> atoms;
  unsigned height = 1;

  // e.g. (AND,(EXTEND,(QTREE,R),{A,B,C}),(EXTEND,(NOT,T),{A,B,C}))
  std::string to_string() const;
  bool has_complement() const;
};

// Rewrites JOIN into EXTEND+AND and DIFF into AND+NOT, pushes NOT down to the
// quadtrees (De Morgan, double negation, NOT through EXTEND) and folds n-ary
// AND/JOIN left to right. PROJECT subterms are evaluated eagerly and enter
// the formula as materialized quadtrees.
NormalizedQuery normalize(const QueryAst& ast, const RelationResolver& resolve);

struct EvalOptions {
  // When false, formulas that still contain a NOT atom after normalization
  // are rejected with SchemaError.
  bool allow_complement = true;
};

struct EvalResult {
  CompactQuadtree tree;
  AttributeSet attributes;
  JoinStats stats;
  AccessCounters counters;
  std::vector<std::string> atom_names;
};

EvalResult evaluate(const NormalizedQuery& query);
EvalResult evaluate(const QueryAst& ast, const RelationResolver& resolve, EvalOptions options = {});
EvalResult evaluate(const QueryAst& ast, const Catalog& catalog, EvalOptions options = {});

// Projection by child-wise OR: output child i' merges every input child j
// whose index projects to i'. Throws SchemaError when `target` is empty or
// not contained in `attributes`.
CompactQuadtree project(const CompactQuadtree& tree, const AttributeSet& attributes,
                        const AttributeSet& target);

}  // namespace qdag
