#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace qdag {

// Surface relational-algebra expression.
//
//   expr := IDENT
//         | NOT "(" expr ")"
//         | (AND | JOIN) "(" expr ("," expr)+ ")"
//         | (OR | DIFF) "(" expr "," expr ")"
//         | PROJECT "[" IDENT ("," IDENT)* "]" "(" expr ")"
//
// Keywords are case-insensitive and reserved.
struct QueryAst {
  enum class Kind { kRelation, kNot, kAnd, kOr, kJoin, kDiff, kProject };

  Kind kind = Kind::kRelation;
  std::string name;                     // kRelation
  std::vector<std::string> attributes;  // kProject
  std::vector<QueryAst> children;

  static QueryAst relation(std::string name);
  static QueryAst negate(QueryAst operand);
  static QueryAst conjunction(std::vector<QueryAst> operands);
  static QueryAst disjunction(QueryAst left, QueryAst right);
  static QueryAst join(std::vector<QueryAst> operands);
  static QueryAst difference(QueryAst left, QueryAst right);
  static QueryAst project(std::vector<std::string> attributes, QueryAst operand);

  // Canonical surface syntax; parse_query(to_string()) reproduces the tree.
  std::string to_string() const;

  friend bool operator==(const QueryAst&, const QueryAst&) = default;
};

// Throws ParseError (with line and column) on syntax and arity errors.
QueryAst parse_query(std::string_view text);

}  // namespace qdag
