#include "qdag/query.hpp"

#include <cctype>
#include <optional>
#include <utility>

#include "qdag/error.hpp"

namespace qdag {

QueryAst QueryAst::relation(std::string name) {
  QueryAst q;
  q.kind = Kind::kRelation;
  q.name = std::move(name);
  return q;
}

QueryAst QueryAst::negate(QueryAst operand) {
  QueryAst q;
  q.kind = Kind::kNot;
  q.children.push_back(std::move(operand));
  return q;
}

QueryAst QueryAst::conjunction(std::vector<QueryAst> operands) {
  QueryAst q;
  q.kind = Kind::kAnd;
  q.children = std::move(operands);
  return q;
}

QueryAst QueryAst::disjunction(QueryAst left, QueryAst right) {
  QueryAst q;
  q.kind = Kind::kOr;
  q.children.push_back(std::move(left));
  q.children.push_back(std::move(right));
  return q;
}

QueryAst QueryAst::join(std::vector<QueryAst> operands) {
  QueryAst q;
  q.kind = Kind::kJoin;
  q.children = std::move(operands);
  return q;
}

QueryAst QueryAst::difference(QueryAst left, QueryAst right) {
  QueryAst q;
  q.kind = Kind::kDiff;
  q.children.push_back(std::move(left));
  q.children.push_back(std::move(right));
  return q;
}

QueryAst QueryAst::project(std::vector<std::string> attributes, QueryAst operand) {
  QueryAst q;
  q.kind = Kind::kProject;
  q.attributes = std::move(attributes);
  q.children.push_back(std::move(operand));
  return q;
}

std::string QueryAst::to_string() const {
  auto list = [this](const char* keyword) {
    std::string out = keyword;
    out += '(';
    for (std::size_t i = 0; i < children.size(); ++i) {
      if (i > 0) out += ',';
      out += children[i].to_string();
    }
    return out + ')';
  };
  switch (kind) {
    case Kind::kRelation: return name;
    case Kind::kNot: return list("NOT");
    case Kind::kAnd: return list("AND");
    case Kind::kOr: return list("OR");
    case Kind::kJoin: return list("JOIN");
    case Kind::kDiff: return list("DIFF");
    case Kind::kProject: {
      std::string out = "PROJECT[";
      for (std::size_t i = 0; i < attributes.size(); ++i) {
        if (i > 0) out += ',';
        out += attributes[i];
      }
      return out + "]" + list("");
    }
  }
  return {};
}

namespace {

struct Token {
  enum class Type { kIdent, kLParen, kRParen, kLBracket, kRBracket, kComma, kEnd };
  Type type;
  std::string text;
  std::size_t line;
  std::size_t column;
};

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) { advance(); }

  QueryAst parse() {
    QueryAst q = expr();
    if (current_.type != Token::Type::kEnd) fail("unexpected '" + current_.text + "'");
    return q;
  }

 private:
  [[noreturn]] void fail(const std::string& message) const {
    throw ParseError(message, current_.line, current_.column);
  }

  void advance() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) {
      if (text_[pos_] == '\n') {
        ++line_;
        line_start_ = pos_ + 1;
      }
      ++pos_;
    }
    Token tok{Token::Type::kEnd, "end of input", line_, pos_ - line_start_ + 1};
    if (pos_ >= text_.size()) {
      current_ = tok;
      return;
    }
    const char c = text_[pos_];
    auto single = [&](Token::Type type) {
      tok.type = type;
      tok.text = std::string(1, c);
      ++pos_;
    };
    switch (c) {
      case '(': single(Token::Type::kLParen); break;
      case ')': single(Token::Type::kRParen); break;
      case '[': single(Token::Type::kLBracket); break;
      case ']': single(Token::Type::kRBracket); break;
      case ',': single(Token::Type::kComma); break;
      default:
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
          const std::size_t start = pos_;
          while (pos_ < text_.size() &&
                 (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
            ++pos_;
          }
          tok.type = Token::Type::kIdent;
          tok.text = std::string(text_.substr(start, pos_ - start));
        } else {
          current_ = tok;
          fail(std::string("unexpected character '") + c + "'");
        }
    }
    current_ = std::move(tok);
  }

  void expect(Token::Type type, const char* what) {
    if (current_.type != type) fail(std::string("expected ") + what + ", found '" + current_.text + "'");
    advance();
  }

  static std::optional<QueryAst::Kind> keyword(const std::string& word) {
    std::string upper;
    for (char c : word) upper += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    if (upper == "NOT") return QueryAst::Kind::kNot;
    if (upper == "AND") return QueryAst::Kind::kAnd;
    if (upper == "OR") return QueryAst::Kind::kOr;
    if (upper == "JOIN") return QueryAst::Kind::kJoin;
    if (upper == "DIFF") return QueryAst::Kind::kDiff;
    if (upper == "PROJECT") return QueryAst::Kind::kProject;
    return std::nullopt;
  }

  std::vector<QueryAst> operands() {
    expect(Token::Type::kLParen, "'('");
    std::vector<QueryAst> out;
    out.push_back(expr());
    while (current_.type == Token::Type::kComma) {
      advance();
      out.push_back(expr());
    }
    expect(Token::Type::kRParen, "')'");
    return out;
  }

  QueryAst expr() {
    if (current_.type != Token::Type::kIdent) fail("expected an expression, found '" + current_.text + "'");
    const Token head = current_;
    const auto kind = keyword(head.text);
    advance();
    if (!kind) return QueryAst::relation(head.text);

    auto arity_error = [&](const std::string& message) {
      throw ParseError(message, head.line, head.column);
    };
    QueryAst q;
    q.kind = *kind;
    switch (*kind) {
      case QueryAst::Kind::kProject: {
        expect(Token::Type::kLBracket, "'['");
        while (true) {
          if (current_.type != Token::Type::kIdent || keyword(current_.text)) {
            fail("expected an attribute name, found '" + current_.text + "'");
          }
          q.attributes.push_back(current_.text);
          advance();
          if (current_.type != Token::Type::kComma) break;
          advance();
        }
        expect(Token::Type::kRBracket, "']'");
        q.children = operands();
        if (q.children.size() != 1) arity_error("PROJECT takes exactly one operand");
        break;
      }
      case QueryAst::Kind::kNot:
        q.children = operands();
        if (q.children.size() != 1) arity_error("NOT takes exactly one operand");
        break;
      case QueryAst::Kind::kAnd:
      case QueryAst::Kind::kJoin:
        q.children = operands();
        if (q.children.size() < 2) arity_error(head.text + " takes at least two operands");
        break;
      case QueryAst::Kind::kOr:
      case QueryAst::Kind::kDiff:
        q.children = operands();
        if (q.children.size() != 2) arity_error(head.text + " takes exactly two operands");
        break;
      case QueryAst::Kind::kRelation: break;
    }
    return q;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
  std::size_t line_start_ = 0;
  Token current_{Token::Type::kEnd, "", 1, 1};
};

}  // namespace

QueryAst parse_query(std::string_view text) { return Parser(text).parse(); }

}  // namespace qdag
