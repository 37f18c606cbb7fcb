#pragma once

#include <cctype>
#include <cmath>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "proxthresh/expr.hpp"

namespace proxthresh {

/// Parse failure with the byte offset where it was detected.
class ParseError : public std::runtime_error {
 public:
  enum class Category { syntax, dimension, partition, semantic };

  ParseError(Category category, std::size_t position, const std::string& message)
      : std::runtime_error("parse error at position " + std::to_string(position) + ": " + message),
        category_(category),
        position_(position),
        message_(message) {}

  Category category() const { return category_; }
  std::size_t position() const { return position_; }
  const std::string& message() const { return message_; }

 private:
  Category category_;
  std::size_t position_;
  std::string message_;
};

namespace dsl {

/// Variable index for a DSL identifier: x,u -> 0; y,v -> 1; xN -> N-1.
inline std::optional<int> variable_index(std::string_view name) {
  if (name == "x" || name == "u") return 0;
  if (name == "y" || name == "v") return 1;
  if (name.size() >= 2 && name[0] == 'x') {
    int k = 0;
    for (char c : name.substr(1)) {
      if (!std::isdigit(static_cast<unsigned char>(c))) return std::nullopt;
      k = k * 10 + (c - '0');
      if (k > 1000000) return std::nullopt;
    }
    if (k >= 1) return k - 1;
  }
  return std::nullopt;
}

struct Token {
  enum class Type { number, ident, symbol, end } type = Type::end;
  std::string text;
  double number = 0.0;
  std::size_t pos = 0;
};

inline std::vector<Token> tokenize(std::string_view s) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < s.size()) {
    const char c = s[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    Token t;
    t.pos = i;
    if (std::isdigit(static_cast<unsigned char>(c)) || (c == '.' && i + 1 < s.size() && std::isdigit(static_cast<unsigned char>(s[i + 1])))) {
      std::size_t j = i;
      while (j < s.size() && (std::isdigit(static_cast<unsigned char>(s[j])) || s[j] == '.')) ++j;
      if (j < s.size() && (s[j] == 'e' || s[j] == 'E')) {
        std::size_t k = j + 1;
        if (k < s.size() && (s[k] == '+' || s[k] == '-')) ++k;
        if (k < s.size() && std::isdigit(static_cast<unsigned char>(s[k]))) {
          while (k < s.size() && std::isdigit(static_cast<unsigned char>(s[k]))) ++k;
          j = k;
        }
      }
      t.type = Token::Type::number;
      t.text = std::string(s.substr(i, j - i));
      try {
        t.number = parse_double(t.text);
      } catch (const std::invalid_argument&) {
        throw ParseError(ParseError::Category::syntax, i, "malformed number '" + t.text + "'");
      }
      i = j;
    } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t j = i;
      while (j < s.size() && (std::isalnum(static_cast<unsigned char>(s[j])) || s[j] == '_')) ++j;
      t.type = Token::Type::ident;
      t.text = std::string(s.substr(i, j - i));
      i = j;
    } else {
      static constexpr std::string_view two[] = {"<=", ">="};
      static constexpr std::string_view one = "+-*/^()[]{},;:&<>";
      t.type = Token::Type::symbol;
      if (i + 1 < s.size() && (s.substr(i, 2) == two[0] || s.substr(i, 2) == two[1])) {
        t.text = std::string(s.substr(i, 2));
        i += 2;
      } else if (one.find(c) != std::string_view::npos) {
        t.text = std::string(1, c);
        ++i;
      } else {
        throw ParseError(ParseError::Category::syntax, i, std::string("unexpected character '") + c + "'");
      }
    }
    out.push_back(std::move(t));
  }
  Token end;
  end.pos = s.size();
  out.push_back(end);
  return out;
}

struct SNode;
using SNodePtr = std::unique_ptr<SNode>;

struct Inequality {
  SNodePtr lhs;
  std::string op;
  SNodePtr rhs;
  std::size_t pos = 0;
};

struct Condition {
  bool always = false;
  std::vector<Inequality> parts;
  std::size_t pos = 0;
};

struct IntervalSpec {
  double lo = -kInf, hi = kInf;
  bool lo_closed = false, hi_closed = false;
};

/// Syntax tree produced by the parser before lowering.
struct SNode {
  enum class Kind { number, var, neg, add, mul, div, pow, call, norm, ind_interval, ind_set, piecewise, quad_lit, affine_lit };
  Kind kind = Kind::number;
  std::size_t pos = 0;
  double number = 0.0;
  std::string name;               // var name / call name
  std::vector<SNodePtr> kids;     // operands, call arguments, piecewise pieces, literal entries
  std::vector<int> signs;         // add: +1 / -1 per kid
  std::vector<Condition> conds;   // piecewise cells / ind_set (one)
  IntervalSpec interval;
  std::vector<std::size_t> groups;  // literal group sizes
};

class Parser {
 public:
  explicit Parser(std::string_view text) : toks_(tokenize(text)) {}

  SNodePtr parse_all() {
    auto e = expr();
    if (peek().type != Token::Type::end) fail("unexpected '" + peek().text + "'");
    return e;
  }

 private:
  std::vector<Token> toks_;
  std::size_t i_ = 0;

  const Token& peek() const { return toks_[i_]; }
  Token next() { return toks_[i_ < toks_.size() - 1 ? i_++ : i_]; }
  bool is_sym(std::string_view s) const { return peek().type == Token::Type::symbol && peek().text == s; }
  bool is_ident(std::string_view s) const { return peek().type == Token::Type::ident && peek().text == s; }
  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError(ParseError::Category::syntax, peek().pos, msg);
  }
  void expect(std::string_view s) {
    if (!is_sym(s)) fail("expected '" + std::string(s) + "'" + (peek().type == Token::Type::end ? " before end of input" : ", found '" + peek().text + "'"));
    next();
  }
  static SNodePtr node(SNode::Kind k, std::size_t pos) {
    auto n = std::make_unique<SNode>();
    n->kind = k;
    n->pos = pos;
    return n;
  }

  SNodePtr expr() {
    const std::size_t pos = peek().pos;
    auto first = term();
    if (!is_sym("+") && !is_sym("-")) return first;
    auto n = node(SNode::Kind::add, pos);
    n->kids.push_back(std::move(first));
    n->signs.push_back(1);
    while (is_sym("+") || is_sym("-")) {
      const int sign = next().text == "+" ? 1 : -1;
      n->kids.push_back(term());
      n->signs.push_back(sign);
    }
    return n;
  }

  SNodePtr term() {
    auto lhs = unary();
    while (is_sym("*") || is_sym("/")) {
      const Token op = next();
      auto n = node(op.text == "*" ? SNode::Kind::mul : SNode::Kind::div, op.pos);
      n->kids.push_back(std::move(lhs));
      n->kids.push_back(unary());
      lhs = std::move(n);
    }
    return lhs;
  }

  SNodePtr unary() {
    if (is_sym("-")) {
      const std::size_t pos = next().pos;
      auto n = node(SNode::Kind::neg, pos);
      n->kids.push_back(unary());
      return n;
    }
    if (is_sym("+")) {
      next();
      return unary();
    }
    return power();
  }

  SNodePtr power() {
    auto base = primary();
    if (is_sym("^")) {
      const std::size_t pos = next().pos;
      auto n = node(SNode::Kind::pow, pos);
      n->kids.push_back(std::move(base));
      n->kids.push_back(unary());
      return n;
    }
    return base;
  }

  double signed_bound() {
    double sign = 1.0;
    if (is_sym("-")) {
      next();
      sign = -1.0;
    } else if (is_sym("+")) {
      next();
    }
    if (is_ident("inf")) {
      next();
      return sign * kInf;
    }
    if (peek().type != Token::Type::number) fail("expected a number or inf");
    return sign * next().number;
  }

  Condition condition() {
    Condition c;
    c.pos = peek().pos;
    if (is_ident("true")) {
      next();
      c.always = true;
      return c;
    }
    while (true) {
      Inequality q;
      q.pos = peek().pos;
      q.lhs = expr();
      if (!(is_sym("<") || is_sym("<=") || is_sym(">") || is_sym(">="))) fail("expected a comparison operator");
      q.op = next().text;
      q.rhs = expr();
      c.parts.push_back(std::move(q));
      if (!is_sym("&")) break;
      next();
    }
    return c;
  }

  SNodePtr primary() {
    const Token t = peek();
    if (t.type == Token::Type::number) {
      next();
      auto n = node(SNode::Kind::number, t.pos);
      n->number = t.number;
      return n;
    }
    if (is_sym("(")) {
      next();
      auto e = expr();
      expect(")");
      return e;
    }
    if (t.type != Token::Type::ident) {
      if (t.type == Token::Type::end) fail("unexpected end of input");
      fail("unexpected '" + t.text + "'");
    }
    next();
    const std::string& id = t.text;
    if (id == "inf") {
      auto n = node(SNode::Kind::number, t.pos);
      n->number = kInf;
      return n;
    }
    if (variable_index(id)) {
      auto n = node(SNode::Kind::var, t.pos);
      n->name = id;
      return n;
    }
    if (id == "norm") return node(SNode::Kind::norm, t.pos);
    if (id == "sin" || id == "cos" || id == "atan" || id == "tanh" || id == "abs") {
      auto n = node(SNode::Kind::call, t.pos);
      n->name = id;
      expect("(");
      n->kids.push_back(expr());
      expect(")");
      return n;
    }
    if (id == "max" || id == "compose" || id == "scale") {
      auto n = node(SNode::Kind::call, t.pos);
      n->name = id;
      expect("(");
      n->kids.push_back(expr());
      while (is_sym(",")) {
        next();
        n->kids.push_back(expr());
      }
      expect(")");
      if ((id == "compose" || id == "scale") && n->kids.size() != 2)
        throw ParseError(ParseError::Category::syntax, t.pos, id + " takes exactly two arguments");
      return n;
    }
    if (id == "ind") {
      if (is_sym("{")) {
        next();
        auto n = node(SNode::Kind::ind_set, t.pos);
        n->conds.push_back(condition());
        expect("}");
        return n;
      }
      if (is_sym("[") || is_sym("(")) {
        auto n = node(SNode::Kind::ind_interval, t.pos);
        n->interval.lo_closed = next().text == "[";
        n->interval.lo = signed_bound();
        expect(",");
        n->interval.hi = signed_bound();
        if (!(is_sym("]") || is_sym(")"))) fail("expected ']' or ')'");
        n->interval.hi_closed = next().text == "]";
        return n;
      }
      fail("expected an interval or '{' after ind");
    }
    if (id == "piecewise") {
      auto n = node(SNode::Kind::piecewise, t.pos);
      expect("{");
      do {
        if (is_sym("}")) break;
        n->conds.push_back(condition());
        expect(":");
        n->kids.push_back(expr());
        if (!is_sym(";")) break;
        next();
      } while (true);
      expect("}");
      if (n->kids.empty()) throw ParseError(ParseError::Category::syntax, t.pos, "piecewise needs at least one cell");
      return n;
    }
    if (id == "quad" || id == "affine") {
      auto n = node(id == "quad" ? SNode::Kind::quad_lit : SNode::Kind::affine_lit, t.pos);
      expect("(");
      std::size_t count = 0;
      while (true) {
        n->kids.push_back(expr());
        ++count;
        if (is_sym(",")) {
          next();
          continue;
        }
        n->groups.push_back(count);
        count = 0;
        if (is_sym(";")) {
          next();
          continue;
        }
        break;
      }
      expect(")");
      return n;
    }
    throw ParseError(ParseError::Category::syntax, t.pos, "unknown identifier '" + id + "'");
  }
};

/// Numeric value of a variable-free arithmetic subtree.
inline std::optional<double> numeric_value(const SNode& n) {
  using K = SNode::Kind;
  switch (n.kind) {
    case K::number: return n.number;
    case K::neg: {
      auto v = numeric_value(*n.kids[0]);
      return v ? std::optional<double>(-*v) : std::nullopt;
    }
    case K::add: {
      double s = 0.0;
      for (std::size_t i = 0; i < n.kids.size(); ++i) {
        auto v = numeric_value(*n.kids[i]);
        if (!v) return std::nullopt;
        s += n.signs[i] * *v;
      }
      return s;
    }
    case K::mul:
    case K::div:
    case K::pow: {
      auto a = numeric_value(*n.kids[0]);
      auto b = numeric_value(*n.kids[1]);
      if (!a || !b) return std::nullopt;
      if (n.kind == K::mul) return *a * *b;
      if (n.kind == K::div) return *a / *b;
      return std::pow(*a, *b);
    }
    default: return std::nullopt;
  }
}

/// Lowers a syntax tree to an expression over R^dim.
class Lowering {
 public:
  static int required_dim(const SNode& n) {
    using K = SNode::Kind;
    int d = 0;
    if (n.kind == K::var) d = *variable_index(n.name) + 1;
    if (n.kind == K::quad_lit || n.kind == K::affine_lit) {
      if (n.groups.size() >= 2) d = static_cast<int>(n.groups[n.groups.size() - 2]);
      if (n.kind == K::affine_lit && !n.groups.empty()) d = static_cast<int>(n.groups.front());
    }
    const bool is_compose = n.kind == K::call && n.name == "compose";
    for (std::size_t i = 0; i < n.kids.size(); ++i) {
      if (is_compose && i == 0) continue;
      d = std::max(d, required_dim(*n.kids[i]));
    }
    for (const auto& c : n.conds)
      for (const auto& q : c.parts) d = std::max({d, required_dim(*q.lhs), required_dim(*q.rhs)});
    return d;
  }

  explicit Lowering(int dim) : dim_(dim) {}

  Expr lower(const SNode& n) const {
    try {
      return lower_impl(n);
    } catch (const ExprError& e) {
      throw ParseError(ParseError::Category::semantic, n.pos, e.what());
    }
  }

 private:
  int dim_;

  [[noreturn]] static void fail(const SNode& n, const std::string& msg,
                                ParseError::Category cat = ParseError::Category::semantic) {
    throw ParseError(cat, n.pos, msg);
  }

  int var_of(const SNode& n) const {
    const int k = *variable_index(n.name);
    if (k >= dim_) fail(n, "variable '" + n.name + "' exceeds dimension " + std::to_string(dim_), ParseError::Category::dimension);
    return k;
  }

  double numeric(const SNode& n, const char* what) const {
    auto v = numeric_value(n);
    if (!v) fail(n, std::string(what) + " must be a numeric constant");
    return *v;
  }

  Expr lower_impl(const SNode& n) const {
    using K = SNode::Kind;
    switch (n.kind) {
      case K::number:
        if (!std::isfinite(n.number)) fail(n, "inf is only allowed as an interval bound");
        return constant(n.number, dim_);
      case K::var: {
        std::vector<double> a(dim_, 0.0);
        a[var_of(n)] = 1.0;
        return affine(std::move(a), 0.0);
      }
      case K::neg: return scaled(lower(*n.kids[0]), -1.0);
      case K::add: {
        std::vector<Expr> ts;
        for (std::size_t i = 0; i < n.kids.size(); ++i) {
          Expr t = lower(*n.kids[i]);
          ts.push_back(n.signs[i] < 0 ? scaled(t, -1.0) : t);
        }
        return sum(std::move(ts));
      }
      case K::mul: {
        const auto a = numeric_value(*n.kids[0]);
        const auto b = numeric_value(*n.kids[1]);
        if (a && b) return constant(*a * *b, dim_);
        if (a) return scaled(lower(*n.kids[1]), *a);
        if (b) return scaled(lower(*n.kids[0]), *b);
        fail(n, "products of two non-constant expressions are not supported");
      }
      case K::div: {
        const double b = numeric(*n.kids[1], "divisor");
        if (b == 0.0) fail(n, "division by zero");
        if (auto a = numeric_value(*n.kids[0])) return constant(*a / b, dim_);
        return scaled(lower(*n.kids[0]), 1.0 / b);
      }
      case K::pow: return lower_pow(n);
      case K::norm: return abs_norm(1.0, -1, dim_);
      case K::call: return lower_call(n);
      case K::ind_interval: {
        if (dim_ != 1) fail(n, "interval indicators require a one-dimensional expression", ParseError::Category::dimension);
        std::vector<HalfSpace> hs;
        const auto& iv = n.interval;
        if (iv.lo > -kInf) hs.push_back(make_halfspace({-1.0}, -iv.lo, !iv.lo_closed));
        if (iv.hi < kInf) hs.push_back(make_halfspace({1.0}, iv.hi, !iv.hi_closed));
        return indicator(Polyhedron(1, std::move(hs)));
      }
      case K::ind_set: return indicator(polyhedron(n.conds.front()));
      case K::piecewise: {
        std::vector<Cell> cells;
        std::vector<Expr> pieces;
        for (std::size_t i = 0; i < n.kids.size(); ++i) {
          cells.emplace_back(polyhedron(n.conds[i]));
          pieces.push_back(lower(*n.kids[i]));
        }
        RegionPartition part(std::move(cells));
        try {
          validate_partition(part);
        } catch (const PartitionError& e) {
          fail(n, std::string("invalid partition: ") + e.what(), ParseError::Category::partition);
        }
        return piecewise(std::move(part), std::move(pieces));
      }
      case K::quad_lit: {
        const auto& g = n.groups;
        const int d = g.size() == 3 ? static_cast<int>(g[1]) : -1;
        if (d != dim_ || g[0] != static_cast<std::size_t>(d * (d + 1) / 2) || g[2] != 1)
          fail(n, "quad(...) expects n(n+1)/2 hessian entries; n linear entries; one offset, with n = dimension");
        std::vector<double> h(d * d, 0.0), b(d);
        std::size_t k = 0;
        for (int i = 0; i < d; ++i)
          for (int j = i; j < d; ++j) h[i * d + j] = h[j * d + i] = numeric(*n.kids[k++], "quad entry");
        for (int i = 0; i < d; ++i) b[i] = numeric(*n.kids[k++], "quad entry");
        return quadratic(std::move(h), std::move(b), numeric(*n.kids[k], "quad entry"));
      }
      case K::affine_lit: {
        const auto& g = n.groups;
        if (g.size() != 2 || g[0] != static_cast<std::size_t>(dim_) || g[1] != 1)
          fail(n, "affine(...) expects n slope entries and one offset, with n = dimension");
        std::vector<double> a(dim_);
        for (int i = 0; i < dim_; ++i) a[i] = numeric(*n.kids[i], "affine entry");
        return affine(std::move(a), numeric(*n.kids[dim_], "affine entry"));
      }
    }
    fail(n, "unsupported syntax");
  }

  Expr lower_pow(const SNode& n) const {
    const SNode& base = *n.kids[0];
    const double p = numeric(*n.kids[1], "exponent");
    if (auto b = numeric_value(base)) return constant(std::pow(*b, p), dim_);
    if (base.kind == SNode::Kind::var) {
      const int k = var_of(base);
      if (p < 0 || p != std::floor(p)) fail(n, "variables take nonnegative integer exponents; use abs(x)^p for real p");
      if (p == 0) return constant(1.0, dim_);
      if (p == 2) {
        std::vector<double> h(dim_ * dim_, 0.0);
        h[k * dim_ + k] = 2.0;
        return quadratic(std::move(h), std::vector<double>(dim_, 0.0), 0.0);
      }
      const bool odd = static_cast<long long>(p) % 2 != 0;
      return power(1.0, p, odd, k, dim_);
    }
    if (base.kind == SNode::Kind::call && base.name == "abs" && base.kids[0]->kind == SNode::Kind::var) {
      if (p < 1) fail(n, "abs(x)^p requires p >= 1");
      const int k = var_of(*base.kids[0]);
      return power(1.0, p, false, k, dim_);
    }
    fail(n, "exponents apply only to a variable or abs(variable)");
  }

  Expr lower_call(const SNode& n) const {
    const std::string& f = n.name;
    if (f == "sin" || f == "cos" || f == "atan" || f == "tanh") {
      const BoundedKind k = f == "sin" ? BoundedKind::sin
                          : f == "cos" ? BoundedKind::cos
                          : f == "atan" ? BoundedKind::atan
                                        : BoundedKind::tanh;
      const SNode& arg = *n.kids[0];
      if (arg.kind == SNode::Kind::var) return bounded(k, 1.0, var_of(arg), dim_);
      return compose(bounded(k, 1.0, 0, 1), lower(arg));
    }
    if (f == "abs") {
      const SNode& arg = *n.kids[0];
      if (arg.kind == SNode::Kind::var) return abs_norm(1.0, var_of(arg), dim_);
      return compose(abs_norm(1.0, 0, 1), lower(arg));
    }
    if (f == "max") {
      std::vector<Expr> ts;
      for (const auto& k : n.kids) ts.push_back(lower(*k));
      return max_of(std::move(ts));
    }
    if (f == "scale") {
      const double lambda = numeric(*n.kids[0], "scale factor");
      if (!(lambda >= 0.0)) fail(*n.kids[0], "scale factor must be nonnegative");
      return scale(lambda, lower(*n.kids[1]));
    }
    if (f == "compose") {
      const SNode& outer = *n.kids[0];
      if (required_dim(outer) > 1)
        fail(outer, "the outer function of compose must be univariate (use u or x)", ParseError::Category::dimension);
      return compose(Lowering(1).lower(outer), lower(*n.kids[1]));
    }
    fail(n, "unknown function '" + f + "'");
  }

  static HalfSpace make_halfspace(std::vector<double> normal, double bound, bool strict) {
    for (double& a : normal)
      if (a == 0.0) a = 0.0;
    if (bound == 0.0) bound = 0.0;
    return HalfSpace{std::move(normal), bound, strict};
  }

  Polyhedron polyhedron(const Condition& c) const {
    std::vector<HalfSpace> hs;
    if (!c.always) {
      for (const auto& q : c.parts) {
        const Expr l = lower(*q.lhs);
        const Expr r = lower(*q.rhs);
        const auto& la = l.attributes().affine;
        const auto& ra = r.attributes().affine;
        if (!la || !ra) throw ParseError(ParseError::Category::semantic, q.pos, "conditions must be linear inequalities");
        std::vector<double> a(dim_);
        for (int k = 0; k < dim_; ++k) a[k] = la->slope[k] - ra->slope[k];
        double off = la->offset - ra->offset;
        const bool ge = q.op == ">=" || q.op == ">";
        if (ge) {
          for (double& v : a) v = -v;
          off = -off;
        }
        hs.push_back(make_halfspace(std::move(a), -off, q.op == "<" || q.op == ">"));
      }
    }
    return Polyhedron(dim_, std::move(hs));
  }
};

}  // namespace dsl

/// Parses DSL text into an expression. The dimension is inferred from the
/// variables used (x,y or x1..xn) unless given explicitly.
inline Expr parse_expr(std::string_view text, std::optional<int> dim = std::nullopt) {
  dsl::Parser parser(text);
  const dsl::SNodePtr tree = parser.parse_all();
  const int needed = std::max(1, dsl::Lowering::required_dim(*tree));
  if (dim && *dim < needed)
    throw ParseError(ParseError::Category::dimension, 0,
                     "expression uses " + std::to_string(needed) + " variables but dimension " + std::to_string(*dim) + " was requested");
  return dsl::Lowering(dim.value_or(needed)).lower(*tree);
}

}  // namespace proxthresh
