#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "proxthresh/expr.hpp"

namespace proxthresh {

namespace dsl {

/// DSL name of variable k in an n-dimensional expression.
inline std::string variable_name(int k, int dim, bool outer = false) {
  if (outer) return "u";
  if (dim <= 2) return k == 0 ? "x" : "y";
  return "x" + std::to_string(k + 1);
}

inline std::string coefficient_prefix(double k) {
  if (k == 1.0) return "";
  if (k == -1.0) return "-";
  return format_double(k) + "*";
}

/// "<= b" style text for one halfspace, re-parsing to the identical constraint.
inline std::string halfspace_text(const HalfSpace& h, int dim, bool outer) {
  const char* le = h.strict ? " < " : " <= ";
  const char* ge = h.strict ? " > " : " >= ";
  int nonzero = 0, last = -1;
  for (int k = 0; k < dim; ++k)
    if (h.normal[k] != 0.0) {
      ++nonzero;
      last = k;
    }
  if (nonzero == 1 && (h.normal[last] == 1.0 || h.normal[last] == -1.0)) {
    const std::string v = variable_name(last, dim, outer);
    if (h.normal[last] == 1.0) return v + le + format_double(h.bound);
    return v + ge + format_double(-h.bound + 0.0);
  }
  std::string s;
  bool first = true;
  for (int k = 0; k < dim; ++k) {
    const double a = h.normal[k];
    if (a == 0.0 && !(nonzero == 0 && k == 0)) continue;
    const std::string v = variable_name(k, dim, outer);
    if (first) {
      s += format_double(a) + "*" + v;
      first = false;
    } else {
      s += (a < 0 ? " - " : " + ") + format_double(std::abs(a)) + "*" + v;
    }
  }
  return s + le + format_double(h.bound);
}

inline std::string cell_text(const Cell& c, bool outer) {
  const auto* p = c.polyhedron();
  if (!p) throw ExprError("cells given by membership predicates have no DSL form");
  if (p->is_whole_space()) return "true";
  std::string s;
  for (std::size_t i = 0; i < p->constraints().size(); ++i) {
    if (i) s += " & ";
    s += halfspace_text(p->constraints()[i], p->dim(), outer);
  }
  return s;
}

inline std::string to_text(const Expr& e, bool outer);

inline std::string sum_text(const std::vector<Expr>& terms, bool outer) {
  std::string s;
  for (std::size_t i = 0; i < terms.size(); ++i) {
    std::string t = to_text(terms[i], outer);
    if (terms[i].kind() == NodeKind::sum) t = "(" + t + ")";
    if (i == 0) {
      s = t;
    } else if (!t.empty() && t.front() == '-') {
      s += " - " + t.substr(1);
    } else {
      s += " + " + t;
    }
  }
  return s;
}

inline std::string list_text(const std::vector<Expr>& es, bool outer) {
  std::string s;
  for (std::size_t i = 0; i < es.size(); ++i) s += (i ? ", " : "") + to_text(es[i], outer);
  return s;
}

inline std::string to_text(const Expr& e, bool outer) {
  const int n = e.dim();
  auto var = [&](int k) { return variable_name(k, n, outer); };
  switch (e.kind()) {
    case NodeKind::constant: return format_double(e.as<ConstantNode>()->value);
    case NodeKind::affine: {
      const auto& a = *e.as<AffineNode>();
      int nonzero = 0, last = -1;
      for (int k = 0; k < n; ++k)
        if (a.slope[k] != 0.0) {
          ++nonzero;
          last = k;
        }
      if (nonzero == 1 && a.offset == 0.0) return coefficient_prefix(a.slope[last]) + var(last);
      std::string s = "affine(";
      for (int k = 0; k < n; ++k) s += (k ? ", " : "") + format_double(a.slope[k]);
      return s + "; " + format_double(a.offset) + ")";
    }
    case NodeKind::quadratic: {
      const auto& q = *e.as<QuadraticNode>();
      int diag = -1, nonzero = 0;
      for (int i = 0; i < n * n; ++i)
        if (q.hessian[i] != 0.0) {
          ++nonzero;
          if (i / n == i % n) diag = i / n;
        }
      bool plain = nonzero == 1 && diag >= 0 && q.offset == 0.0;
      for (double b : q.linear) plain = plain && b == 0.0;
      if (plain) return coefficient_prefix(q.hessian[diag * n + diag] / 2.0) + var(diag) + "^2";
      std::string s = "quad(";
      bool first = true;
      for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
          s += (first ? "" : ", ") + format_double(q.hessian[i * n + j]);
          first = false;
        }
      s += ";";
      for (int i = 0; i < n; ++i) s += (i ? ", " : " ") + format_double(q.linear[i]);
      return s + "; " + format_double(q.offset) + ")";
    }
    case NodeKind::power: {
      const auto& p = *e.as<PowerNode>();
      const bool integral_even = p.exponent == std::floor(p.exponent) && p.exponent >= 4 &&
                                 static_cast<long long>(p.exponent) % 2 == 0;
      const std::string base = p.odd || integral_even ? var(p.var) : "abs(" + var(p.var) + ")";
      return coefficient_prefix(p.coef) + base + "^" + format_double(p.exponent);
    }
    case NodeKind::abs: {
      const auto& a = *e.as<AbsNode>();
      return coefficient_prefix(a.coef) + (a.var < 0 ? std::string("norm") : "abs(" + var(a.var) + ")");
    }
    case NodeKind::bounded: {
      const auto& b = *e.as<BoundedNode>();
      return coefficient_prefix(b.coef) + to_string(b.fn) + "(" + var(b.var) + ")";
    }
    case NodeKind::indicator: return "ind{" + cell_text(e.as<IndicatorNode>()->set, outer) + "}";
    case NodeKind::sum: return sum_text(e.as<SumNode>()->terms, outer);
    case NodeKind::scale: {
      const auto& s = *e.as<ScaleNode>();
      return "scale(" + format_double(s.factor) + ", " + to_text(s.child, outer) + ")";
    }
    case NodeKind::max: return "max(" + list_text(e.as<MaxNode>()->terms, outer) + ")";
    case NodeKind::piecewise: {
      const auto& p = *e.as<PiecewiseNode>();
      std::string s = "piecewise{";
      for (std::size_t i = 0; i < p.pieces.size(); ++i)
        s += (i ? "; " : "") + cell_text(p.partition[i], outer) + ": " + to_text(p.pieces[i], outer);
      return s + "}";
    }
    case NodeKind::compose: {
      const auto& c = *e.as<ComposeNode>();
      return "compose(" + to_text(c.outer, true) + ", " + to_text(c.inner, outer) + ")";
    }
  }
  throw ExprError("to_text: unhandled node kind");
}

}  // namespace dsl

/// Canonical DSL text; parse_expr(serialize(f), f.dim()) == f.
inline std::string serialize(const Expr& e) { return dsl::to_text(e, false); }

using nlohmann::json;

/// Infinite values become the strings "inf" / "-inf".
inline json number_json(double v) {
  if (std::isfinite(v)) return v;
  return format_double(v);
}

inline json to_json(const AttributeRecord& r) {
  auto tri = [](const std::optional<bool>& b) -> json { return b ? json(*b) : json(nullptr); };
  json j;
  j["convex"] = tri(r.convex);
  j["bounded_below"] = tri(r.bounded_below);
  j["bounded_above"] = tri(r.bounded_above);
  j["lipschitz"] = r.lipschitz ? json(*r.lipschitz) : json(nullptr);
  j["affine"] = r.affine ? json{{"slope", r.affine->slope}, {"offset", r.affine->offset}} : json(nullptr);
  j["quadratic_min_curvature"] = r.quadratic_min_curvature ? json(*r.quadratic_min_curvature) : json(nullptr);
  j["linear_lower_growth"] = tri(r.linear_lower_growth);
  j["majorized_by_affine"] = tri(r.majorized_by_affine);
  j["full_domain"] = tri(r.full_domain);
  return j;
}

inline json to_json(const Cell& c) {
  if (const auto* p = c.polyhedron()) {
    json cs = json::array();
    for (const auto& h : p->constraints())
      cs.push_back({{"normal", h.normal}, {"bound", h.bound}, {"strict", h.strict}});
    return {{"type", "polyhedron"}, {"constraints", cs}};
  }
  return {{"type", "predicate"}, {"label", c.predicate()->label}};
}

/// JSON tree: kind, dim, params, children, attributes.
inline json to_json(const Expr& e) {
  json j;
  j["kind"] = to_string(e.kind());
  j["dim"] = e.dim();
  json params = json::object();
  json children = json::array();
  switch (e.kind()) {
    case NodeKind::constant: params["value"] = e.as<ConstantNode>()->value; break;
    case NodeKind::affine: {
      const auto& a = *e.as<AffineNode>();
      params = {{"slope", a.slope}, {"offset", a.offset}};
      break;
    }
    case NodeKind::quadratic: {
      const auto& q = *e.as<QuadraticNode>();
      params = {{"hessian", q.hessian}, {"linear", q.linear}, {"offset", q.offset}};
      break;
    }
    case NodeKind::power: {
      const auto& p = *e.as<PowerNode>();
      params = {{"coef", p.coef}, {"exponent", p.exponent}, {"odd", p.odd}, {"var", p.var}};
      break;
    }
    case NodeKind::abs: {
      const auto& a = *e.as<AbsNode>();
      params = {{"coef", a.coef}, {"var", a.var}};
      break;
    }
    case NodeKind::bounded: {
      const auto& b = *e.as<BoundedNode>();
      params = {{"fn", to_string(b.fn)}, {"coef", b.coef}, {"var", b.var}};
      break;
    }
    case NodeKind::indicator: params["set"] = to_json(e.as<IndicatorNode>()->set); break;
    case NodeKind::sum:
      for (const auto& t : e.as<SumNode>()->terms) children.push_back(to_json(t));
      break;
    case NodeKind::scale: {
      const auto& s = *e.as<ScaleNode>();
      params["factor"] = s.factor;
      children.push_back(to_json(s.child));
      break;
    }
    case NodeKind::max:
      for (const auto& t : e.as<MaxNode>()->terms) children.push_back(to_json(t));
      break;
    case NodeKind::piecewise: {
      const auto& p = *e.as<PiecewiseNode>();
      json cells = json::array();
      for (const auto& c : p.partition.cells()) cells.push_back(to_json(c));
      params["cells"] = cells;
      for (const auto& t : p.pieces) children.push_back(to_json(t));
      break;
    }
    case NodeKind::compose: {
      const auto& c = *e.as<ComposeNode>();
      children.push_back(to_json(c.outer));
      children.push_back(to_json(c.inner));
      break;
    }
  }
  j["params"] = params;
  j["children"] = children;
  j["attributes"] = to_json(e.attributes());
  return j;
}

}  // namespace proxthresh
