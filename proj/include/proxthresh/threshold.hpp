#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "proxthresh/expr.hpp"

namespace proxthresh {

/// Raised when two certified rules contradict each other; always a rule bug.
class SoundnessError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

enum class ThresholdKind { exact, interval, not_prox_bounded, unknown };

inline const char* to_string(ThresholdKind k) {
  switch (k) {
    case ThresholdKind::exact: return "exact";
    case ThresholdKind::interval: return "interval";
    case ThresholdKind::not_prox_bounded: return "not_prox_bounded";
    case ThresholdKind::unknown: return "unknown";
  }
  return "?";
}

/// Claim about the threshold r̄ without provenance.
struct Bound {
  ThresholdKind kind = ThresholdKind::unknown;
  double lo = 0.0;
  double hi = kInf;

  static Bound exact(double v) { return {ThresholdKind::exact, v, v}; }
  static Bound interval(double lo, double hi) {
    if (!(lo >= 0.0) || !(hi >= lo)) throw std::invalid_argument("threshold interval requires 0 <= lo <= hi");
    if (lo == hi) return exact(lo);
    if (lo == 0.0 && hi == kInf) return unknown();
    return {ThresholdKind::interval, lo, hi};
  }
  static Bound not_prox_bounded() { return {ThresholdKind::not_prox_bounded, kInf, kInf}; }
  static Bound unknown() { return {ThresholdKind::unknown, 0.0, kInf}; }

  bool is_exact() const { return kind == ThresholdKind::exact; }
  bool is_finite_claim() const { return kind == ThresholdKind::exact || kind == ThresholdKind::interval; }
  bool is_known() const { return kind != ThresholdKind::unknown; }
  double value() const {
    if (!is_exact()) throw std::logic_error("threshold is not exact");
    return lo;
  }
  friend bool operator==(const Bound&, const Bound&) = default;
};

inline std::string to_string(const Bound& b) {
  switch (b.kind) {
    case ThresholdKind::exact: return "Exact(" + format_double(b.lo) + ")";
    case ThresholdKind::interval: return "Interval(" + format_double(b.lo) + ", " + format_double(b.hi) + ")";
    case ThresholdKind::not_prox_bounded: return "NotProxBounded";
    case ThresholdKind::unknown: return "Unknown";
  }
  return "?";
}

/// Tightest claim consistent with both inputs. An Interval with hi = inf
/// leaves room for "not prox-bounded"; a finite hi does not.
inline Bound intersect(const Bound& a, const Bound& b) {
  if (!a.is_known()) return b;
  if (!b.is_known()) return a;
  const bool a_np = a.kind == ThresholdKind::not_prox_bounded;
  const bool b_np = b.kind == ThresholdKind::not_prox_bounded;
  if (a_np || b_np) {
    const Bound& other = a_np ? b : a;
    if (other.kind == ThresholdKind::not_prox_bounded || other.hi == kInf) return Bound::not_prox_bounded();
    throw SoundnessError("rules disagree: " + to_string(a) + " vs " + to_string(b));
  }
  double lo = std::max(a.lo, b.lo);
  double hi = std::min(a.hi, b.hi);
  if (lo > hi) {
    if (lo - hi > 1e-9 * (1.0 + std::abs(hi))) throw SoundnessError("rules disagree: " + to_string(a) + " vs " + to_string(b));
    lo = hi;
  }
  return Bound::interval(lo, hi);
}

struct TraceEntry {
  std::string rule;
  std::string paper_id;
  std::string node;  // path from the root, e.g. "root.1.0"
  std::vector<std::string> inputs;
  Bound bound;
};

/// Threshold claim with the ordered list of rules that produced it.
struct ThresholdResult {
  Bound bound;
  std::vector<TraceEntry> trace;
  std::optional<double> estimate;  // point estimate from the numeric estimators

  ThresholdKind kind() const { return bound.kind; }
  double lo() const { return bound.lo; }
  double hi() const { return bound.hi; }
  bool is_exact() const { return bound.is_exact(); }
  double value() const { return bound.value(); }
};

inline nlohmann::json to_json(const Bound& b) {
  auto num = [](double v) -> nlohmann::json {
    if (std::isfinite(v)) return v;
    return format_double(v);
  };
  nlohmann::json j = {{"kind", to_string(b.kind)}};
  if (b.is_finite_claim()) {
    j["lo"] = num(b.lo);
    j["hi"] = num(b.hi);
  }
  return j;
}

inline nlohmann::json trace_json(const std::vector<TraceEntry>& trace) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& t : trace)
    arr.push_back({{"rule", t.rule}, {"paper_id", t.paper_id}, {"node", t.node}, {"inputs", t.inputs}, {"bound", to_json(t.bound)}});
  return arr;
}

inline nlohmann::json to_json(const ThresholdResult& r) {
  nlohmann::json j = to_json(r.bound);
  if (r.estimate) j["estimate"] = *r.estimate;
  j["trace"] = trace_json(r.trace);
  return j;
}

namespace rules {

/// Pure combinators over child claims. Each returns the claim of one rule, or
/// nullopt when its hypotheses are not met.
using Claim = std::optional<Bound>;

/// Every constrained piece resolved: r̄ = max r_i. Any constrained piece not
/// prox-bounded: f is not prox-bounded.
inline Claim piecewise_max(const std::vector<Bound>& constrained) {
  if (constrained.empty()) return std::nullopt;
  double lo = 0.0, hi = 0.0;
  for (const auto& c : constrained) {
    if (c.kind == ThresholdKind::not_prox_bounded) return Bound::not_prox_bounded();
  }
  for (const auto& c : constrained) {
    if (!c.is_finite_claim()) return std::nullopt;
    lo = std::max(lo, c.lo);
    hi = std::max(hi, c.hi);
  }
  return Bound::interval(lo, hi);
}

/// Unconstrained pieces prox-bounded: r̄ <= max r_i.
inline Claim piecewise_upper(const std::vector<Bound>& unconstrained) {
  if (unconstrained.empty()) return std::nullopt;
  double hi = 0.0;
  for (const auto& u : unconstrained) {
    if (!u.is_finite_claim()) return std::nullopt;
    hi = std::max(hi, u.hi);
  }
  return Bound::interval(0.0, hi);
}

/// f = f1 + f2 with both prox-bounded: r̄ <= r1 + r2.
inline Claim sum_upper(const Bound& r1, const Bound& r2) {
  if (!r1.is_finite_claim() || !r2.is_finite_claim()) return std::nullopt;
  return Bound::interval(0.0, r1.hi + r2.hi);
}

inline Bound scale(double lambda, const Bound& r) {
  if (lambda == 0.0) return Bound::exact(0.0);
  if (r.kind == ThresholdKind::not_prox_bounded || !r.is_known()) return r;
  return Bound::interval(lambda * r.lo, lambda * r.hi);
}

}  // namespace rules

namespace detail {

struct Candidate {
  Bound bound;
  TraceEntry entry;
};

/// Asymptotic rate lim f(t d)/t^2 along a unit direction d for atoms whose
/// growth is polynomial; -inf for superquadratic decrease.
inline std::optional<double> ray_rate(const Expr& g, std::span<const double> d) {
  switch (g.kind()) {
    case NodeKind::constant:
    case NodeKind::affine:
    case NodeKind::abs:
    case NodeKind::bounded: return 0.0;
    case NodeKind::quadratic: {
      const auto& q = *g.as<QuadraticNode>();
      const int n = g.dim();
      double s = 0.0;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) s += d[i] * q.hessian[i * n + j] * d[j];
      return 0.5 * s;
    }
    case NodeKind::power: {
      const auto& p = *g.as<PowerNode>();
      const double dk = d[p.var];
      if (dk == 0.0 || p.coef == 0.0 || p.exponent < 2.0) return 0.0;
      const double lead = p.odd ? p.coef * std::pow(dk, p.exponent) : p.coef * std::pow(std::abs(dk), p.exponent);
      if (p.exponent == 2.0) return lead;
      return lead < 0.0 ? -kInf : 0.0;
    }
    default: return std::nullopt;
  }
}

inline std::vector<Point> eigen_directions(const Expr& g) {
  std::vector<Point> out;
  const auto* q = g.as<QuadraticNode>();
  if (!q) return out;
  const int n = g.dim();
  Eigen::MatrixXd m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = q->hessian[i * n + j];
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  for (int k = 0; k < n; ++k) {
    Point v(n);
    for (int i = 0; i < n; ++i) v[i] = es.eigenvectors()(i, k);
    out.push_back(std::move(v));
  }
  return out;
}

inline void add(std::vector<Candidate>& cs, Bound b, std::string rule, std::string id, const std::string& path,
                std::vector<std::string> inputs = {}) {
  cs.push_back({b, {std::move(rule), std::move(id), path, std::move(inputs), b}});
}

/// Sum rules where f2 is the special addend and the claim r1 of f1 transfers
/// to f1 + f2.
inline void transfer_rules(const Bound& r1, const Bound& r2, const AttributeRecord& a2, const std::string& at,
                           const std::vector<std::string>& in, std::vector<Candidate>& step) {
  if (!r1.is_finite_claim()) return;
  if (a2.affine) {
    add(step, r1, "affine addend", "Prop4.10", at, in);
    return;
  }
  if (!r2.is_finite_claim()) return;
  if (a2.bounded_below == true && a2.bounded_above == true) add(step, r1, "bounded addend", "Prop4.9", at, in);
  const bool r2_zero = r2.is_exact() && r2.lo == 0.0;
  if (r2_zero && a2.bounded_above == true) add(step, r1, "threshold-zero addend bounded above", "Cor4.9b", at, in);
  if (r2_zero && a2.majorized_by_affine == true)
    add(step, r1, "threshold-zero addend majorized by an affine function", "Cor4.10b", at, in);
}

/// All pairwise sum rules for f1 + f2, both roles.
inline std::vector<Candidate> sum_pair(const Bound& r1, const AttributeRecord& a1, const Bound& r2,
                                       const AttributeRecord& a2, const std::string& at) {
  std::vector<Candidate> step;
  const std::vector<std::string> in = {to_string(r1), to_string(r2)};
  if (auto b = rules::sum_upper(r1, r2)) add(step, *b, "sum upper bound", "Prop4.9", at, in);
  transfer_rules(r1, r2, a2, at, in, step);
  transfer_rules(r2, r1, a1, at, in, step);
  return step;
}

class Engine {
 public:
  ThresholdResult run(const Expr& f) {
    trace_.clear();
    const Bound b = eval(f, "root");
    return {b, trace_};
  }

  Bound eval(const Expr& f, const std::string& path) {
    std::vector<Candidate> cands;
    attribute_rules(f, path, cands);
    structural_rules(f, path, cands);
    Bound out = Bound::unknown();
    for (const auto& c : cands) {
      try {
        out = intersect(out, c.bound);
      } catch (const SoundnessError& e) {
        throw SoundnessError(std::string(e.what()) + " at " + path + " (" + c.entry.rule + ", " + c.entry.paper_id + ")");
      }
      trace_.push_back(c.entry);
    }
    return out;
  }

  /// Threshold of g + indicator(cell); nullopt when the cell is empty.
  std::optional<Bound> cell_threshold(const Expr& g, const Polyhedron& cell, const std::string& path) {
    if (cell.is_empty()) return std::nullopt;
    std::vector<Candidate> cands;
    const std::string where = path + "|cell";

    if (const auto* s = g.as<SumNode>()) {
      Polyhedron narrowed = cell;
      std::vector<Expr> rest;
      for (const auto& t : s->terms) {
        const auto* ind = t.as<IndicatorNode>();
        if (ind && ind->set.polyhedron())
          narrowed = narrowed.intersect(*ind->set.polyhedron());
        else
          rest.push_back(t);
      }
      if (rest.size() < s->terms.size()) {
        if (rest.empty()) return cell_threshold(constant(0.0, g.dim()), narrowed, path);
        return cell_threshold(rest.size() == 1 ? rest.front() : sum(rest), narrowed, path);
      }
    }
    if (const auto* ind = g.as<IndicatorNode>(); ind && ind->set.polyhedron())
      return cell_threshold(constant(0.0, g.dim()), cell.intersect(*ind->set.polyhedron()), path);

    if (const auto* sc = g.as<ScaleNode>()) {
      const auto inner = cell_threshold(sc->child, cell, path);
      if (!inner) return std::nullopt;
      const Bound b = rules::scale(sc->factor, *inner);
      trace_.push_back({"scaling", "Fact4.13", where, {"lambda=" + format_double(sc->factor), to_string(*inner)}, b});
      return b;
    }

    if (const auto* pw = g.as<PiecewiseNode>(); pw && pw->partition.all_polyhedral()) {
      std::vector<Bound> parts;
      for (std::size_t i = 0; i < pw->pieces.size(); ++i) {
        const auto c = cell_threshold(pw->pieces[i], cell.intersect(*pw->partition[i].polyhedron()), path + "." + std::to_string(i));
        if (c) parts.push_back(*c);
      }
      if (parts.empty()) return std::nullopt;
      if (auto b = rules::piecewise_max(parts)) {
        trace_.push_back({"piecewise max of constrained pieces", b->kind == ThresholdKind::not_prox_bounded ? "Prop3.2" : "Thm3.3", where, {}, *b});
        return b;
      }
    }

    const auto dirs = cell.recession_candidates(eigen_directions(g));
    if (dirs && dirs->empty()) {
      const Bound b = Bound::exact(0.0);
      trace_.push_back({"bounded cell: restriction is bounded below", "Fact2.7", where, {}, b});
      return b;
    }
    if (dirs && is_atom(g) && g.kind() != NodeKind::indicator) {
      double rate = kInf;
      bool ok = true;
      for (const auto& d : *dirs) {
        const auto r = ray_rate(g, d);
        if (!r) {
          ok = false;
          break;
        }
        rate = std::min(rate, *r);
      }
      if (ok) {
        const Bound b = rate == -kInf ? Bound::not_prox_bounded() : Bound::exact(std::max(0.0, -2.0 * rate));
        trace_.push_back({"quadratic growth along recession directions of the cell", "Fact4.3", where,
                          {"liminf rate=" + format_double(rate)}, b});
        return b;
      }
    }

    const Bound u = eval(g, path);
    if (u.is_finite_claim()) {
      const Bound b = Bound::interval(0.0, u.hi);
      trace_.push_back({"restriction does not raise the threshold", "Thm3.4", where, {to_string(u)}, b});
      return b;
    }
    return Bound::unknown();
  }

 private:
  std::vector<TraceEntry> trace_;

  static void attribute_rules(const Expr& f, const std::string& path, std::vector<Candidate>& cs) {
    const auto& a = f.attributes();
    if (a.bounded_below == true) add(cs, Bound::exact(0.0), "bounded below", "Fact2.7", path);
    if (a.convex == true) add(cs, Bound::exact(0.0), "convex", "Fact2.10", path);
    if (a.lipschitz) add(cs, Bound::exact(0.0), "globally Lipschitz", "Prop3.1", path, {"K=" + format_double(*a.lipschitz)});
    if (a.linear_lower_growth == true && a.full_domain == true)
      add(cs, Bound::exact(0.0), "linear lower growth", "Fact2.9", path);
  }

  void structural_rules(const Expr& f, const std::string& path, std::vector<Candidate>& cs) {
    switch (f.kind()) {
      case NodeKind::quadratic: {
        const double lmin = f.attributes().quadratic_min_curvature.value_or(0.0);
        add(cs, Bound::exact(std::max(0.0, -lmin)), "quadratic growth", "Fact4.3", path, {"lambda_min=" + format_double(lmin)});
        break;
      }
      case NodeKind::power: {
        const auto& p = *f.as<PowerNode>();
        std::vector<double> e(f.dim(), 0.0);
        if (p.coef == 0.0) break;
        double worst = kInf;
        for (double s : {1.0, -1.0}) {
          e[p.var] = s;
          worst = std::min(worst, *ray_rate(f, e));
        }
        add(cs, worst == -kInf ? Bound::not_prox_bounded() : Bound::exact(std::max(0.0, -2.0 * worst)), "power growth",
            "Fact4.3", path, {"liminf f/|x|^2=" + format_double(worst)});
        break;
      }
      case NodeKind::sum: sum_rules(f, path, cs); break;
      case NodeKind::scale: {
        const auto& s = *f.as<ScaleNode>();
        const Bound c = eval(s.child, path + ".0");
        if (c.is_known() || s.factor == 0.0)
          add(cs, rules::scale(s.factor, c), "scaling", "Fact4.13", path, {"lambda=" + format_double(s.factor), to_string(c)});
        break;
      }
      case NodeKind::max: max_rules(f, path, cs); break;
      case NodeKind::piecewise: piecewise_rules(f, path, cs); break;
      case NodeKind::compose: compose_rules(f, path, cs); break;
      default: break;
    }
  }

  void sum_rules(const Expr& f, const std::string& path, std::vector<Candidate>& cs) {
    const auto& terms = f.as<SumNode>()->terms;

    // Indicator addends restrict the remaining terms to a polyhedron.
    std::optional<Polyhedron> cell;
    for (const auto& t : terms)
      if (const auto* ind = t.as<IndicatorNode>(); ind && ind->set.polyhedron())
        cell = cell ? cell->intersect(*ind->set.polyhedron()) : *ind->set.polyhedron();
    if (cell) {
      if (auto b = cell_threshold(f, Polyhedron(f.dim(), {}), path + ".restricted"))
        add(cs, *b, "restriction to indicator set", "Fact4.3", path, {to_string(*b)});
    }

    std::vector<Bound> rs;
    for (std::size_t i = 0; i < terms.size(); ++i) rs.push_back(eval(terms[i], path + "." + std::to_string(i)));

    // Left fold: (((f1 + f2) + f3) + ...), with attributes of the partial sum.
    Bound acc = rs[0];
    AttributeRecord acc_attr = terms[0].attributes();
    for (std::size_t i = 1; i < terms.size(); ++i) {
      const Bound r2 = rs[i];
      const AttributeRecord& a2 = terms[i].attributes();
      auto step = sum_pair(acc, acc_attr, r2, a2, path + "+" + std::to_string(i));
      Bound next = Bound::unknown();
      for (const auto& c : step) {
        next = intersect(next, c.bound);
        if (i + 1 < terms.size()) trace_.push_back(c.entry);
      }
      if (i + 1 == terms.size()) {
        for (auto& c : step) cs.push_back(std::move(c));
      }
      acc = next;
      const AttributeRecord pair[] = {acc_attr, a2};
      acc_attr = attr::sum(pair);
    }
  }

  void max_rules(const Expr& f, const std::string& path, std::vector<Candidate>& cs) {
    const auto& terms = f.as<MaxNode>()->terms;
    std::vector<Bound> rs;
    for (std::size_t i = 0; i < terms.size(); ++i) rs.push_back(eval(terms[i], path + "." + std::to_string(i)));
    std::vector<std::string> in;
    for (const auto& r : rs) in.push_back(to_string(r));
    // Active-set cells are predicates, so only the unconstrained bound applies.
    if (auto b = rules::piecewise_upper(rs)) add(cs, *b, "finite max as piecewise, unconstrained pieces", "Thm3.4", path, in);
    // max >= f_j, so r̄ <= r_j for every prox-bounded term.
    double hi = kInf;
    for (const auto& r : rs)
      if (r.is_finite_claim()) hi = std::min(hi, r.hi);
    if (hi < kInf) add(cs, Bound::interval(0.0, hi), "max majorizes each term", "Cor4.7", path, in);
  }

  void piecewise_rules(const Expr& f, const std::string& path, std::vector<Candidate>& cs) {
    const auto& p = *f.as<PiecewiseNode>();
    std::vector<Bound> unconstrained, constrained;
    bool all_constrained = true;
    for (std::size_t i = 0; i < p.pieces.size(); ++i) {
      const std::string sub = path + "." + std::to_string(i);
      unconstrained.push_back(eval(p.pieces[i], sub));
      const auto* poly = p.partition[i].polyhedron();
      if (!poly) {
        all_constrained = false;
        continue;
      }
      if (auto c = cell_threshold(p.pieces[i], *poly, sub)) {
        if (c->is_known())
          constrained.push_back(*c);
        else
          all_constrained = false;
      }
    }
    std::vector<std::string> in;
    for (const auto& c : constrained) in.push_back(to_string(c));
    for (const auto& c : constrained)
      if (c.kind == ThresholdKind::not_prox_bounded) {
        add(cs, Bound::not_prox_bounded(), "constrained piece not prox-bounded", "Prop3.2", path, in);
        return;
      }
    if (all_constrained)
      if (auto b = rules::piecewise_max(constrained)) add(cs, *b, "max over constrained pieces", "Thm3.3", path, in);
    std::vector<std::string> uin;
    for (const auto& u : unconstrained) uin.push_back(to_string(u));
    if (auto b = rules::piecewise_upper(unconstrained)) add(cs, *b, "max over unconstrained pieces", "Thm3.4", path, uin);
  }

  void compose_rules(const Expr& f, const std::string& path, std::vector<Candidate>& cs) {
    const auto& c = *f.as<ComposeNode>();
    const Bound ro = eval(c.outer, path + ".outer");
    const Bound ri = eval(c.inner, path + ".inner");
    const auto& ao = c.outer.attributes();
    const auto& ai = c.inner.attributes();
    const std::vector<std::string> in = {to_string(ro), to_string(ri)};
    if (ao.lipschitz && ai.lipschitz) add(cs, Bound::exact(0.0), "composition of Lipschitz functions", "CompProp.i", path, in);
    if (ao.affine) {
      const double a = ao.affine->slope.at(0);
      if (a >= 0.0 && (ri.is_known() || a == 0.0))
        add(cs, rules::scale(a, ri), "affine outer function", "CompProp.ii", path, {"a=" + format_double(a), to_string(ri)});
    }
    if (ai.affine) {
      const double s2 = dot(ai.affine->slope, ai.affine->slope);
      if (ro.is_known() || s2 == 0.0)
        add(cs, rules::scale(s2, ro), "affine inner function", "CompProp.iii", path, {"|a|^2=" + format_double(s2), to_string(ro)});
    }
  }
};

}  // namespace detail

/// Threshold of prox-boundedness by structural recursion; every applicable
/// rule fires and the claims are intersected.
inline ThresholdResult compute_threshold(const Expr& f) { return detail::Engine().run(f); }

/// Threshold of an atomic expression.
inline ThresholdResult atom_threshold(const Expr& f) {
  if (!is_atom(f)) throw std::invalid_argument(std::string("atom_threshold: ") + to_string(f.kind()) + " is not an atom");
  return compute_threshold(f);
}

/// Threshold of the constrained piece f_i + indicator(S_i) of a piecewise f.
inline ThresholdResult constrained_threshold(const Expr& f, std::size_t index) {
  return compute_threshold(constrained_piece(f, index));
}

/// Piecewise rule from already computed piece claims. `constrained` may be
/// empty when the indicator-restricted thresholds are not available.
inline ThresholdResult rule_piecewise(const std::vector<Bound>& constrained, const std::vector<Bound>& unconstrained) {
  ThresholdResult out;
  for (const auto& c : constrained)
    if (c.kind == ThresholdKind::not_prox_bounded) {
      out.bound = Bound::not_prox_bounded();
      out.trace.push_back({"constrained piece not prox-bounded", "Prop3.2", "root", {}, out.bound});
      return out;
    }
  if (auto b = rules::piecewise_max(constrained)) {
    out.bound = intersect(out.bound, *b);
    out.trace.push_back({"max over constrained pieces", "Thm3.3", "root", {}, *b});
  }
  if (auto b = rules::piecewise_upper(unconstrained)) {
    out.bound = intersect(out.bound, *b);
    out.trace.push_back({"max over unconstrained pieces", "Thm3.4", "root", {}, *b});
  }
  return out;
}

/// Sum rule for f1 + f2 from child claims and the attributes of the addends.
inline ThresholdResult rule_sum(const Bound& r1, const AttributeRecord& a1, const Bound& r2, const AttributeRecord& a2) {
  ThresholdResult out;
  for (const auto& c : detail::sum_pair(r1, a1, r2, a2, "root")) {
    out.bound = intersect(out.bound, c.bound);
    out.trace.push_back(c.entry);
  }
  return out;
}

inline ThresholdResult rule_scale(double lambda, const Bound& r) {
  if (!(lambda >= 0.0)) throw std::invalid_argument("scale factor must be nonnegative");
  ThresholdResult out;
  out.bound = rules::scale(lambda, r);
  if (out.bound.is_known())
    out.trace.push_back({"scaling", "Fact4.13", "root", {"lambda=" + format_double(lambda), to_string(r)}, out.bound});
  return out;
}

/// Composition outer(inner(x)) given the outer and inner claims.
inline ThresholdResult rule_composition(const Expr& f) {
  if (f.kind() != NodeKind::compose) throw std::invalid_argument("rule_composition: not a composition");
  return compute_threshold(f);
}

/// Curvature r̄/2 of the flattest quadratic minorant -(r̄/2)|x|^2 + m.
inline double minorant_curvature(const ThresholdResult& r) {
  if (!r.is_exact()) throw std::domain_error("minorant curvature needs an exact threshold, got " + to_string(r.bound));
  if (r.value() == 0.0) throw std::domain_error("minorant curvature is not determined when the threshold is 0");
  return r.value() / 2.0;
}

inline double minorant_curvature(const Expr& f) { return minorant_curvature(compute_threshold(f)); }

/// Whether dom e_r f is all of R^n as far as the claim decides: true for
/// r above a finite upper bound, false strictly below the lower bound.
inline std::optional<bool> envelope_domain_full(const Bound& b, double r) {
  if (b.kind == ThresholdKind::not_prox_bounded) return false;
  if (!b.is_finite_claim()) return std::nullopt;
  if (r > b.hi) return true;
  if (r < b.lo) return false;
  return std::nullopt;
}

}  // namespace proxthresh
