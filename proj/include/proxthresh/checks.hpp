#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "proxthresh/numerics.hpp"
#include "proxthresh/parser.hpp"
#include "proxthresh/serialize.hpp"
#include "proxthresh/threshold.hpp"

namespace proxthresh {

struct CheckOutcome {
  std::string suite;
  std::string subject;  // DSL text of the expression(s) checked
  bool passed = true;
  double metric = 0.0;  // worst deviation observed, suite-specific
  std::string detail;
  std::string witness;  // first failing input, empty on success
};

struct CheckReport {
  std::vector<CheckOutcome> outcomes;

  bool all_passed() const {
    return std::all_of(outcomes.begin(), outcomes.end(), [](const auto& o) { return o.passed; });
  }
  std::size_t failures() const {
    return static_cast<std::size_t>(std::count_if(outcomes.begin(), outcomes.end(), [](const auto& o) { return !o.passed; }));
  }
  void append(const CheckReport& other) { outcomes.insert(outcomes.end(), other.outcomes.begin(), other.outcomes.end()); }
};

inline nlohmann::json to_json(const CheckReport& r) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& o : r.outcomes)
    arr.push_back({{"suite", o.suite}, {"subject", o.subject}, {"passed", o.passed}, {"metric", o.metric},
                   {"detail", o.detail}, {"witness", o.witness}});
  return {{"passed", r.all_passed()}, {"failures", r.failures()}, {"outcomes", arr}};
}

struct CheckOptions {
  SolverConfig cfg;
  std::uint64_t seed = 42;
};

namespace checks {

inline std::string point_text(const Point& x) {
  std::string s;
  for (std::size_t i = 0; i < x.size(); ++i) s += (i ? "," : "") + format_double(x[i]);
  return s;
}

/// Probe points: `per_dim` evenly spaced values on [lo, hi] per coordinate.
inline std::vector<Point> probes(int dim, int per_dim, double lo, double hi) {
  std::vector<Point> out;
  for_each_grid_point(dim, per_dim, lo, hi, [&](std::span<const double> x) { out.emplace_back(x.begin(), x.end()); });
  return out;
}

/// Upper end of the threshold claim, falling back to the liminf estimate.
inline double threshold_upper(const Expr& f, const SolverConfig& cfg) {
  const auto r = compute_threshold(f);
  if (r.bound.is_finite_claim()) return r.hi();
  if (r.kind() == ThresholdKind::not_prox_bounded) return kInf;
  const auto e = estimate_threshold_liminf(f, cfg);
  return e.bound.is_finite_claim() ? e.hi() : kInf;
}

inline std::vector<double> parameters_above(const Expr& f, const std::vector<double>& rs, const SolverConfig& cfg) {
  const double hi = threshold_upper(f, cfg);
  std::vector<double> out;
  for (double r : rs)
    if (r > hi) out.push_back(r);
  return out;
}

/// True when f has no indicator and no piecewise node with a jump.
inline bool is_continuous(const Expr& f) {
  switch (f.kind()) {
    case NodeKind::indicator: return false;
    case NodeKind::sum:
      for (const auto& t : f.as<SumNode>()->terms)
        if (!is_continuous(t)) return false;
      return true;
    case NodeKind::max:
      for (const auto& t : f.as<MaxNode>()->terms)
        if (!is_continuous(t)) return false;
      return true;
    case NodeKind::scale: return f.as<ScaleNode>()->factor > 0 && is_continuous(f.as<ScaleNode>()->child);
    case NodeKind::compose: return is_continuous(f.as<ComposeNode>()->outer) && is_continuous(f.as<ComposeNode>()->inner);
    case NodeKind::piecewise: {
      const auto& p = *f.as<PiecewiseNode>();
      if (f.dim() != 1 || !p.partition.all_polyhedral()) return false;
      for (const auto& t : p.pieces)
        if (!is_continuous(t)) return false;
      for (const auto& c : p.partition.cells())
        for (const auto& h : c.polyhedron()->constraints()) {
          if (h.normal[0] == 0.0) continue;
          const double b = h.bound / h.normal[0];
          const double eps = 1e-9 * (1.0 + std::abs(b));
          const double at = f(b), l = f(b - eps), r = f(b + eps);
          const double tol = 1e-6 * (1.0 + std::abs(at));
          if (std::abs(at - l) > tol || std::abs(at - r) > tol) return false;
        }
      return true;
    }
    default: return true;
  }
}

inline int probe_count(const Expr& f, int one_d, int two_d) { return f.dim() == 1 ? one_d : two_d; }

/// Direct envelope against the conjugate path on a probe grid.
inline CheckOutcome fenchel_identity(const Expr& f, const std::vector<double>& rs, const CheckOptions& o,
                                     int per_dim_1d = 101, int per_dim_2d = 3) {
  CheckOutcome out{"fenchel_identity", serialize(f)};
  const auto rs_ok = parameters_above(f, rs, o.cfg);
  for (double r : rs_ok)
    for (const auto& x : probes(f.dim(), probe_count(f, per_dim_1d, per_dim_2d), -5.0, 5.0)) {
      const auto direct = moreau_envelope(f, r, x, o.cfg);
      const double conj = envelope_via_conjugate(f, r, x, o.cfg);
      const double dev = std::abs(direct.value - conj);
      if (!(dev <= out.metric)) out.metric = std::isnan(dev) ? kInf : std::max(out.metric, dev);
      if (!(dev <= 1e-3) && out.passed) {
        out.passed = false;
        out.witness = "r=" + format_double(r) + " x=" + point_text(x) + " direct=" + format_double(direct.value) +
                      " conjugate=" + format_double(conj);
      }
    }
  out.detail = "max |e_r f - (r/2)|x|^2 + g*(rx)| over " + std::to_string(rs_ok.size()) + " parameters";
  return out;
}

inline CheckOutcome minorization(const Expr& f, const std::vector<double>& rs, const CheckOptions& o) {
  CheckOutcome out{"envelope_below_function", serialize(f)};
  for (double r : parameters_above(f, rs, o.cfg))
    for (const auto& x : probes(f.dim(), probe_count(f, 21, 3), -5.0, 5.0)) {
      const double fx = f(x);
      const auto e = moreau_envelope(f, r, x, o.cfg);
      if (!e.is_finite()) continue;
      const double excess = e.value - fx;
      out.metric = std::max(out.metric, excess);
      if (excess > 1e-9 * (1.0 + std::abs(fx)) && out.passed) {
        out.passed = false;
        out.witness = "r=" + format_double(r) + " x=" + point_text(x);
      }
    }
  out.detail = "max e_r f(x) - f(x)";
  return out;
}

inline CheckOutcome monotone_in_r(const Expr& f, const std::vector<double>& rs, const CheckOptions& o) {
  CheckOutcome out{"monotone_in_r", serialize(f)};
  auto ok = parameters_above(f, rs, o.cfg);
  std::sort(ok.begin(), ok.end());
  for (const auto& x : probes(f.dim(), probe_count(f, 21, 3), -5.0, 5.0)) {
    double prev = -kInf;
    double prev_r = 0.0;
    for (double r : ok) {
      const auto e = moreau_envelope(f, r, x, o.cfg);
      if (!e.is_finite()) continue;
      const double viol = prev - e.value;
      out.metric = std::max(out.metric, viol);
      if (viol > 1e-8 && out.passed) {
        out.passed = false;
        out.witness = "x=" + point_text(x) + " r1=" + format_double(prev_r) + " r2=" + format_double(r);
      }
      prev = e.value;
      prev_r = r;
    }
  }
  out.detail = "max e_{r1} f - e_{r2} f for r1 < r2";
  return out;
}

inline CheckOutcome convergence_large_r(const Expr& f, const CheckOptions& o) {
  CheckOutcome out{"envelope_converges_to_function", serialize(f)};
  if (!is_continuous(f)) {
    out.detail = "skipped: not continuous";
    return out;
  }
  for (const auto& x : probes(f.dim(), probe_count(f, 21, 3), -1.0, 1.0)) {
    const auto e = moreau_envelope(f, 1000.0, x, o.cfg);
    const double dev = std::abs(e.value - f(x));
    out.metric = std::max(out.metric, std::isnan(dev) ? kInf : dev);
    if (!(dev <= 1e-2) && out.passed) {
      out.passed = false;
      out.witness = "x=" + point_text(x) + " e=" + format_double(e.value) + " f=" + format_double(f(x));
    }
  }
  out.detail = "max |e_1000 f - f| on [-1,1]";
  return out;
}

inline CheckOutcome prox_consistency(const Expr& f, const std::vector<double>& rs, const CheckOptions& o) {
  CheckOutcome out{"prox_value_consistency", serialize(f)};
  for (double r : parameters_above(f, rs, o.cfg))
    for (const auto& x : probes(f.dim(), probe_count(f, 21, 3), -5.0, 5.0)) {
      const auto e = moreau_envelope(f, r, x, o.cfg);
      if (!e.is_finite()) continue;
      for (const auto& p : e.minimizers) {
        const double v = f(p) + 0.5 * r * squared_distance(p, x);
        const double dev = std::abs(v - e.value) / (1.0 + std::abs(e.value));
        out.metric = std::max(out.metric, dev);
        if (dev > 1e-6 && out.passed) {
          out.passed = false;
          out.witness = "r=" + format_double(r) + " x=" + point_text(x) + " p=" + point_text(p);
        }
      }
    }
  out.detail = "max relative gap between prox value and envelope";
  return out;
}

/// Numeric estimate consistent with the symbolic claim.
inline bool estimate_agrees(const Bound& symbolic, const ThresholdResult& numeric) {
  switch (symbolic.kind) {
    case ThresholdKind::exact: {
      if (!numeric.estimate) return false;
      const double v = symbolic.lo;
      return std::abs(*numeric.estimate - v) <= std::max(0.05, 0.02 * v);
    }
    case ThresholdKind::interval:
      return numeric.estimate && *numeric.estimate >= symbolic.lo - 0.05 && *numeric.estimate <= symbolic.hi + 0.05;
    case ThresholdKind::not_prox_bounded: return numeric.kind() == ThresholdKind::not_prox_bounded;
    case ThresholdKind::unknown: return true;
  }
  return false;
}

inline CheckOutcome symbolic_vs_numeric(const Expr& f, const CheckOptions& o) {
  CheckOutcome out{"symbolic_vs_numeric", serialize(f)};
  const auto sym = compute_threshold(f);
  const auto lim = estimate_threshold_liminf(f, o.cfg);
  const auto bis = estimate_threshold_bisection(f, o.cfg);
  out.detail = "symbolic " + to_string(sym.bound) + ", liminf " + to_string(lim.bound) + ", bisection " + to_string(bis.bound);
  if (!estimate_agrees(sym.bound, lim) || !estimate_agrees(sym.bound, bis)) {
    out.passed = false;
    out.witness = serialize(f);
  }
  if (lim.estimate && bis.estimate) {
    out.metric = std::abs(*lim.estimate - *bis.estimate);
    if (out.metric > 0.1) {
      out.passed = false;
      out.witness = serialize(f) + " (estimators disagree)";
    }
  } else if (lim.kind() != bis.kind()) {
    out.passed = false;
    out.witness = serialize(f) + " (estimators disagree on prox-boundedness)";
  }
  return out;
}

inline CheckOutcome scaling_homogeneity(const Expr& f) {
  CheckOutcome out{"scaling_homogeneity", serialize(f)};
  const auto base = compute_threshold(f);
  if (!base.is_exact()) {
    out.detail = "skipped: threshold not exact";
    return out;
  }
  for (double lambda : {0.0, 0.5, 1.0, 2.0, 3.0}) {
    const auto s = compute_threshold(scale(lambda, f));
    if (!s.is_exact() || s.value() != lambda * base.value()) {
      out.passed = false;
      out.witness = "lambda=" + format_double(lambda) + " got " + to_string(s.bound);
      break;
    }
  }
  out.detail = "threshold(scale(lambda, f)) == lambda * threshold(f)";
  return out;
}

/// Suites that need only one expression.
inline CheckReport check_expression(const Expr& f, const CheckOptions& o = {}) {
  const std::vector<double> rs = {0.5, 1.0, 2.0, 5.0};
  CheckReport rep;
  rep.outcomes.push_back(fenchel_identity(f, rs, o));
  rep.outcomes.push_back(minorization(f, rs, o));
  rep.outcomes.push_back(monotone_in_r(f, rs, o));
  rep.outcomes.push_back(convergence_large_r(f, o));
  rep.outcomes.push_back(prox_consistency(f, rs, o));
  rep.outcomes.push_back(symbolic_vs_numeric(f, o));
  rep.outcomes.push_back(scaling_homogeneity(f));
  return rep;
}

/// Random quadratic q(x) = (a/2) x^2 + b x + c as an expression.
inline Expr quadratic_1d(double a, double b, double c) { return quadratic({a}, {b}, c); }

/// Pairs f1 <= f2 built as f1 = f2 - s with s a nonnegative quadratic.
inline std::vector<std::pair<Expr, Expr>> ordered_quadratic_pairs(std::size_t count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> curv(-3.0, 3.0), lin(-2.0, 2.0), gap(0.0, 2.0);
  std::vector<std::pair<Expr, Expr>> out;
  while (out.size() < count) {
    const double a2 = curv(rng), b2 = lin(rng), c2 = lin(rng);
    const double d = gap(rng), e = lin(rng);
    const double g = (d > 0 ? e * e / (2.0 * d) : 0.0) + gap(rng);
    if (d == 0.0) continue;
    out.emplace_back(quadratic_1d(a2 - d, b2 - e, c2 - g), quadratic_1d(a2, b2, c2));
  }
  return out;
}

inline CheckOutcome threshold_ordering(std::size_t count, const CheckOptions& o) {
  CheckOutcome out{"threshold_ordering", "generated quadratic pairs"};
  std::size_t checked = 0;
  for (const auto& [f1, f2] : ordered_quadratic_pairs(count, o.seed)) {
    bool below = true;
    for (const auto& x : probes(1, 201, -100.0, 100.0)) below = below && f1(x) <= f2(x);
    if (!below) continue;
    ++checked;
    const auto r1 = compute_threshold(f1), r2 = compute_threshold(f2);
    if (!r1.is_exact() || !r2.is_exact() || r1.value() < r2.value()) {
      out.passed = false;
      out.witness = serialize(f1) + " <= " + serialize(f2);
      break;
    }
  }
  out.metric = static_cast<double>(checked);
  out.detail = "r1 >= r2 whenever f1 <= f2 (" + std::to_string(checked) + " pairs)";
  return out;
}

inline CheckOutcome envelope_ordering(std::size_t count, const CheckOptions& o) {
  CheckOutcome out{"envelope_ordering", "generated quadratic pairs"};
  for (const auto& [f1, f2] : ordered_quadratic_pairs(count, o.seed + 1)) {
    const double r = std::max(threshold_upper(f1, o.cfg), threshold_upper(f2, o.cfg)) + 1.0;
    for (const auto& x : probes(1, 11, -5.0, 5.0)) {
      const auto e1 = moreau_envelope(f1, r, x, o.cfg), e2 = moreau_envelope(f2, r, x, o.cfg);
      const double viol = e1.value - e2.value;
      out.metric = std::max(out.metric, viol);
      if (viol > 1e-8 * (1.0 + std::abs(e2.value)) && out.passed) {
        out.passed = false;
        out.witness = serialize(f1) + " vs " + serialize(f2) + " r=" + format_double(r) + " x=" + point_text(x);
      }
    }
  }
  out.detail = "e_r f1 <= e_r f2 for f1 <= f2 and r above both thresholds";
  return out;
}

/// Random one-dimensional piecewise quadratics; the symbolic threshold must
/// equal the largest bisection estimate over the constrained pieces.
inline CheckOutcome piecewise_max_rule(std::size_t count, const CheckOptions& o) {
  CheckOutcome out{"piecewise_max_rule", "generated piecewise quadratics"};
  std::mt19937_64 rng(o.seed + 2);
  std::uniform_real_distribution<double> curv(-3.0, 3.0), brk(-2.0, 2.0);
  for (std::size_t t = 0; t < count; ++t) {
    const double b = brk(rng);
    const Expr f = parse_expr("piecewise{x < " + format_double(b) + ": " + format_double(curv(rng)) + "*x^2; x >= " +
                              format_double(b) + ": " + format_double(curv(rng)) + "*x^2}");
    const auto sym = compute_threshold(f);
    double brute = 0.0;
    for (std::size_t i = 0; i < 2; ++i) {
      const auto est = estimate_threshold_bisection(constrained_piece(f, i), o.cfg);
      brute = std::max(brute, est.estimate.value_or(kInf));
    }
    const double dev = sym.is_exact() ? std::abs(sym.value() - brute) : kInf;
    out.metric = std::max(out.metric, dev);
    if (!(dev <= std::max(0.05, 0.02 * brute)) && out.passed) {
      out.passed = false;
      out.witness = serialize(f) + " symbolic " + to_string(sym.bound) + " brute force " + format_double(brute);
    }
  }
  out.detail = "symbolic piecewise threshold vs max over constrained pieces";
  return out;
}

inline CheckOutcome determinism(const CheckOptions& o) {
  CheckOutcome out{"deterministic_under_seed", "envelope and estimators"};
  const Expr f = parse_expr("-0.5*x^2 + sin(x)");
  const auto a = moreau_envelope(f, 2.0, {0.3}, o.cfg), b = moreau_envelope(f, 2.0, {0.3}, o.cfg);
  const auto p1 = ordered_quadratic_pairs(5, o.seed), p2 = ordered_quadratic_pairs(5, o.seed);
  bool same = a.value == b.value && a.minimizers == b.minimizers && a.evaluations == b.evaluations;
  for (std::size_t i = 0; i < p1.size(); ++i) same = same && p1[i].first == p2[i].first && p1[i].second == p2[i].second;
  out.passed = same;
  if (!same) out.witness = "repeated runs differ";
  out.detail = "repeated runs are bit-identical";
  return out;
}

/// The glued function of the two threshold-2 pieces; equals x^2.
inline const char* kGluedExample =
    "piecewise{x < 0: piecewise{x < 0: x^2; x >= 0: -x^2}; x >= 0: piecewise{x < 0: -x^2; x >= 0: x^2}}";

inline std::vector<std::string> fenchel_corpus() { return {"abs(x)", "x^2", "max(x, 0)", kGluedExample}; }

inline std::vector<std::string> continuous_corpus() {
  return {"abs(x)", "x^2", "max(x, 0)", kGluedExample, "-abs(x)", "sin(x)", "-0.5*x^2 + sin(x)",
          "-x^2", "x^4", "-1.5*x^2", "piecewise{x < 0: -x^2; x >= 0: -x^2}", "compose(-0.5*u^2, -2*x)"};
}

/// All suites over the built-in corpus.
inline CheckReport check_corpus(const CheckOptions& o = {}) {
  CheckReport rep;
  const std::vector<double> rs = {0.5, 1.0, 2.0, 5.0};
  for (const auto& s : fenchel_corpus()) rep.outcomes.push_back(fenchel_identity(parse_expr(s), rs, o));
  const std::vector<double> wide = {0.5, 1.0, 2.0, 5.0, 10.0};
  for (const auto& s : continuous_corpus()) {
    const Expr f = parse_expr(s);
    rep.outcomes.push_back(minorization(f, wide, o));
    rep.outcomes.push_back(monotone_in_r(f, wide, o));
    rep.outcomes.push_back(convergence_large_r(f, o));
    rep.outcomes.push_back(prox_consistency(f, wide, o));
    rep.outcomes.push_back(symbolic_vs_numeric(f, o));
    rep.outcomes.push_back(scaling_homogeneity(f));
  }
  rep.outcomes.push_back(threshold_ordering(20, o));
  rep.outcomes.push_back(envelope_ordering(10, o));
  rep.outcomes.push_back(piecewise_max_rule(10, o));
  rep.outcomes.push_back(determinism(o));
  return rep;
}

}  // namespace checks

using checks::check_corpus;
using checks::check_expression;

}  // namespace proxthresh
