#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "proxthresh/checks.hpp"

using namespace proxthresh;

namespace {

struct Verdict {
  bool ok = true;
  std::string why;

  void require(bool cond, const std::string& msg) {
    if (!cond && ok) {
      ok = false;
      why = msg;
    }
  }
};

bool cites(const ThresholdResult& r, const char* id) {
  return std::any_of(r.trace.begin(), r.trace.end(), [&](const TraceEntry& t) { return t.paper_id == id; });
}

std::string est_text(const ThresholdResult& r) {
  return r.estimate ? format_double(*r.estimate) : to_string(r.bound);
}

void near_estimates(Verdict& v, const std::string& name, const Expr& f, double target, double tol) {
  for (const auto& r : {estimate_threshold_liminf(f), estimate_threshold_bisection(f)})
    v.require(r.estimate && std::abs(*r.estimate - target) <= tol,
              name + ": estimate " + est_text(r) + " not within " + format_double(tol) + " of " + format_double(target));
}

void symbolic_is(Verdict& v, const std::string& name, const ThresholdResult& r, const Bound& want) {
  v.require(r.bound == want, name + ": symbolic " + to_string(r.bound) + ", want " + to_string(want));
}

const char* kF1 = "piecewise{x<0: x^2; x>=0: -x^2}";
const char* kF2 = "piecewise{x<0: -x^2; x>=0: x^2}";
const char* kGlued = "piecewise{x<0: piecewise{x<0: x^2; x>=0: -x^2}; x>=0: piecewise{x<0: -x^2; x>=0: x^2}}";
const char* kSwapped = "piecewise{x<0: piecewise{x<0: -x^2; x>=0: x^2}; x>=0: piecewise{x<0: x^2; x>=0: -x^2}}";

Verdict ac1() {
  Verdict v;
  symbolic_is(v, "f1", compute_threshold(parse_expr(kF1)), Bound::exact(2.0));
  symbolic_is(v, "f2", compute_threshold(parse_expr(kF2)), Bound::exact(2.0));
  symbolic_is(v, "glued", compute_threshold(parse_expr(kGlued)), Bound::exact(0.0));
  near_estimates(v, "f1", parse_expr(kF1), 2.0, 0.05);
  near_estimates(v, "f2", parse_expr(kF2), 2.0, 0.05);
  for (const auto& r : {estimate_threshold_liminf(parse_expr(kGlued)), estimate_threshold_bisection(parse_expr(kGlued))})
    v.require(r.estimate && *r.estimate >= 0.0 && *r.estimate <= 0.05, "glued: estimate " + est_text(r));
  return v;
}

Verdict ac2() {
  Verdict v;
  const Expr f = parse_expr(kSwapped);
  for (double x : {-2.0, -0.5, 0.0, 1.5}) v.require(f(x) == -x * x, "swapped piecewise is not -x^2");
  const auto r = compute_threshold(f);
  symbolic_is(v, "swapped", r, Bound::exact(2.0));
  v.require(cites(r, "Thm3.3"), "trace does not cite the constrained-piece max rule");
  near_estimates(v, "swapped", f, 2.0, 0.05);
  return v;
}

Verdict ac3() {
  Verdict v;
  for (auto [a, b] : {std::pair{1.0, 1.0}, {1.0, 2.0}, {2.0, 1.0}, {0.5, 3.0}}) {
    const std::string outer_first = "compose(-" + format_double(a / 2) + "*u^2, -" + format_double(b) + "*x)";
    const std::string inner_first = "compose(-" + format_double(b) + "*u, -" + format_double(a / 2) + "*x^2)";
    const double want = a * b * b;
    const Expr f21 = parse_expr(outer_first), f12 = parse_expr(inner_first);
    symbolic_is(v, outer_first, compute_threshold(f21), Bound::exact(want));
    near_estimates(v, outer_first, f21, want, 0.05 * want);
    symbolic_is(v, inner_first, compute_threshold(f12), Bound::exact(0.0));
    for (const auto& r : {estimate_threshold_liminf(f12), estimate_threshold_bisection(f12)})
      v.require(r.estimate && *r.estimate <= 0.05, inner_first + ": estimate " + est_text(r));
  }
  return v;
}

Verdict ac4() {
  Verdict v;
  const auto neg = estimate_threshold_liminf(parse_expr("-x^4"));
  v.require(neg.kind() == ThresholdKind::not_prox_bounded, "-x^4: liminf gives " + to_string(neg.bound));
  const auto pos = estimate_threshold_liminf(parse_expr("x^4"));
  v.require(pos.estimate && *pos.estimate <= 0.05, "x^4: liminf gives " + est_text(pos));
  return v;
}

Verdict ac5() {
  Verdict v;
  for (const auto& s : checks::fenchel_corpus()) {
    const auto o = checks::fenchel_identity(parse_expr(s), {0.5, 1.0, 2.0, 5.0}, CheckOptions{});
    v.require(o.passed, s + ": " + o.witness);
    v.require(o.detail.find("over 4 parameters") != std::string::npos, s + ": not every r was compared");
  }
  return v;
}

Verdict ac6() {
  Verdict v;
  const Expr a = parse_expr("-(1/2)*x^2 + sin(x)");
  const Expr b = parse_expr("-(1/2)*x^2 + (2*x + 3)");
  const Expr c = parse_expr("-(1/2)*x^2 + (-x^2)");
  symbolic_is(v, "bounded addend", compute_threshold(a), Bound::exact(1.0));
  symbolic_is(v, "affine addend", compute_threshold(b), Bound::exact(1.0));
  symbolic_is(v, "general addend", compute_threshold(c), Bound::interval(0.0, 3.0));
  near_estimates(v, "bounded addend", a, 1.0, 0.05);
  near_estimates(v, "affine addend", b, 1.0, 0.05);
  for (const auto& r : {estimate_threshold_liminf(c), estimate_threshold_bisection(c)})
    v.require(r.estimate && *r.estimate >= -0.05 && *r.estimate <= 3.05, "general addend: estimate " + est_text(r));
  return v;
}

Verdict ac7() {
  Verdict v;
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> lam(0.0, 5.0), curv(0.5, 4.0);
  for (int i = 0; i < 10; ++i) {
    const double l = lam(rng), c = curv(rng);
    const Expr f = scale(l, quadratic({-c}, {0.0}, 0.0));
    const std::string name = "lambda=" + format_double(l) + " c=" + format_double(c);
    symbolic_is(v, name, compute_threshold(f), Bound::exact(l * c));
    const auto lim = estimate_threshold_liminf(f);
    v.require(lim.estimate && std::abs(*lim.estimate - l * c) <= 0.05 * l * c, name + ": liminf " + est_text(lim));
    const auto bis = estimate_threshold_bisection(f);
    v.require(bis.lo() <= l * c && l * c <= bis.hi(), name + ": bisection " + to_string(bis.bound));
  }
  return v;
}

Verdict ac8() {
  Verdict v;
  const auto o = checks::threshold_ordering(20, CheckOptions{});
  v.require(o.passed, o.witness);
  v.require(o.metric == 20.0, "only " + format_double(o.metric) + " pairs verified on probes");
  return v;
}

Verdict ac9() {
  Verdict v;
  const auto eq = check_quadratic_minorant(parse_expr("-x^2"), 2.0);
  v.require(eq.holds && eq.m && std::abs(*eq.m) <= 1e-6, "(-x^2, r=2) should hold with m = 0");
  const auto none = check_quadratic_minorant(parse_expr("-abs(x)"), 0.0);
  v.require(!none.holds && !none.point.empty(), "(-|x|, r=0) should fail with a witness");
  const auto curved = check_quadratic_minorant(parse_expr("-abs(x)"), 0.1);
  v.require(curved.holds && curved.m && std::abs(*curved.m + 5.0) <= 1e-3, "(-|x|, r=0.1) should hold with m = -5");
  return v;
}

Verdict ac10() {
  Verdict v;
  const auto rep = check_corpus();
  for (const auto& o : rep.outcomes) v.require(o.passed, o.suite + " on " + o.subject + ": " + o.witness);
  for (const char* suite : {"envelope_below_function", "monotone_in_r", "envelope_converges_to_function", "prox_value_consistency"})
    v.require(std::any_of(rep.outcomes.begin(), rep.outcomes.end(), [&](const CheckOutcome& o) { return o.suite == suite; }),
              std::string("suite missing: ") + suite);
  return v;
}

struct Criterion {
  const char* id;
  const char* title;
  double time_limit;  // seconds, 0 for none
  std::function<Verdict()> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {"AC1", "glued piecewise quadratics: pieces 2, glued function 0", 2.0, ac1},
      {"AC2", "swapped glue gives -x^2 with threshold 2", 0.0, ac2},
      {"AC3", "composition table a*b^2 and 0", 0.0, ac3},
      {"AC4", "quartic: -x^4 not prox-bounded, x^4 near 0", 0.0, ac4},
      {"AC5", "envelope equals conjugate path within 1e-3", 30.0, ac5},
      {"AC6", "sum rules: bounded, affine and general addends", 0.0, ac6},
      {"AC7", "scaling multiplies the threshold", 0.0, ac7},
      {"AC8", "threshold ordering on 20 quadratic pairs", 0.0, ac8},
      {"AC9", "quadratic minorant checker", 0.0, ac9},
      {"AC10", "property suites over the corpus", 60.0, ac10},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v.ok = false;
      v.why = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (v.ok && c.time_limit > 0 && secs >= c.time_limit) {
      v.ok = false;
      v.why = "took " + format_double(secs) + " s, limit " + format_double(c.time_limit) + " s";
    }
    std::printf("%s %s: %s (%.2f s)%s%s\n", v.ok ? "PASS" : "FAIL", c.id, c.title, secs, v.ok ? "" : " -- ",
                v.why.c_str());
    failures += v.ok ? 0 : 1;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
