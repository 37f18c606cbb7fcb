// Parse an expression, ask for its threshold, then look at the envelope
// just above it.
#include <cstdio>

#include "proxthresh/proxthresh.hpp"

int main() {
  using namespace proxthresh;
  const Expr f = parse_expr("piecewise{x < 0: -x^2; x >= 0: -(1/2)*x^2} + sin(x)");
  const ThresholdResult r = compute_threshold(f);
  std::printf("%s\n", to_string(r.bound).c_str());
  for (const auto& t : r.trace) std::printf("  %-8s %s -> %s\n", t.paper_id.c_str(), t.rule.c_str(), to_string(t.bound).c_str());

  const double above = r.hi() + 0.5;
  for (double x : {-1.0, 0.0, 1.0}) {
    const auto e = moreau_envelope(f, above, {x});
    std::printf("e_%g f(%g) = %s\n", above, x, format_double(e.value).c_str());
  }
  const auto est = estimate_threshold_bisection(f);
  std::printf("bisection: %s\n", to_string(est.bound).c_str());
  return r.bound.is_finite_claim() && est.hi() <= r.hi() + 0.05 ? 0 : 1;
}
