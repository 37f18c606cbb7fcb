#include <gtest/gtest.h>

#include <cmath>

#include "proxthresh/numerics.hpp"
#include "proxthresh/parser.hpp"

using namespace proxthresh;

namespace {

double envelope(const char* f, double r, double x) { return moreau_envelope(parse_expr(f), r, {x}).value; }

}  // namespace

TEST(SolverConfig, RejectsNonsense) {
  SolverConfig c;
  c.max_radius = -1.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = {};
  c.grid_points = 2;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(MoreauEnvelope, AbsoluteValueIsHuber) {
  const auto e = moreau_envelope(parse_expr("abs(x)"), 1.0, {2.0});
  EXPECT_EQ(e.status, EnvelopeStatus::finite);
  EXPECT_NEAR(e.value, 1.5, 1e-9);
  ASSERT_EQ(e.minimizers.size(), 1u);
  EXPECT_NEAR(e.minimizers[0][0], 1.0, 1e-6);
  EXPECT_NEAR(envelope("abs(x)", 1.0, 0.5), 0.125, 1e-9);
}

TEST(MoreauEnvelope, ConstantIsUnchanged) {
  for (double r : {0.0, 1.0, 7.0}) EXPECT_EQ(envelope("5", r, 3.0), 5.0);
}

TEST(MoreauEnvelope, BelowThresholdIsMinusInfinity) {
  const auto e = moreau_envelope(parse_expr("-x^2"), 1.0, {0.0});
  EXPECT_EQ(e.status, EnvelopeStatus::negative_infinity);
  EXPECT_EQ(e.value, -kInf);
  EXPECT_TRUE(e.witness);
}

TEST(MoreauEnvelope, SquareAtRTwo) { EXPECT_NEAR(envelope("x^2", 2.0, 1.0), 0.5, 1e-9); }

TEST(MoreauEnvelope, TwoDimensional) {
  const auto e = moreau_envelope(parse_expr("x^2 + y^2"), 1.0, {-1.0, 0.0});
  EXPECT_NEAR(e.value, 1.0 / 3.0, 1e-8);
}

TEST(ProxPoints, ProjectionAndStationarity) {
  const auto proj = prox_points(parse_expr("ind[0, inf)"), 1.0, {-3.0});
  ASSERT_EQ(proj.size(), 1u);
  EXPECT_NEAR(proj[0][0], 0.0, 1e-6);
  const auto sq = prox_points(parse_expr("x^2"), 1.0, {3.0});
  ASSERT_EQ(sq.size(), 1u);
  EXPECT_NEAR(sq[0][0], 1.0, 1e-6);
  EXPECT_THROW(prox_points(parse_expr("-x^2"), 1.0, {0.0}), std::domain_error);
}

TEST(FenchelConjugate, ClosedForms) {
  EXPECT_NEAR(fenchel_conjugate(parse_expr("(1/2)*x^2"), {2.0}), 2.0, 1e-8);
  EXPECT_NEAR(fenchel_conjugate(parse_expr("abs(x)"), {0.5}), 0.0, 1e-9);
  EXPECT_NEAR(fenchel_conjugate(parse_expr("3*x"), {3.0}), 0.0, 1e-9);
  EXPECT_EQ(fenchel_conjugate(parse_expr("3*x"), {1.0}), kInf);
}

TEST(EnvelopeViaConjugate, MatchesDirectPath) {
  EXPECT_NEAR(envelope_via_conjugate(parse_expr("abs(x)"), 1.0, {2.0}), 1.5, 1e-6);
  EXPECT_NEAR(envelope_via_conjugate(parse_expr("4"), 2.0, {1.0}), 4.0, 1e-9);
  EXPECT_NEAR(envelope_via_conjugate(parse_expr("x^2"), 2.0, {1.0}), 0.5, 1e-6);
}

TEST(BoundedBelowProbe, CurvatureEdges) {
  EXPECT_TRUE(bounded_below_probe(parse_expr("-x^2 + 1.01*x^2")).bounded_below);
  const auto neg = bounded_below_probe(parse_expr("-x^2 + 0.99*x^2"));
  EXPECT_FALSE(neg.bounded_below);
  EXPECT_FALSE(neg.point.empty());
  EXPECT_TRUE(bounded_below_probe(parse_expr("-abs(x) + 0.05*x^2")).bounded_below);
}

TEST(QuadraticMinorant, ConcaveAndAbsoluteValueCases) {
  const auto eq = check_quadratic_minorant(parse_expr("-x^2"), 2.0);
  EXPECT_TRUE(eq.holds);
  EXPECT_NEAR(*eq.m, 0.0, 1e-6);
  const auto none = check_quadratic_minorant(parse_expr("-abs(x)"), 0.0);
  EXPECT_FALSE(none.holds);
  EXPECT_FALSE(none.point.empty());
  const auto curved = check_quadratic_minorant(parse_expr("-abs(x)"), 0.1);
  EXPECT_TRUE(curved.holds);
  EXPECT_NEAR(*curved.m, -5.0, 1e-3);
}

TEST(LiminfEstimator, Corpus) {
  const auto a = estimate_threshold_liminf(parse_expr("-(3/2)*x^2"));
  ASSERT_TRUE(a.estimate);
  EXPECT_NEAR(*a.estimate, 3.0, 0.05);
  const auto b = estimate_threshold_liminf(
      parse_expr("piecewise{x<0: piecewise{x<0: x^2; x>=0: -x^2}; x>=0: piecewise{x<0: -x^2; x>=0: x^2}}"));
  ASSERT_TRUE(b.estimate);
  EXPECT_NEAR(*b.estimate, 0.0, 0.05);
  EXPECT_EQ(estimate_threshold_liminf(parse_expr("-x^4")).kind(), ThresholdKind::not_prox_bounded);
  EXPECT_LE(*estimate_threshold_liminf(parse_expr("x^4")).estimate, 0.05);
}

TEST(BisectionEstimator, Corpus) {
  const auto a = estimate_threshold_bisection(parse_expr("-x^2"));
  EXPECT_LE(a.lo(), 2.0);
  EXPECT_GE(a.hi(), 2.0);
  EXPECT_LE(a.hi() - a.lo(), 1e-3 * 2.0);
  const auto b = estimate_threshold_bisection(parse_expr("x^2"));
  EXPECT_EQ(b.lo(), 0.0);
  EXPECT_LE(b.hi(), SolverConfig{}.bisection_tol);
  EXPECT_EQ(estimate_threshold_bisection(parse_expr("-x^3")).kind(), ThresholdKind::not_prox_bounded);
}

TEST(Determinism, RepeatedCallsAreBitIdentical) {
  const Expr f = parse_expr("-0.5*x^2 + sin(x)");
  const auto a = moreau_envelope(f, 1.5, {0.7});
  const auto b = moreau_envelope(f, 1.5, {0.7});
  EXPECT_EQ(a.value, b.value);
  EXPECT_EQ(a.minimizers, b.minimizers);
}
