#include <gtest/gtest.h>

#include <cmath>

#include "proxthresh/parser.hpp"
#include "proxthresh/serialize.hpp"

using namespace proxthresh;

TEST(Parser, UnaryMinusBindsLooserThanPower) {
  const Expr f = parse_expr("-x^2");
  EXPECT_EQ(f(3.0), -9.0);
  EXPECT_EQ(parse_expr("-(x^2)")(3.0), -9.0);
  EXPECT_THROW(parse_expr("(-x)^2"), ParseError);
}

TEST(Parser, EvaluatesBasicForms) {
  EXPECT_EQ(parse_expr("abs(x)")(-2.5), 2.5);
  EXPECT_EQ(parse_expr("max(x, 0)")(-1.0), 0.0);
  EXPECT_EQ(parse_expr("5")(123.0), 5.0);
  EXPECT_DOUBLE_EQ(parse_expr("-(1/2)*x^2 + sin(x)")(1.0), -0.5 + std::sin(1.0));
  EXPECT_EQ(parse_expr("x^4")(-2.0), 16.0);
  EXPECT_EQ(parse_expr("x^3")(-2.0), -8.0);
  EXPECT_EQ(parse_expr("scale(3, -x^2)")(1.0), -3.0);
}

TEST(Parser, IndicatorTakesInfinityOutsideItsSet) {
  const Expr f = parse_expr("-x^2 + ind[0, inf)");
  EXPECT_EQ(f(-1.0), kInf);
  EXPECT_EQ(f(2.0), -4.0);
  const Expr g = parse_expr("ind{x >= -1 & x <= 1}");
  EXPECT_EQ(g(1.0), 0.0);
  EXPECT_EQ(g(1.5), kInf);
}

TEST(Parser, PiecewiseSelectsFirstMatchingCell) {
  const Expr f = parse_expr("piecewise{x < 0: x^2; x >= 0: -x^2}");
  EXPECT_EQ(f(-2.0), 4.0);
  EXPECT_EQ(f(2.0), -4.0);
  EXPECT_EQ(f(0.0), 0.0);
}

TEST(Parser, GluedExampleIsSquare) {
  const Expr f = parse_expr("piecewise{x<0: piecewise{x<0: x^2; x>=0: -x^2}; x>=0: piecewise{x<0: -x^2; x>=0: x^2}}");
  for (double x : {-3.0, -0.5, 0.0, 0.5, 3.0}) EXPECT_EQ(f(x), x * x);
}

TEST(Parser, CompositionAppliesOuterToInner) {
  const Expr f = parse_expr("compose(-(1/2)*u^2, -2*x)");
  EXPECT_EQ(f(1.0), -2.0);
  EXPECT_EQ(f.dim(), 1);
}

TEST(Parser, TwoDimensionalInputs) {
  const Expr f = parse_expr("x^2 + y^2");
  EXPECT_EQ(f.dim(), 2);
  const Point p{1.0, 2.0};
  EXPECT_EQ(f(p), 5.0);
  EXPECT_EQ(parse_expr("norm")(Point{3.0, 4.0}), 5.0);
}

TEST(Parser, ReportsErrorsWithPositionAndCategory) {
  try {
    parse_expr("x +* 2");
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.category(), ParseError::Category::syntax);
    EXPECT_EQ(e.position(), 3u);
  }
  try {
    parse_expr("piecewise{x < -1: x; x > 1: -x}");
    FAIL() << "expected a partition error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.category(), ParseError::Category::partition);
  }
  EXPECT_THROW(parse_expr("x + y", 1), ParseError);
  EXPECT_THROW(parse_expr("frobnicate(x)"), ParseError);
}

TEST(Serialize, RoundTripsThroughText) {
  const char* samples[] = {
      "abs(x)", "x^2", "-x^2", "max(x, 0)", "x^3", "-abs(x)^1.9", "sin(x) - 0.5*x^2", "-x^2 + ind[0, inf)",
      "piecewise{x < 0: x^2; x >= 0: -x^2}", "compose(-0.5*u^2, -2*x)", "scale(2.5, cos(x))", "x^2 + y^2",
      "quad(1, 0.5, -2; 1, 0; 3)", "affine(1, -2; 4)", "x^1", "abs(x)^1", "ind{x + y <= 1}",
      "piecewise{x<0: piecewise{x<0: x^2; x>=0: -x^2}; x>=0: piecewise{x<0: -x^2; x>=0: x^2}}"};
  for (const char* s : samples) {
    const Expr f = parse_expr(s);
    const std::string text = serialize(f);
    EXPECT_EQ(parse_expr(text, f.dim()), f) << s << " -> " << text;
  }
}

TEST(Serialize, JsonTreeCarriesKindAndAttributes) {
  const auto j = to_json(parse_expr("max(x, 0)"));
  EXPECT_EQ(j["kind"], "max");
  EXPECT_EQ(j["children"].size(), 2u);
  EXPECT_EQ(j["attributes"]["convex"], true);
  EXPECT_EQ(j["attributes"]["bounded_below"], true);
}

TEST(Attributes, QuadraticCurvatureIsSmallestEigenvalue) {
  const Expr q = parse_expr("quad(2, 0, -4; 0, 0; 0)");
  ASSERT_TRUE(q.attributes().quadratic_min_curvature);
  EXPECT_NEAR(*q.attributes().quadratic_min_curvature, -4.0, 1e-12);
  EXPECT_EQ(q.attributes().convex, false);
}

TEST(Attributes, SumOfBoundedBelowIsBoundedBelow) {
  const Expr f = parse_expr("abs(x) + sin(x)");
  EXPECT_EQ(f.attributes().bounded_below, true);
  EXPECT_EQ(f.attributes().full_domain, true);
}

TEST(Expr, ScaleRequiresNonnegativeFactor) {
  EXPECT_THROW(scale(-1.0, parse_expr("x^2")), ExprError);
}

TEST(Expr, LscViolationsFlagUpperJumps) {
  EXPECT_TRUE(lsc_violations(parse_expr("piecewise{x < 0: 0; x >= 0: 1}")).size() == 1);
  EXPECT_TRUE(lsc_violations(parse_expr("piecewise{x <= 0: 0; x > 0: 1}")).empty());
}

TEST(Expr, ConstrainedPieceRestrictsToCell) {
  const Expr f = parse_expr("piecewise{x < 0: x^2; x >= 0: -x^2}");
  const Expr c = constrained_piece(f, 1);
  EXPECT_EQ(c(-1.0), kInf);
  EXPECT_EQ(c(2.0), -4.0);
  EXPECT_THROW(constrained_piece(f, 2), std::out_of_range);
}
