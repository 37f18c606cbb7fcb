#include <gtest/gtest.h>

#include "proxthresh/checks.hpp"

using namespace proxthresh;

TEST(Checks, ExpressionSuitesPassOnAbs) {
  const auto rep = check_expression(parse_expr("abs(x)"));
  EXPECT_TRUE(rep.all_passed());
  const auto it = std::find_if(rep.outcomes.begin(), rep.outcomes.end(),
                               [](const CheckOutcome& o) { return o.suite == "fenchel_identity"; });
  ASSERT_NE(it, rep.outcomes.end());
  EXPECT_LE(it->metric, 1e-3);
}

TEST(Checks, SplitPiecewiseAgreesWithNumericEstimate) {
  const auto rep = check_expression(parse_expr("piecewise{x<0: -(x^2); x>=0: x^2}"));
  EXPECT_TRUE(rep.all_passed());
}

TEST(Checks, ContinuityDetection) {
  EXPECT_TRUE(checks::is_continuous(parse_expr("piecewise{x < 0: -x^2; x >= 0: -x^2}")));
  EXPECT_FALSE(checks::is_continuous(parse_expr("piecewise{x < 0: 0; x >= 0: 1}")));
  EXPECT_FALSE(checks::is_continuous(parse_expr("x^2 + ind[0, 1]")));
}

TEST(Checks, EstimateAgreementRules) {
  ThresholdResult numeric;
  numeric.bound = Bound::interval(1.9, 2.1);
  numeric.estimate = 2.02;
  EXPECT_TRUE(checks::estimate_agrees(Bound::exact(2.0), numeric));
  numeric.estimate = 2.2;
  EXPECT_FALSE(checks::estimate_agrees(Bound::exact(2.0), numeric));
  EXPECT_TRUE(checks::estimate_agrees(Bound::interval(0.0, 3.0), numeric));
}

TEST(Checks, OrderedPairsAreOrderedAndSeeded) {
  const auto a = checks::ordered_quadratic_pairs(20, 7);
  const auto b = checks::ordered_quadratic_pairs(20, 7);
  ASSERT_EQ(a.size(), 20u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].first, b[i].first);
    for (double x = -50.0; x <= 50.0; x += 0.5) EXPECT_LE(a[i].first(x), a[i].second(x));
  }
}

TEST(Checks, ParametersBelowThresholdAreSkipped) {
  CheckOptions o;
  auto out = checks::fenchel_identity(parse_expr("-x^2"), {0.5, 1.0}, o);
  EXPECT_TRUE(out.passed);  // every r is below the threshold, so nothing is compared
  EXPECT_NE(out.detail.find("over 0 parameters"), std::string::npos);
}

TEST(Checks, CorpusPasses) {
  const auto rep = check_corpus();
  for (const auto& o : rep.outcomes) EXPECT_TRUE(o.passed) << o.suite << " " << o.subject << " " << o.witness;
}
