#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "proxthresh/cli.hpp"

using namespace proxthresh;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

}  // namespace

TEST(Cli, ThresholdExitCodes) {
  EXPECT_EQ(run({"threshold", "0"}).code, 0);
  EXPECT_EQ(run({"threshold", "-x^3"}).code, 3);
  EXPECT_EQ(run({"threshold", "x^3 + (-x^3)"}).code, 4);
  const auto bad = run({"threshold", "x +* 2"});
  EXPECT_EQ(bad.code, 2);
  EXPECT_NE(bad.err.find("position 3"), std::string::npos);
}

TEST(Cli, ThresholdTraceNamesRules) {
  const auto r = run({"threshold", "compose(-(1/2)*u^2, -2*x)"});
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out.substr(0, 9), "Exact(4)\n");
  EXPECT_NE(r.out.find("CompProp.iii"), std::string::npos);
  const auto p = run({"threshold", "piecewise{x<0: x^2; x>=0: -(x^2)}"});
  EXPECT_NE(p.out.find("Thm3.3"), std::string::npos);
}

TEST(Cli, EnvelopeGrid) {
  const auto r = run({"envelope", "abs(x)", "--r", "1", "--range", "-5:5", "--steps", "101"});
  ASSERT_EQ(r.code, 0);
  const Grid g = parse_grid_csv(r.out);
  ASSERT_EQ(g.points.size(), 101u);
  EXPECT_EQ(g.points[70][0], 2.0);
  EXPECT_NEAR(g.values[70], 1.5, 1e-9);
  const auto c = run({"envelope", "5", "--r", "7", "--range", "0:1", "--steps", "2"});
  EXPECT_EQ(c.out, "x,value\n0,5\n1,5\n");
}

TEST(Cli, EnvelopeBelowThreshold) {
  const auto r = run({"envelope", "-(x^2)", "--r", "1", "--range", "-1:1", "--steps", "11"});
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("r below threshold"), std::string::npos);
}

TEST(Cli, EnvelopeFunctionOnly) {
  const auto r = run({"envelope", "-abs(x)", "--function-only", "--range", "-1:1", "--steps", "3"});
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out, "x,value\n-1,-1\n0,0\n1,-1\n");
}

TEST(Cli, CsvReparsesBitExactly) {
  const auto r = run({"envelope", "-0.5*x^2 + sin(x)", "--r", "1.7", "--range", "-3:3", "--steps", "41"});
  ASSERT_EQ(r.code, 0);
  const Grid g = parse_grid_csv(r.out);
  const Expr f = parse_expr("-0.5*x^2 + sin(x)");
  for (std::size_t i = 0; i < g.points.size(); ++i) {
    const double direct = moreau_envelope(f, 1.7, g.points[i]).value;
    EXPECT_EQ(g.values[i], direct);
  }
  EXPECT_EQ(grid_csv(g), r.out);
  Grid inf_grid{1, {{0.0}, {1.0}}, {-kInf, 0.1}};
  EXPECT_EQ(grid_csv(inf_grid), "x,value\n0,-inf\n1,0.1\n");
  const Grid back = parse_grid_csv(grid_csv(inf_grid));
  EXPECT_EQ(back.values[0], -kInf);
  EXPECT_EQ(back.values[1], 0.1);
}

TEST(Cli, TwoDimensionalRange) {
  const auto r = run({"envelope", "x^2 + y^2", "--r", "1", "--range", "-1:1,0:1", "--steps", "2"});
  ASSERT_EQ(r.code, 0);
  const Grid g = parse_grid_csv(r.out);
  EXPECT_EQ(g.dim, 2);
  ASSERT_EQ(g.points.size(), 4u);
  EXPECT_EQ(g.points[1], (Point{-1.0, 1.0}));
  EXPECT_EQ(run({"envelope", "abs(x)", "--r", "1", "--range", "-1:1,0:1"}).code, 2);
}

TEST(Cli, EstimateMethods) {
  const auto both = run({"estimate", "-(x^2)", "--method", "both"});
  EXPECT_EQ(both.code, 0);
  EXPECT_NE(both.out.find("liminf"), std::string::npos);
  EXPECT_NE(both.out.find("bisection"), std::string::npos);
  EXPECT_TRUE(both.err.empty());
  const auto cubic = run({"estimate", "x^3"});
  EXPECT_EQ(cubic.code, 3);
  EXPECT_NE(cubic.out.find("NotProxBounded"), std::string::npos);
  EXPECT_EQ(run({"estimate", "sin(x)", "--method", "liminf"}).code, 0);
  EXPECT_EQ(run({"estimate", "sin(x)", "--method", "newton"}).code, 2);
}

TEST(Cli, EstimateWarnsOnDisagreement) {
  const auto r = run({"estimate", "-abs(x)^1.9"});
  EXPECT_NE(r.err.find("disagree"), std::string::npos);
}

TEST(Cli, ProxAndConjugate) {
  const auto p = run({"prox", "abs(x)", "--r", "1", "--x", "2", "--format", "csv"});
  EXPECT_EQ(p.code, 0);
  EXPECT_EQ(p.out, "x\n1\n");
  EXPECT_EQ(run({"prox", "-x^2", "--r", "1", "--x", "0"}).code, 3);
  EXPECT_EQ(run({"prox", "abs(x)", "--r", "1"}).code, 2);
  const auto c = run({"conjugate", "abs(x)", "--x", "0.5"});
  EXPECT_EQ(c.out, "x,value\n0.5,0\n");
}

TEST(Cli, CheckReportsWitnessOnFailure) {
  const auto ok = run({"check", "abs(x)"});
  EXPECT_EQ(ok.code, 0);
  EXPECT_NE(ok.out.find("PASS fenchel_identity"), std::string::npos);
  const auto bad = run({"check", "-abs(x)^1.9"});
  EXPECT_EQ(bad.code, 1);
  EXPECT_NE(bad.out.find("witness:"), std::string::npos);
}

TEST(Cli, CheckIsDeterministic) {
  const auto a = run({"check", "--corpus", "--seed", "5", "--format", "json"});
  const auto b = run({"check", "--corpus", "--seed", "5", "--format", "json"});
  EXPECT_EQ(a.code, 0);
  EXPECT_EQ(a.out, b.out);
}

TEST(Cli, OutFileIsWrittenWhole) {
  const auto path = (std::filesystem::temp_directory_path() / "proxthresh_cli_out.csv").string();
  std::filesystem::remove(path);
  const auto r = run({"envelope", "abs(x)", "--r", "1", "--range", "0:2", "--steps", "3", "--out", path});
  EXPECT_EQ(r.code, 0);
  EXPECT_TRUE(r.out.empty());
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  const Grid g = parse_grid_csv(ss.str());
  ASSERT_EQ(g.values.size(), 3u);
  EXPECT_NEAR(g.values[0], 0.0, 1e-9);
  EXPECT_NEAR(g.values[1], 0.5, 1e-9);
  EXPECT_NEAR(g.values[2], 1.5, 1e-9);
  EXPECT_FALSE(std::filesystem::exists(path + ".tmp"));
  std::filesystem::remove(path);
}

TEST(Cli, ExpressionFromFile) {
  const auto path = (std::filesystem::temp_directory_path() / "proxthresh_expr.txt").string();
  std::ofstream(path) << "scale(3, -x^2)\n";
  const auto r = run({"threshold", path});
  EXPECT_EQ(r.out.substr(0, 9), "Exact(6)\n");
  std::filesystem::remove(path);
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(run({}).code, 2);
  EXPECT_EQ(run({"frobnicate"}).code, 2);
  EXPECT_EQ(run({"envelope", "abs(x)", "--range", "0:1"}).code, 2);
  EXPECT_EQ(run({"envelope", "abs(x)", "--r", "1", "--range", "0:1", "--steps", "1"}).code, 2);
  EXPECT_EQ(run({"threshold", "x", "--format", "csv"}).code, 2);
  EXPECT_EQ(run({"envelope", "abs(x)", "--r", "1", "--range", "0:1", "--max-radius", "-3"}).code, 2);
  EXPECT_EQ(run({"--help"}).code, 0);
}

TEST(Cli, JsonOutputIsParseable) {
  const auto t = nlohmann::json::parse(run({"threshold", "-x^2", "--format", "json"}).out);
  EXPECT_EQ(t["result"]["kind"], "exact");
  EXPECT_EQ(t["result"]["lo"], 2.0);
  const auto e = nlohmann::json::parse(run({"envelope", "-x^2", "--r", "2", "--range", "-1:1", "--steps", "3", "--format", "json"}).out);
  EXPECT_EQ(e["rows"][0]["value"], "-inf");
  EXPECT_EQ(e["rows"][1]["status"], "inconclusive");
}
