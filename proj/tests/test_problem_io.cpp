#include <gtest/gtest.h>

#include "hyperlock/charops.hpp"
#include "hyperlock/problem_io.hpp"

using namespace hyperlock;

namespace {

std::string problem_path(const std::string& name) {
  return std::string(HYPERLOCK_PROBLEM_DIR) + "/" + name;
}

std::string error_of(const std::string& text) {
  try {
    parse_problem(text, ".");
  } catch (const ProblemError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(ProblemIo, LoadsForcedEllipse) {
  const auto lp = load_problem(problem_path("ellipse_forced.json"));
  EXPECT_EQ(lp.kind, ProblemKind::System);
  EXPECT_EQ(lp.numerics.modes, 16);
  EXPECT_EQ(lp.numerics.xnodes, 65);
  EXPECT_TRUE(lp.system.forced());
  double f[2];
  lp.system.f(0.0, 0.5, f);
  EXPECT_NEAR(f[0], 1.5, 1e-14);
  EXPECT_LT(lp.solution.residual, 1e-7);
}

TEST(ProblemIo, OverridesNumerics) {
  NumericsOverride o;
  o.modes = 8;
  o.xnodes = 33;
  const auto lp = load_problem(problem_path("ellipse_forced.json"), o);
  EXPECT_EQ(lp.solution.u0.order(), 8);
  EXPECT_EQ(lp.solution.u0.nodes(), 33);
}

TEST(ProblemIo, LoadsSecondOrderFiles) {
  const auto wave = load_problem(problem_path("standing_wave_forced.json"));
  EXPECT_EQ(wave.kind, ProblemKind::SecondOrder);
  EXPECT_TRUE(wave.second.g1 && wave.second.g2 && wave.second.f);
  const auto cex = load_problem(problem_path("wave_counterexample.json"));
  EXPECT_FALSE(cex.second.forced());
}

TEST(ProblemIo, SuppliedSolutionFromExpressions) {
  const std::string text = R"json({
    "name": "transport",
    "a": ["1", "-1"],
    "b": ["0", "0"],
    "r": [1, 1],
    "numerics": {"modes": 4, "xnodes": 17},
    "u0": {"expression": ["sin(2*pi*(t - x))", "sin(2*pi*(t + x))"]}
  })json";
  const auto lp = parse_problem(text, ".");
  EXPECT_EQ(lp.solution.provenance, Provenance::Supplied);
  EXPECT_LT(lp.solution.residual, 1e-10);
  EXPECT_FALSE(lp.system.forced());
}

TEST(ProblemIo, SuppliedSolutionResidualIsRecorded) {
  const std::string text = R"json({
    "a": ["1", "-1"], "b": ["0", "0"], "r": [1, 1],
    "numerics": {"modes": 4, "xnodes": 17},
    "u0": {"expression": ["sin(2*pi*t)", "0"]}
  })json";
  EXPECT_GT(parse_problem(text, ".").solution.residual, 1.0);
}

TEST(ProblemIo, ErrorsCarryLineNumbers) {
  const std::string bad_expr = "{\n  \"a\": [\"1\", \"-1\"],\n  \"b\": [\"0\", \"u1 +\"],\n  \"r\": [1, 1],\n"
                               "  \"u0\": {\"expression\": [\"0\", \"0\"]}\n}";
  const auto msg = error_of(bad_expr);
  EXPECT_NE(msg.find("line 3"), std::string::npos) << msg;

  const auto syntax = error_of("{\n  \"a\": [1, -1],\n  \"b\": \n}");
  EXPECT_NE(syntax.find("line 4"), std::string::npos) << syntax;

  const auto missing = error_of("{\n  \"a\": [\"1\", \"-1\"]\n}");
  EXPECT_NE(missing.find("'u0'"), std::string::npos) << missing;
}

TEST(ProblemIo, EnforcesNumericsBounds) {
  const std::string base = R"json("u0": {"manufactured": "transport_counterexample", "psi": [[0,0],[0,-0.5]]})json";
  EXPECT_NE(error_of("{\"numerics\": {\"modes\": 129}, " + base + "}").find("modes"), std::string::npos);
  EXPECT_NE(error_of("{\"numerics\": {\"xnodes\": 514}, " + base + "}").find("xnodes"), std::string::npos);
  EXPECT_NE(error_of("{\"numerics\": {\"tolerance\": 0}, " + base + "}").find("tolerance"),
            std::string::npos);
  EXPECT_NO_THROW(parse_problem("{\"numerics\": {\"modes\": 128, \"xnodes\": 17}, " + base + "}", "."));
}

TEST(ProblemIo, RejectsCoefficientsNextToManufacturedSolution) {
  const auto msg = error_of(R"json({"a": ["1", "-1"],
    "u0": {"manufactured": "ellipse"}})json");
  EXPECT_NE(msg.find("'a'"), std::string::npos) << msg;
  EXPECT_NE(error_of(R"json({"kind": "second_order", "u0": {"manufactured": "ellipse"}})json").find("kind"),
            std::string::npos);
}

TEST(ProblemIo, RejectsEqualSpeeds) {
  const auto msg = error_of(R"json({"a": ["2", "2"], "b": ["0", "0"], "r": [1, 1],
    "numerics": {"modes": 4, "xnodes": 17},
    "u0": {"expression": ["0", "0"]}})json");
  EXPECT_NE(msg.find("speeds coincide"), std::string::npos) << msg;
}
