#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "hyperlock/cli.hpp"

namespace fs = std::filesystem;
using namespace hyperlock;

namespace {

std::string problem_path(const std::string& name) {
  return std::string(HYPERLOCK_PROBLEM_DIR) + "/" + name;
}

struct Outcome {
  int code;
  std::string out, err;
};

Outcome invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "hyperlock");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  std::ostringstream out, err;
  const int code = cli::main(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("hyperlock_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::vector<std::string> lines_of(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::string> out;
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

// coarsest grid on which the ellipse passes the residual check on u0
const std::vector<std::string> kSmall = {"--modes", "8", "--xnodes", "41"};

std::vector<std::string> with(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

}  // namespace

TEST(Cli, CounterexamplesViolateBothConditions) {
  const auto dir = scratch("nonres");
  const auto sys = invoke({"check-nonres", problem_path("counterexample.json"), "--out", dir.string()});
  EXPECT_EQ(sys.code, cli::kAssumption);
  EXPECT_NE(sys.out.find("both conditions violated"), std::string::npos) << sys.out;
  EXPECT_TRUE(fs::exists(dir / "nonres.csv"));
  const auto eq = invoke({"check-nonres", problem_path("wave_counterexample.json"), "--second-order", "--out",
                          dir.string()});
  EXPECT_EQ(eq.code, cli::kAssumption);
  EXPECT_NE(eq.out.find("both conditions violated"), std::string::npos) << eq.out;
}

TEST(Cli, NonResonantProblemsPass) {
  const auto dir = scratch("nonres_ok");
  EXPECT_EQ(invoke(with({"check-nonres", problem_path("ellipse_forced.json"), "--out", dir.string()}, kSmall)).code,
            cli::kSuccess);
  EXPECT_EQ(invoke(with({"check-nonres", problem_path("standing_wave_forced.json"), "--second-order", "--out",
                         dir.string()},
                        kSmall))
                .code,
            cli::kSuccess);
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(invoke({}).code, cli::kUsage);
  EXPECT_EQ(invoke({"unknown", problem_path("ellipse_forced.json")}).code, cli::kUsage);
  EXPECT_EQ(invoke({"check-nonres", problem_path("missing.json")}).code, cli::kUsage);
  EXPECT_EQ(invoke({"check-nonres", problem_path("ellipse_forced.json"), "--modes", "0"}).code, cli::kUsage);
  EXPECT_EQ(invoke({"lock", problem_path("ellipse_forced.json")}).code, cli::kUsage);
  // mode flag must agree with the file
  EXPECT_EQ(invoke({"adjoint", problem_path("ellipse_forced.json"), "--second-order"}).code, cli::kUsage);
  EXPECT_EQ(invoke({"adjoint", problem_path("standing_wave_forced.json")}).code, cli::kUsage);
  EXPECT_EQ(invoke({"--help"}).code, cli::kSuccess);
}

TEST(Cli, LockingOnResonantProblemIsRefused) {
  const auto dir = scratch("refused");
  const auto r = invoke(with({"lock", problem_path("counterexample.json"), "--eps0", "1e-2", "--out", dir.string()},
                             {"--modes", "4", "--xnodes", "17"}));
  EXPECT_EQ(r.code, cli::kAssumption);
  EXPECT_FALSE(r.err.empty());
}

TEST(Cli, PhaseCurveTableIsCompleteAndDeterministic) {
  const auto a = scratch("phase_a"), b = scratch("phase_b");
  ASSERT_EQ(invoke(with({"phase-curve", problem_path("ellipse_forced.json"), "--out", a.string()}, kSmall)).code,
            cli::kSuccess);
  ASSERT_EQ(invoke(with({"phase-curve", problem_path("ellipse_forced.json"), "--out", b.string()}, kSmall)).code,
            cli::kSuccess);
  const auto lines = lines_of(a / "phase_curve.csv");
  ASSERT_EQ(lines.size(), 514u);  // numerics line, header, 512 rows
  EXPECT_EQ(lines[0].rfind("# ", 0), 0u);
  EXPECT_EQ(lines[1], "phi,Phi,dPhi");
  EXPECT_EQ(lines[2].rfind("0,", 0), 0u);
  EXPECT_EQ(slurp(a / "phase_curve.csv"), slurp(b / "phase_curve.csv"));
  EXPECT_TRUE(fs::exists(a / "phase_curve.svg"));
}

TEST(Cli, SecondOrderAdjointWritesAllFields) {
  const auto dir = scratch("adjoint");
  ASSERT_EQ(invoke(with({"adjoint", problem_path("standing_wave_forced.json"), "--second-order", "--out",
                         dir.string()},
                        kSmall))
                .code,
            cli::kSuccess);
  for (const char* f : {"u_star.csv", "u_tilde.csv", "v_star.csv"}) EXPECT_TRUE(fs::exists(dir / f)) << f;
}

TEST(Cli, LockWritesTheSolution) {
  const auto dir = scratch("lock");
  const auto r =
      invoke(with({"lock", problem_path("ellipse_forced.json"), "--eps0", "1e-2", "--out", dir.string()}, kSmall));
  ASSERT_EQ(r.code, cli::kSuccess) << r.err;
  EXPECT_NE(r.out.find("period"), std::string::npos);
  EXPECT_EQ(lines_of(dir / "lock.csv").size(), 3u);
  EXPECT_TRUE(fs::exists(dir / "locked_u.csv"));
}
