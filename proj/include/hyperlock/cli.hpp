#pragma once

#include <iosfwd>
#include <optional>
#include <string>

#include "hyperlock/problem_io.hpp"

namespace hyperlock::cli {

enum ExitCode { kSuccess = 0, kUsage = 1, kAssumption = 2 };

struct RunConfig {
  std::string command;  // check-nonres | adjoint | phase-curve | lock | sweep | diagnose
  std::string problem_path;
  bool second_order = false;
  NumericsOverride numerics;
  std::optional<double> eps0;
  std::optional<double> tau0;  // defaults to the mean of the phase curve
  int eps_steps = 4;
  int tau_steps = 3;
  std::string out_dir = ".";
};

int run(const RunConfig& config, std::ostream& out, std::ostream& err);
// Parses argv with CLI11 and runs; usage errors return kUsage.
int main(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace hyperlock::cli
