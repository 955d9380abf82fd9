#pragma once

#include <optional>
#include <string>

#include "hyperlock/problem.hpp"

namespace hyperlock {

struct Numerics {
  int modes = 16;
  int xnodes = 65;
  double tolerance = 1e-10;

  void validate() const;  // 1 <= modes <= 128, 9 <= xnodes <= 513, tolerance > 0
};

enum class ProblemKind { System, SecondOrder };

struct LoadedProblem {
  ProblemKind kind = ProblemKind::System;
  std::string name;
  SystemProblem system;       // kind == System
  SecondOrderProblem second;  // kind == SecondOrder
  UnforcedSolution solution;
  Numerics numerics;
};

struct NumericsOverride {
  std::optional<int> modes;
  std::optional<int> xnodes;
  std::optional<double> tolerance;
};

// Problem file schema (JSON):
//   kind        "system" (default) or "second_order"
//   name        free text
//   numerics    {"modes": M, "xnodes": N, "tolerance": tol}
//   system:        a [2 expr in x], b [2 expr in x,u1,u2], r [2 numbers],
//                  f [2 expr in t,x], g [2 expr in t]
//   second_order:  a expr in x, b expr in x,u,p,q (p = u_t/T, q = u_x), gamma number,
//                  f expr in t,x, g1 and g2 expr in t
//   u0          one of
//     {"manufactured": "ellipse", speeds, amplitude, amplitude_growth, phase,
//      coupling_mean, coupling_swing, stiffness}
//     {"manufactured": "standing_wave", speed, wavenumber, amplitude, drift, stiffness}
//     {"manufactured": "transport_counterexample", "psi": [[re, im], ...]}
//     {"manufactured": "wave_counterexample", "coefficients": [c_0, c_1, ...]}
//     {"expression": [expr in t,x per component]}
//     {"file": "path to a field CSV, relative to the problem file"}
// Manufactured blocks supply a, b, r (and gamma); the file then only adds forcing.
// Errors are ProblemError with the line of the offending key.
LoadedProblem load_problem(const std::string& path, const NumericsOverride& override = {});
LoadedProblem parse_problem(const std::string& text, const std::string& base_dir,
                            const NumericsOverride& override = {});

}  // namespace hyperlock
