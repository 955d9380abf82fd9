#pragma once

#include <array>
#include <stdexcept>

#include <Eigen/Dense>

#include "hyperlock/charops.hpp"

namespace hyperlock {

class LinsolveError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Contract: the loop multiplier |r1 r2 c1 c2| stays below 1 and the boundary
// equation is iterated forward. Inverted: it stays above 1 and the equation is
// iterated backwards in time.
enum class InversionRoute { None, Contract, Inverted };
const char* to_string(InversionRoute r);

struct NonResonanceReport {
  // margin[k] = min_t |log|r1 r2| - I_k(t)| for the loop integral closing at
  // x = 1 (k = 0) or at x = 0 (k = 1).
  std::array<double, 2> margin{};
  std::array<bool, 2> satisfied{};
  std::array<InversionRoute, 2> route{InversionRoute::None, InversionRoute::None};
  double c_plus = 0;   // max_t |r1 r2 c1 c2|
  double c_minus = 0;  // min_t |r1 r2 c1 c2|
  double tolerance = 1e-8;

  bool any() const { return satisfied[0] || satisfied[1]; }
};

// Loop integrals for an arbitrary diagonal coefficient beta at period T.
NonResonanceReport nonresonance(const Transport& tr, const PeriodicField& beta, double period = 1.0);
NonResonanceReport check_nonres_sys(const SystemProblem& p, const PeriodicField& u0);

struct InversionOptions {
  double tolerance = 1e-11;  // sup-norm error bound on the boundary trace
  int condition = -1;        // 0 or 1 forces the elimination order; -1 picks the larger margin
};

struct FunctionalEquationSolve {
  int iterations = 0;
  double contraction_factor = 0;
  int condition = 0;
  InversionRoute route = InversionRoute::None;
  PeriodicField solution;
  double residual = 0;  // ||(I - C R) u - f||_inf
};

// Solves (I - C(T, beta) R) u = f by reducing to a scalar periodic equation
// for one boundary trace. The nonlocal boundary gain is not part of R here.
FunctionalEquationSolve solve_I_minus_CR(const Transport& tr, double period,
                                         const PeriodicField& beta, const PeriodicField& f,
                                         const InversionOptions& opts = {});

// (r_1 u_2(., 0), r_2 u_1(., 1)) without the nonlocal gain.
BoundarySignal apply_reflections(const Transport& tr, const PeriodicField& u);

// w - C(T, beta) R w - D(T, beta) (beta w - db w)
PeriodicField apply_linearized(const Transport& tr, const KernelTables& kt,
                               const PeriodicField& beta, const LinearCoefficients& db,
                               const PeriodicField& w);
PeriodicField apply_linearized(const Transport& tr, double period, const PeriodicField& beta,
                               const LinearCoefficients& db, const PeriodicField& w);

// Dense matrix of apply_linearized in the packed real layout.
Eigen::MatrixXd assemble_linearized(const Transport& tr, const KernelTables& kt,
                                    const PeriodicField& beta, const LinearCoefficients& db);

struct SmallSingular {
  Eigen::VectorXd values;   // ascending
  Eigen::MatrixXd vectors;  // right singular vectors, one per column
  int iterations = 0;
};

// The `count` smallest singular values of a square matrix by block inverse
// iteration on A^T A through one LU factorization.
SmallSingular smallest_singular(const Eigen::MatrixXd& a, int count = 2, double tol = 1e-10,
                                int max_iterations = 200);

}  // namespace hyperlock
