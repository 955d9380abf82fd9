#pragma once

#include <stdexcept>

#include <Eigen/Dense>

#include "hyperlock/charops.hpp"
#include "hyperlock/secondorder.hpp"

namespace hyperlock {

class AdjointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct AdjointSolution {
  PeriodicField u_star;
  double normalization_value = 0;  // pairing of the raw unit null vector with d_t u0
  double kernel_gap = 0;           // sigma_2 / sigma_1 of the discrete adjoint operator
  double residual = 0;             // sup norm of the discrete adjoint residual after scaling
};

// Adjoint of the linearization of a first-order model at v0, T = 1:
//   -d_t w_k - d_x(a_k w_k) + sum_j P_jk w_j
//     +- (1/(2 a_2)) (int_x^1 sum_j N_j w_j dy + 2 gain a_2(1) w_2(t,1)) = 0,
// with + in the first row, P the pointwise and N the nonlocal coefficients, and
//   r_1 a_1(0) w_1(t,0) + a_2(0) w_2(t,0) = 0,  a_1(1) w_1(t,1) + r_2 a_2(1) w_2(t,1) = 0.
class AdjointOperator {
 public:
  AdjointOperator(const Transport& tr, const LinearCoefficients& lin);

  // Interior residual with the boundary conditions written into the rows of
  // the component whose adjoint characteristic enters at that end.
  PeriodicField apply(const PeriodicField& w) const;
  Eigen::MatrixXd assemble() const;
  // Interior rows only (no boundary replacement) and the two boundary rows.
  PdeResidual residual(const PeriodicField& w) const;

  // component replaced by the condition at x = 0 and x = 1
  int left_row() const { return left_row_; }
  int right_row() const { return right_row_; }

 private:
  PeriodicField interior(const PeriodicField& w) const;
  BoundarySignal boundary(const PeriodicField& w) const;

  const Transport* tr_;
  LinearCoefficients transposed_;
  std::array<std::vector<double>, 2> nonlocal_;
  int left_row_ = 1, right_row_ = 0;
};

// Null vector of the assembled operator scaled so that l2_inner(pair_with, u*) = 1.
AdjointSolution solve_adjoint(const Transport& tr, const LinearCoefficients& lin,
                              const PeriodicField& pair_with);

AdjointSolution solve_adjoint_sys(const SystemProblem& p, const PeriodicField& u0);

struct SecondOrderAdjoint {
  AdjointSolution first_order;  // v*
  PeriodicField u_star;         // v*_1 + v*_2
  PeriodicField u_tilde;        // v*_2 - v*_1
  // sup |u_tilde - (1/a) int_x^1 (d_t u* - b_3 u*) dy|
  double identity_error = 0;
  // int int (2 d_t^2 u0 + b_3 d_t u0) u*
  double pairing = 0;
};

SecondOrderAdjoint solve_adjoint_eq(const SecondOrderProblem& p, const PeriodicField& u0);

// b_3 = d b / d(u_t) at u0, and the other partials, sampled as fields.
PeriodicField second_order_partial(const SecondOrderProblem& p, const PeriodicField& u0, int slot);

}  // namespace hyperlock
