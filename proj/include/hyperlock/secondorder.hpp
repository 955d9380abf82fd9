#pragma once

#include "hyperlock/charops.hpp"
#include "hyperlock/linsolve.hpp"
#include "hyperlock/problem.hpp"

namespace hyperlock {

// First-order reformulation of a second-order problem in v = (d_t u/T + a d_x u,
// d_t u/T - a d_x u): speeds (-a, a), reflections (-1, 1) and a nonlocal gain
// gamma a(1) in the condition at x = 1.
class FosModel : public FirstOrderModel {
 public:
  explicit FosModel(SecondOrderProblem p);
  const SecondOrderProblem& problem() const { return p_; }

  double speed(int j, double x) const override { return j == 0 ? -p_.a(x) : p_.a(x); }
  double speed_derivative(int j, double x) const override {
    return j == 0 ? -p_.a.derivative(x) : p_.a.derivative(x);
  }
  std::array<double, 2> reflections() const override { return {-1.0, 1.0}; }
  double boundary_gain() const override { return p_.gamma * p_.a(1.0); }

  // b(x, eps g_1(t - phi) + J v, K v, L v) + a'/2 (v_1 - v_2) in both rows
  PeriodicField lower_order(const PeriodicField& v, double eps, double phi) const override;
  LinearCoefficients lower_order_jacobian(const PeriodicField& v, double eps,
                                          double phi) const override;
  PeriodicField lower_order_eps_rate(const PeriodicField& v, double phi) const override;
  PeriodicField lower_order_phase_rate(const PeriodicField& v, double eps, double phi) const override;

  // (f, f)
  PeriodicField forcing_field(int order, const GridPtr& grid) const override;
  // (2 g_1' / T, -2 a(1) (g_2 - gamma g_1))
  BoundarySignal boundary_forcing(double period, int order) const override;
  bool forced() const override { return p_.forced(); }

  // J v = 1/2 int_0^x (v_1 - v_2)/a dy
  PeriodicField partial_integral(const PeriodicField& v) const;

 private:
  struct Slots;
  Slots evaluate_slots(const PeriodicField& v, double eps, double phi) const;
  BoundarySignal g1_signal(int order) const;

  SecondOrderProblem p_;
};

struct FosContext {
  FosModel model;
  PeriodicField v0;     // to_first_order(u0, 1)
  PeriodicField beta0;  // diagonal of the linearized lower-order term at v0
  FosContext(SecondOrderProblem p, const PeriodicField& u0);
};

// v_1 = d_t u/T + a d_x u, v_2 = d_t u/T - a d_x u
PeriodicField to_first_order(const SecondOrderProblem& p, const PeriodicField& u, double period);
// u = eps g_1 + 1/2 int_0^x (v_1 - v_2)/a dy; g1 may be empty
PeriodicField from_first_order(const SecondOrderProblem& p, const PeriodicField& v, double eps,
                               const BoundarySignal& g1);

PeriodicField assemble_fos_nonlinearity(const FosModel& model, double eps, const PeriodicField& v);

// (0, gamma a(1) C_2(T, beta)[int_0^1 (v_1 - v_2)/a dy])
PeriodicField apply_E(const Transport& tr, double period, const PeriodicField& beta,
                      const PeriodicField& v);

// min_t |int (beta_1(t + alpha(x,1), x) + beta_2(t - alpha(x,1), x))/a dx| and the
// mirrored integral anchored at x = 0, by direct sampling in t.
NonResonanceReport check_nonres_eq(const SecondOrderProblem& p, const PeriodicField& u0);

// sup norm of d_t^2 u/T^2 - a^2 d_x^2 u + b - eps f and of both boundary conditions,
// with finite differences in x.
double residual_second_order(const SecondOrderProblem& p, double eps, double period,
                             const PeriodicField& u);

PdeResidual residual_fos(const Transport& tr, double eps, double period, const PeriodicField& v,
                         double phi = 0);

}  // namespace hyperlock
