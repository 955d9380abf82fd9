#pragma once

#include <stdexcept>
#include <utility>
#include <vector>

#include "hyperlock/adjoint.hpp"

namespace hyperlock {

class PhaseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A 1-periodic trig polynomial Phi with a sampled table for output.
struct PhaseCurve {
  std::vector<cplx> modes;     // Phi = sum_{|k|<=M} modes_k e^{2 pi i k phi}
  std::vector<double> phi;     // sample grid on [0,1)
  std::vector<double> values;  // Phi on the grid
  std::vector<double> slopes;  // Phi' on the grid

  static PhaseCurve from_modes(std::vector<cplx> modes, int samples = 512);
  double value(double p) const { return trig::evaluate(modes, p); }
  double slope(double p) const { return trig::evaluate_derivative(modes, p); }
};

struct PhaseRoot {
  double phi = 0;
  double slope = 0;
  bool nondegenerate = false;  // |Phi'(phi)| > 1e-8
};

// -sum_j int int f_j(t - phi, x) u*_j - int a_1(0) g_1(t - phi) u*_1(t,0) - a_2(1) g_2(t - phi) u*_2(t,1) dt
PhaseCurve phi_curve_sys(const SystemProblem& p, const AdjointSolution& adj);

// -int int f(t - phi, x) u* - int a(1)^2 g_2(t - phi) u*(t,1) + a(0)^2 g_1(t - phi) d_x u*(t,0) dt
PhaseCurve phi_curve_eq(const SecondOrderProblem& p, const SecondOrderAdjoint& adj);

// Through the operators of any first-order model:
// Phi(phi) = -phi_functional(C S_phi^{-1} g + D (S_phi^{-1} f - d_eps b(phi))),
// sampled at 4M+4 phases and projected onto modes.
PhaseCurve phi_curve_first_order(const Transport& tr, const PeriodicField& beta0,
                                 const PeriodicField& v0, const PeriodicField& u_star);

// Roots of Phi = tau in [0,1) by sign changes on the sample grid and Newton polish.
std::vector<PhaseRoot> find_locked_phases(const PhaseCurve& curve, double tau);

// Phi([lo, hi]) for a range on which Phi is strictly monotone; hi may exceed 1.
std::pair<double, double> locking_interval(const PhaseCurve& curve, double lo, double hi);

// |int int (f(t - phi, x) + tau (2 d_t^2 u0 + b_3 d_t u0)) u* dt dx + boundary terms|,
// by direct quadrature in t; vanishes when Phi(phi) = tau.
double formal_phase_check(const SecondOrderProblem& p, const PeriodicField& u0,
                          const SecondOrderAdjoint& adj, double phi, double tau);

}  // namespace hyperlock
