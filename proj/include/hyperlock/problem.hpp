#pragma once

#include <array>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "hyperlock/field.hpp"

namespace hyperlock {

class ProblemError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A coefficient of x with its first two derivatives.
struct CoefficientFunction {
  std::function<double(double)> value;
  std::function<double(double)> derivative;
  std::function<double(double)> second;

  static CoefficientFunction constant(double c);
  double operator()(double x) const { return value(x); }
};

// b(x, u1, u2) for first-order systems.
struct SystemNonlinearity {
  std::function<void(double x, const double* u, double* b)> value;
  // jac[2*j + k] = d b_j / d u_k
  std::function<void(double x, const double* u, double* jac)> jacobian;
};

// d_t u_j / T + a_j d_x u_j + b_j(x, u) = eps f_j,
// u_1(t,0) = r_1 u_2(t,0) + eps g_1, u_2(t,1) = r_2 u_1(t,1) + eps g_2.
struct SystemProblem {
  std::string name;
  std::array<CoefficientFunction, 2> a;
  SystemNonlinearity b;
  std::array<double, 2> r{};
  std::function<void(double t, double x, double* f)> f;  // empty when unforced
  std::function<void(double t, double* g)> g;           // empty when unforced

  bool forced() const { return static_cast<bool>(f) || static_cast<bool>(g); }
  // a_j != 0 and a_1 != a_2 on a dense grid; derivatives against finite differences.
  void validate() const;
};

// d_t^2 u / T^2 - a^2 d_x^2 u + b(x, u, d_t u / T, d_x u) = eps f,
// u(t,0) = eps g_1, d_x u(t,1) + gamma u(t,1) = eps g_2.
struct SecondOrderProblem {
  struct Nonlinearity {
    std::function<double(double x, double u, double p, double q)> value;
    // d = (d_u b, d_p b, d_q b)
    std::function<void(double x, double u, double p, double q, double* d)> partials;
  };

  std::string name;
  CoefficientFunction a;
  Nonlinearity b;
  double gamma = 0;
  std::function<double(double t, double x)> f;  // empty when unforced
  std::function<double(double t)> g1;
  std::function<double(double t)> g2;

  bool forced() const { return f || g1 || g2; }
  void validate() const;
};

enum class Provenance { Manufactured, Supplied };

struct UnforcedSolution {
  PeriodicField u0;
  Provenance provenance = Provenance::Supplied;
  double residual = 0;
};

// b_jk(t,x) = d b_j / d u_k (x, u0(t,x)).
PeriodicField coeff_bjk(const SystemProblem& p, const PeriodicField& u0, int j, int k);
// (b_11, b_22)
PeriodicField beta0(const SystemProblem& p, const PeriodicField& u0);

// Autonomous system whose periodic solution is a first-harmonic ellipse
// u_j = rho_j(x) cos(2 pi t - theta_j(x)) with constant speeds. The speeds
// must satisfy 2 pi (1/a_1 - 1/a_2) = m pi for a positive integer m so that
// the ellipse closes into a segment at both ends.
struct EllipseSpec {
  std::array<double, 2> speeds{4.0, -4.0};
  std::array<double, 2> amplitude{1.0, 1.0};         // rho_j(0)
  std::array<double, 2> amplitude_growth{0.3, -0.2};  // rho_j = rho_j(0) exp(growth_j x)
  double phase = 0.0;
  double coupling_mean = 0.5;   // lambda(x) = mean + swing cos(delta(x))
  double coupling_swing = 0.8;
  double stiffness = 1.0;       // weight of the amplitude-selecting cubic term
  int order = 32;
  int nodes = 129;
};

// Closed forms of the manufactured ellipse, usable as independent oracles.
class EllipseFamily {
 public:
  explicit EllipseFamily(const EllipseSpec& spec);

  double delta(double x) const;  // phase lag theta_1 - theta_2, in radians
  double amplitude(int j, double x) const;
  double phase(int j, double x) const;  // theta_j in radians
  double coupling(double x) const;
  // Linear part M(x) of b, row-major.
  std::array<double, 4> linear_part(double x) const;
  double solution(int j, double t, double x) const;
  std::array<double, 2> reflections() const;

  SystemProblem problem() const;
  const EllipseSpec& spec() const { return spec_; }

 private:
  EllipseSpec spec_;
  double rate_;  // delta(x) = rate_ * x
  int turns_;
};

std::pair<SystemProblem, UnforcedSolution> manufacture_system(const EllipseSpec& spec);

// a = (1,-1), b = 0, r = (1,1), u0 = (Psi(t-x), Psi(t+x)).
// psi holds modes c_0..c_K of Psi.
std::pair<SystemProblem, UnforcedSolution> counterexample_sys(const std::vector<cplx>& psi,
                                                              int order, int nodes);

// Second-order standing wave u0 = A sin(kx) cos(2 pi t) with constant speed.
struct StandingWaveSpec {
  double speed = 4.0;
  double wavenumber = 2.0;
  double amplitude = 1.0;
  double drift = 0.5;      // coefficient of sin(kx) d_x u in b
  double stiffness = 1.0;  // weight of the amplitude-selecting term
  int order = 32;
  int nodes = 129;
};

struct SecondOrderInstance {
  SecondOrderProblem problem;
  UnforcedSolution solution;
  // exact d_t u0 and d_x u0 when known in closed form
  std::function<void(double t, double x, double* uderiv)> derivatives;
};

SecondOrderInstance manufacture_second_order(const StandingWaveSpec& spec);

// a = 4, b = 0, gamma = 0, u0 = 1/8 int_0^x Psi(4t+y) + Psi(4t-y) dy with
// Psi(s) = sum_n c_n sin((2n+1) pi s / 2), which satisfies Psi(s+2) = -Psi(s).
SecondOrderInstance counterexample_eq(const std::vector<double>& odd_sine_coeffs, int order,
                                      int nodes);

// Residual ||.||_inf of the unforced system at T = 1 (PDE and boundary rows).
double unforced_residual(const SystemProblem& p, const PeriodicField& u0);
double unforced_residual(const SecondOrderProblem& p, const PeriodicField& u0);

// ---------------------------------------------------------------------------
// First-order model shared by the operator layer. Systems map onto it
// directly; second-order problems through their first-order reformulation.

// Sampled coefficients of a linearized lower-order term on the
// pseudo-spectral grid, layout [node * samples + s].
struct LinearCoefficients {
  int samples = 0;
  int nodes = 0;
  // pointwise[j][k] = d b_j / d v_k
  std::array<std::array<std::vector<double>, 2>, 2> pointwise;
  // nonlocal[j]: coefficient of (J v)(x) = 1/2 int_0^x (v_1 - v_2)/a_2 dy in row j
  std::array<std::vector<double>, 2> nonlocal;

  bool has_nonlocal() const { return !nonlocal[0].empty(); }
};

class FirstOrderModel {
 public:
  virtual ~FirstOrderModel() = default;

  virtual double speed(int j, double x) const = 0;
  virtual double speed_derivative(int j, double x) const = 0;
  virtual std::array<double, 2> reflections() const = 0;
  // Gain of the nonlocal term added to v_2(t,1): gain * int_0^1 (v_1 - v_2)/a_2 dy.
  virtual double boundary_gain() const { return 0.0; }

  // Lower-order term b(eps, phi)[v] in the frame shifted by phi.
  virtual PeriodicField lower_order(const PeriodicField& v, double eps, double phi) const = 0;
  virtual LinearCoefficients lower_order_jacobian(const PeriodicField& v, double eps,
                                                  double phi) const = 0;
  // d/d eps of the lower-order term at eps = 0.
  virtual PeriodicField lower_order_eps_rate(const PeriodicField& v, double phi) const;
  // (1/eps) d/d phi of the lower-order term.
  virtual PeriodicField lower_order_phase_rate(const PeriodicField& v, double eps, double phi) const;

  // Unshifted forcing data at the given resolution.
  virtual PeriodicField forcing_field(int order, const GridPtr& grid) const = 0;
  virtual BoundarySignal boundary_forcing(double period, int order) const = 0;
  virtual bool forced() const = 0;
};

class SystemModel : public FirstOrderModel {
 public:
  explicit SystemModel(SystemProblem p) : p_(std::move(p)) {}
  const SystemProblem& problem() const { return p_; }

  double speed(int j, double x) const override { return p_.a[j].value(x); }
  double speed_derivative(int j, double x) const override { return p_.a[j].derivative(x); }
  std::array<double, 2> reflections() const override { return p_.r; }
  PeriodicField lower_order(const PeriodicField& v, double eps, double phi) const override;
  LinearCoefficients lower_order_jacobian(const PeriodicField& v, double eps,
                                          double phi) const override;
  PeriodicField forcing_field(int order, const GridPtr& grid) const override;
  BoundarySignal boundary_forcing(double period, int order) const override;
  bool forced() const override { return p_.forced(); }

 private:
  SystemProblem p_;
};

// Samples of u(., x_i) on the pseudo-spectral grid of `samples` points,
// layout [node * samples + s].
std::vector<double> nodal_samples(const PeriodicField& u, int comp, int samples);
// Inverse of nodal_samples.
PeriodicField from_nodal_samples(const std::vector<std::vector<double>>& comps, int samples,
                                 int order, const GridPtr& grid);

}  // namespace hyperlock
