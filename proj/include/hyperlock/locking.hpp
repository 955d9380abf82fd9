#pragma once

#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hyperlock/phase.hpp"

namespace hyperlock {

class LockingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct LockingOptions {
  double step_tolerance = 1e-10;  // Newton stops when the sup norm of the step is below this
  int max_newton = 30;
  double krylov_tolerance = 1e-13;
  int max_halvings = 20;
};

// Everything the locking solver needs about one unforced solution, in its
// first-order representation.
class LockingContext {
 public:
  static LockingContext system(const SystemProblem& p, const PeriodicField& u0);
  static LockingContext second_order(const SecondOrderProblem& p, const PeriodicField& u0);

  const FirstOrderModel& model() const { return *model_; }
  const Transport& transport() const { return *transport_; }
  const PeriodicField& u0() const { return u0_; }        // first-order state at T = 1
  const PeriodicField& beta0() const { return beta0_; }
  const PeriodicField& u_star() const { return u_star_; }
  const PhaseCurve& curve() const { return curve_; }
  double kernel_gap() const { return kernel_gap_; }
  const std::optional<SecondOrderProblem>& second_order_problem() const { return second_; }
  // u0 of the original problem (one component for second-order problems)
  const PeriodicField& original_u0() const { return original_u0_; }

  // Scaled equation F(eps, tau, phi, w) = (1/eps) [Res(eps, 1 + eps tau, u0 + eps w, phi) - Res(0, 1, u0, 0)]
  // with Res the characteristic residual.
  PeriodicField scaled_residual(double eps, double tau, double phi, const PeriodicField& w) const;
  // d F / d phi
  PeriodicField phase_column(double eps, double period, double phi, const PeriodicField& state) const;
  // C S_phi^{-1} g + D (S_phi^{-1} f - d_eps b(phi)) at eps = 0, T = 1
  PeriodicField forcing_response(double phi) const;
  // D(1, beta0) d_t u0
  const PeriodicField& period_response() const { return period_response_; }

  // Bordered matrix [L, dF/dphi(phi); <., u*>, 0] at eps = 0 for a given phi, factored.
  const Eigen::PartialPivLU<Eigen::MatrixXd>& preconditioner(double phi) const;
  Eigen::VectorXd pairing_row() const;

 private:
  LockingContext() = default;
  void finish();

  std::shared_ptr<const FirstOrderModel> model_;
  std::shared_ptr<const Transport> transport_;
  PeriodicField u0_, beta0_, u_star_, original_u0_, base_residual_, period_response_;
  PhaseCurve curve_;
  double kernel_gap_ = 0;
  std::optional<SecondOrderProblem> second_;
  mutable std::shared_ptr<Eigen::PartialPivLU<Eigen::MatrixXd>> precond_;
  mutable double precond_phi_ = 0;
  mutable std::shared_ptr<Eigen::MatrixXd> linear0_;
};

struct SeedSolution {
  double phi = 0;
  double tau = 0;
  PeriodicField w;
  double projection = 0;  // coefficient of D d_t u0 removed by the border, ~ Phi(phi) - tau
  double residual = 0;    // ||L w - (I - P) rhs||_inf
  int krylov_iterations = 0;
};

// Solves L w = (I - P)(tau D d_t u0 + C S^{-1} g + D (S^{-1} f - d_eps b)) with <w, u*> = 0.
SeedSolution seed_solution(const LockingContext& ctx, double tau0, double phi0);

struct LockedSolution {
  double eps = 0;
  double period = 1;
  double tau = 0;
  double phi = 0;
  PeriodicField w;  // first-order correction in the shifted frame, <w, u*> = 0
  PeriodicField u;  // solution of the original problem: S_phi(u0 + eps w), reconstructed for second order
  double residual_abstract = 0;
  double residual_pde = 0;
  double orbit_phase = 0;
  double orbit_distance = 0;
  int newton_iterations = 0;
};

LockedSolution solve_locked(const LockingContext& ctx, double eps, double tau, double phi_start,
                            const PeriodicField& w_start, const LockingOptions& opts = {});

struct OrbitDistance {
  double phi = 0;
  double distance = 0;
};
// min over phi of ||u - S_phi u0||_inf
OrbitDistance orbit_distance(const PeriodicField& u, const PeriodicField& u0);

struct SweepPoint {
  double eps = 0;
  double tau = 0;
  std::optional<LockedSolution> solution;
  std::string failure;
};

struct SweepResult {
  std::vector<SweepPoint> points;
  double ratio_bound = 0;  // sup over successes of orbit_distance / eps
};

// Wedge {(eps, 1 + eps tau): 0 < eps < eps0, |tau - tau0| < eps0} on an
// eps_steps x tau_steps interior grid, warm-started along increasing eps.
SweepResult sweep(const LockingContext& ctx, double eps0, double tau0, double phi0, int eps_steps,
                  int tau_steps, const LockingOptions& opts = {});

struct DiagnosticEntry {
  double eps = 0;
  double period = 1;
  double phi = 0;
  double value = 0;  // Phi(phi_k) - (T_k - 1)/eps_k
  double residual = 0;
  bool excluded = false;
};

struct DiagnosticInput {
  double eps;
  double period;
  PeriodicField u;  // solution of the original problem
};

std::vector<DiagnosticEntry> sys2_diagnostic(const LockingContext& ctx,
                                             const std::vector<DiagnosticInput>& sequence,
                                             double residual_tolerance = 1e-6);

// PDE residual of a solution of the original problem at (eps, T).
double original_residual(const LockingContext& ctx, double eps, double period, const PeriodicField& u);

}  // namespace hyperlock
