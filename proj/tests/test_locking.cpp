#include <gtest/gtest.h>

#include "hyperlock/locking.hpp"
#include "support.hpp"

using namespace hyperlock;

namespace {

struct Forced {
  SystemProblem problem;
  UnforcedSolution solution;
  std::unique_ptr<LockingContext> ctx;
  double tau = 0;
  PhaseRoot root;
};

const Forced& forced() {
  static const Forced f = [] {
    EllipseSpec spec;
    spec.order = 8;
    spec.nodes = 33;
    Forced out;
    std::tie(out.problem, out.solution) = manufacture_system(spec);
    test::add_ellipse_forcing(out.problem);
    out.ctx = std::make_unique<LockingContext>(LockingContext::system(out.problem, out.solution.u0));
    const auto& curve = out.ctx->curve();
    out.tau = curve.modes[0].real() + 0.25 * std::abs(curve.modes[1]);
    for (const auto& r : find_locked_phases(curve, out.tau))
      if (r.nondegenerate) {
        out.root = r;
        break;
      }
    return out;
  }();
  return f;
}

}  // namespace

TEST(Locking, ContextCarriesTheAdjointAndCurve) {
  const auto& f = forced();
  EXPECT_GT(f.ctx->kernel_gap(), 10.0);
  EXPECT_NEAR(l2_inner(f.solution.u0.time_derivative(), f.ctx->u_star()), 1.0, 1e-6);
  const auto direct = phi_curve_sys(f.problem, solve_adjoint_sys(f.problem, f.solution.u0));
  for (size_t k = 0; k < direct.modes.size(); ++k)
    EXPECT_LT(std::abs(direct.modes[k] - f.ctx->curve().modes[k]), 1e-12);
  ASSERT_TRUE(f.root.nondegenerate);
}

TEST(Locking, SeedIsOrthogonalToTheAdjoint) {
  const auto& f = forced();
  const auto seed = seed_solution(*f.ctx, f.tau, f.root.phi);
  EXPECT_LT(std::abs(l2_inner(seed.w, f.ctx->u_star())), 1e-9);
  EXPECT_LT(seed.residual, 1e-8);
  // at a root of Phi = tau the right-hand side is already in the range
  EXPECT_LT(std::abs(seed.projection), 1e-6);
  const auto off = seed_solution(*f.ctx, f.tau + 0.1, f.root.phi);
  EXPECT_NEAR(std::abs(off.projection), 0.1, 1e-6);
}

// At 8 modes the unforced solution itself leaves a residual of about 5e-6; the locked
// solutions must not add more than 1e-6 to it.
double residual_allowance() { return forced().solution.residual + 1e-6; }

TEST(Locking, SolvesOnTheRequestedPeriod) {
  const auto& f = forced();
  const auto seed = seed_solution(*f.ctx, f.tau, f.root.phi);
  for (double eps : {1e-2, 2e-3}) {
    const auto sol = solve_locked(*f.ctx, eps, f.tau, f.root.phi, seed.w);
    EXPECT_EQ(sol.period, 1.0 + eps * f.tau);
    EXPECT_LT(sol.residual_pde, residual_allowance());
    EXPECT_LT(std::abs(l2_inner(sol.w, f.ctx->u_star())), 1e-9);
    // phase stays near the asymptotic root
    double dphi = std::abs(sol.phi - f.root.phi);
    dphi = std::min(dphi, 1.0 - dphi);
    EXPECT_LT(dphi, 10 * eps);
    EXPECT_LT(sol.orbit_distance, 10 * eps);
    EXPECT_LT(original_residual(*f.ctx, eps, sol.period, sol.u), residual_allowance());
  }
}

TEST(Locking, NewtonReturnsToTheSameSolution) {
  const auto& f = forced();
  const double eps = 5e-3;
  const auto seed = seed_solution(*f.ctx, f.tau, f.root.phi);
  const auto sol = solve_locked(*f.ctx, eps, f.tau, f.root.phi, seed.w);
  std::mt19937_64 rng(71);
  for (int n = 0; n < 3; ++n) {
    auto kick = test::random_field(rng, 2, 8, sol.w.grid_ptr());
    kick *= 1e-3 / sup_norm(kick);
    const auto again = solve_locked(*f.ctx, eps, f.tau, sol.phi + 1e-3 * (n - 1), sol.w + kick);
    EXPECT_NEAR(again.phi, sol.phi, 1e-8);
    EXPECT_LT(sup_norm(again.w - sol.w), 1e-8);
  }
}

TEST(Locking, FailsCleanlyWithoutARoot) {
  const auto& f = forced();
  const double above = *std::max_element(f.ctx->curve().values.begin(), f.ctx->curve().values.end()) + 1.0;
  LockingOptions opts;
  opts.max_newton = 8;
  const auto w0 = PeriodicField(2, 8, f.solution.u0.grid_ptr());
  EXPECT_THROW(solve_locked(*f.ctx, 1e-2, above, f.root.phi, w0, opts), LockingError);
}

TEST(Locking, DiagnosticExcludesNonSolutions) {
  const auto& f = forced();
  const double eps = 5e-3, period = 1.0 + eps * f.tau;
  const auto seed = seed_solution(*f.ctx, f.tau, f.root.phi);
  const auto sol = solve_locked(*f.ctx, eps, f.tau, f.root.phi, seed.w);
  // a shifted unforced solution is not a solution of the forced problem
  const auto d = sys2_diagnostic(*f.ctx, {{eps, period, sol.u}, {eps, period, shift(f.solution.u0, 0.3)}},
                                 residual_allowance());
  ASSERT_EQ(d.size(), 2u);
  EXPECT_FALSE(d[0].excluded);
  EXPECT_LT(std::abs(d[0].value), 10 * eps);
  EXPECT_TRUE(d[1].excluded);
}

TEST(Locking, DiagnosticVanishesOnTheUnforcedFamily) {
  EllipseSpec spec;
  spec.order = 8;
  spec.nodes = 33;
  const auto [p, sol] = manufacture_system(spec);
  const auto ctx = LockingContext::system(p, sol.u0);
  std::vector<DiagnosticInput> family;
  for (double s : {0.0, 0.2, 0.7}) family.push_back({1e-2, 1.0, shift(sol.u0, s)});
  for (const auto& e : sys2_diagnostic(ctx, family, 1e-5)) {
    EXPECT_FALSE(e.excluded);
    EXPECT_EQ(e.value, 0.0);
  }
}

TEST(Locking, OrbitDistanceRecoversAShift) {
  const auto& u0 = forced().solution.u0;
  for (double s : {0.1, 0.45, 0.9}) {
    const auto d = orbit_distance(shift(u0, s), u0);
    EXPECT_LT(d.distance, 1e-10);
    EXPECT_NEAR(std::remainder(d.phi - s, 1.0), 0.0, 1e-8);
  }
}

TEST(Locking, SweepCoversTheWedge) {
  const auto& f = forced();
  const double eps0 = 1e-2;
  const auto result = sweep(*f.ctx, eps0, f.tau, f.root.phi, 3, 2);
  ASSERT_EQ(result.points.size(), 6u);
  for (const auto& pt : result.points) {
    ASSERT_TRUE(pt.solution) << pt.failure;
    EXPECT_LT(pt.eps, eps0);
    EXPECT_LT(std::abs(pt.tau - f.tau), eps0);
    EXPECT_EQ(pt.solution->period, 1.0 + pt.eps * pt.tau);
    EXPECT_LT(pt.solution->residual_pde, residual_allowance());
  }
  // a priori scaling: (|T - 1| + eps ||w||) / eps stays below one constant as eps shrinks;
  // the constant is taken from the largest eps with 2x headroom
  auto scaled = [](const LockedSolution& s) { return (std::abs(s.period - 1.0) + s.eps * sup_norm(s.w)) / s.eps; };
  double c = 0;
  for (int j = 0; j < 2; ++j) c = std::max(c, scaled(*result.points[3 * j + 2].solution));
  for (const auto& pt : result.points) EXPECT_LE(scaled(*pt.solution), 2 * c);
  EXPECT_LT(result.ratio_bound, 10.0);
  // neighbours on the grid differ by O(step) in phi and ||w||
  auto gap = [](const LockedSolution& a, const LockedSolution& b) {
    return std::abs(a.phi - b.phi) + std::abs(sup_norm(a.w) - sup_norm(b.w));
  };
  const double eps_step = eps0 / 4, tau_step = 2 * eps0 / 3;
  for (int j = 0; j < 2; ++j)
    for (int i = 1; i < 3; ++i)
      EXPECT_LT(gap(*result.points[3 * j + i - 1].solution, *result.points[3 * j + i].solution), 10 * eps_step);
  for (int i = 0; i < 3; ++i)
    EXPECT_LT(gap(*result.points[i].solution, *result.points[3 + i].solution), 10 * tau_step);
}
