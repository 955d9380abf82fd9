#include <gtest/gtest.h>

#include "hyperlock/charops.hpp"
#include "hyperlock/expr.hpp"
#include "hyperlock/linsolve.hpp"
#include "hyperlock/secondorder.hpp"
#include "support.hpp"

using namespace hyperlock;

TEST(Expr, EvaluatesAndDifferentiates) {
  const auto e = Expr::parse("0.5*cos(2*pi*t)*(1+x) + x^3", {"t", "x"});
  const double at[2] = {0.1, 0.4};
  EXPECT_NEAR(e(at), 0.5 * std::cos(kTwoPi * 0.1) * 1.4 + 0.064, 1e-14);
  const auto dx = e.derivative(1);
  EXPECT_NEAR(dx(at), 0.5 * std::cos(kTwoPi * 0.1) + 3 * 0.16, 1e-14);
  const auto dt = e.derivative(0);
  EXPECT_NEAR(dt(at), -0.5 * kTwoPi * std::sin(kTwoPi * 0.1) * 1.4, 1e-13);
}

TEST(Expr, DerivativesMatchFiniteDifferences) {
  const auto e = Expr::parse("exp(-x)*sin(3*u) + tanh(u*x) - sqrt(1 + x^2)/u", {"x", "u"});
  for (double x : {0.1, 0.5, 0.9})
    for (double u : {0.7, 1.3}) {
      const double h = 1e-6;
      const double p[2] = {x, u}, a[2] = {x, u + h}, b[2] = {x, u - h};
      EXPECT_NEAR(e.derivative(1)(p), (e(a) - e(b)) / (2 * h), 1e-7);
    }
}

TEST(Expr, RejectsMalformedInput) {
  EXPECT_THROW(Expr::parse("x +", {"x"}), ExprError);
  EXPECT_THROW(Expr::parse("y", {"x"}), ExprError);
  EXPECT_THROW(Expr::parse("foo(x)", {"x"}), ExprError);
  EXPECT_TRUE(Expr::parse("0*x", {"x"}).is_zero());
  EXPECT_TRUE(Expr::parse("2*pi", {"x"}).is_constant());
}

class EllipseInstance : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    EllipseSpec spec;
    spec.order = 16;
    spec.nodes = 65;
    family_ = new EllipseFamily(spec);
    auto [p, sol] = manufacture_system(spec);
    problem_ = new SystemProblem(p);
    solution_ = new UnforcedSolution(sol);
  }
  static void TearDownTestSuite() {
    delete family_;
    delete problem_;
    delete solution_;
  }
  static EllipseFamily* family_;
  static SystemProblem* problem_;
  static UnforcedSolution* solution_;
};
EllipseFamily* EllipseInstance::family_ = nullptr;
SystemProblem* EllipseInstance::problem_ = nullptr;
UnforcedSolution* EllipseInstance::solution_ = nullptr;

TEST(Ellipse, SolvesTheUnforcedSystemAtDefaultResolution) {
  const auto [p, sol] = manufacture_system(EllipseSpec{});
  EXPECT_EQ(sol.provenance, Provenance::Manufactured);
  EXPECT_LT(sol.residual, 1e-9);
  SystemModel model(p);
  Transport tr(model, sol.u0.order(), sol.u0.grid_ptr());
  const auto res = residual_pde(tr, 0.0, 1.0, sol.u0);
  EXPECT_LT(sup_norm(res.interior), 1e-9);
  EXPECT_LT(sup_norm(res.boundary), 1e-9);
}

TEST_F(EllipseInstance, MatchesClosedForm) {
  for (double t : {0.0, 0.3, 0.77})
    for (double x : {0.0, 0.25, 0.6, 1.0}) {
      const auto v = eval(solution_->u0, t, x);
      EXPECT_NEAR(v[0], family_->solution(0, t, x), 1e-9);
      EXPECT_NEAR(v[1], family_->solution(1, t, x), 1e-9);
    }
}

TEST_F(EllipseInstance, JacobianAtOriginIsShiftedLinearPart) {
  // b = M(x) u + stiffness (q(u) - sin^2 delta) u, so d b/d u (x, 0) = M(x) - stiffness sin^2 delta I.
  for (double x : {0.0, 0.3, 0.8}) {
    const double zero[2] = {0, 0};
    double jac[4];
    problem_->b.jacobian(x, zero, jac);
    const auto m = family_->linear_part(x);
    const double s = std::sin(family_->delta(x));
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k)
        EXPECT_NEAR(jac[2 * j + k], m[2 * j + k] - (j == k ? s * s : 0.0), 1e-12);
  }
}

TEST(Ellipse, ZeroStiffnessGivesLinearNonlinearity) {
  EllipseSpec spec;
  spec.stiffness = 0;
  spec.order = 4;
  spec.nodes = 17;
  const auto p = EllipseFamily(spec).problem();
  const double u[2] = {0.4, -1.1}, v[2] = {-2.0, 0.7};
  double ju[4], jv[4];
  for (double x : {0.0, 0.5, 1.0}) {
    p.b.jacobian(x, u, ju);
    p.b.jacobian(x, v, jv);
    for (int k = 0; k < 4; ++k) EXPECT_EQ(ju[k], jv[k]);
  }
}

TEST_F(EllipseInstance, DerivativeOfSolutionSatisfiesLinearRelation) {
  // A(1) d_t u0 = -(b_12 d_t u0_2, b_21 d_t u0_1)
  SystemModel model(*problem_);
  Transport tr(model, 16, solution_->u0.grid_ptr());
  const auto& u0 = solution_->u0;
  const auto beta = beta0(*problem_, u0);
  const auto ut = u0.time_derivative();
  const auto lhs = apply_A(tr, 1.0, beta, ut);
  const auto b12 = coeff_bjk(*problem_, u0, 0, 1), b21 = coeff_bjk(*problem_, u0, 1, 0);
  const auto c1 = multiply(b12, ut.component(1)), c2 = multiply(b21, ut.component(0));
  PeriodicField rhs(2, 16, u0.grid_ptr());
  for (int i = 0; i < u0.nodes(); ++i)
    for (int k = 0; k <= 16; ++k) {
      rhs.at(0, i)[k] = -c1.at(0, i)[k];
      rhs.at(1, i)[k] = -c2.at(0, i)[k];
    }
  EXPECT_LT(sup_norm(lhs - rhs), 1e-7);
}

TEST(Counterexample, PureTransportIsAnExactSolution) {
  for (const auto& psi : {std::vector<cplx>{0.0, cplx(0, -0.5)},
                          std::vector<cplx>{0.0, cplx(0, -0.5), cplx(0.15, 0)}}) {
    auto [p, sol] = counterexample_sys(psi, 8, 33);
    SystemModel model(p);
    Transport tr(model, 8, sol.u0.grid_ptr());
    EXPECT_LT(residual_pde(tr, 0.0, 1.0, sol.u0).norm(), 1e-12);
    const auto report = check_nonres_sys(p, sol.u0);
    EXPECT_LT(report.margin[0], 1e-10);
    EXPECT_LT(report.margin[1], 1e-10);
    EXPECT_FALSE(report.any());
  }
}

TEST(Counterexample, SecondOrderInstanceViolatesBothConditions) {
  const auto inst = counterexample_eq({1.0, 0.3}, 16, 129);
  EXPECT_LT(inst.solution.residual, 1e-8);
  const auto report = check_nonres_eq(inst.problem, inst.solution.u0);
  EXPECT_LT(report.margin[0], 1e-10);
  EXPECT_LT(report.margin[1], 1e-10);
}

TEST(StandingWave, SolvesTheUnforcedEquation) {
  StandingWaveSpec spec;
  spec.order = 16;
  spec.nodes = 65;
  const auto inst = manufacture_second_order(spec);
  EXPECT_LT(inst.solution.residual, 1e-8);
  EXPECT_LT(residual_second_order(inst.problem, 0.0, 1.0, inst.solution.u0), 1e-8);
}

TEST(Validation, RejectsBadSpeeds) {
  auto [p, sol] = counterexample_sys({0.0, cplx(0, -0.5)}, 4, 9);
  p.a[1] = p.a[0];
  EXPECT_THROW(p.validate(), ProblemError);
  p.a[1] = CoefficientFunction::constant(0.0);
  EXPECT_THROW(p.validate(), ProblemError);
}

TEST(Validation, RejectsInconsistentDerivatives) {
  auto [p, sol] = counterexample_sys({0.0, cplx(0, -0.5)}, 4, 9);
  p.a[0].value = [](double x) { return 1 + x * x; };
  p.a[0].derivative = [](double x) { return x; };  // should be 2x
  EXPECT_THROW(p.validate(), ProblemError);
}

TEST(Validation, RejectsInconsistentJacobian) {
  auto [p, sol] = counterexample_sys({0.0, cplx(0, -0.5)}, 4, 9);
  p.b.value = [](double, const double* u, double* b) { b[0] = u[0] * u[1], b[1] = 0; };
  p.b.jacobian = [](double, const double* u, double* j) { j[0] = u[1], j[1] = 0, j[2] = 0, j[3] = 0; };
  EXPECT_THROW(p.validate(), ProblemError);
}
