// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <sstream>

#include "hyperlock/cli.hpp"
#include "hyperlock/locking.hpp"
#include "hyperlock/problem_io.hpp"
#include "support.hpp"

namespace fs = std::filesystem;
using namespace hyperlock;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string problem_path(const std::string& name) {
  return std::string(HYPERLOCK_PROBLEM_DIR) + "/" + name;
}

struct Verdict {
  bool pass = true;
  std::ostringstream detail;

  // records a measured value against its bound
  void check(bool ok, const std::string& what) {
    if (!ok) pass = false;
    if (detail.tellp() > 0) detail << "; ";
    detail << what << (ok ? "" : " [violated]");
  }
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

// forced ellipse from the shipped problem file, shared by the system criteria
struct EllipseRun {
  LoadedProblem problem;
  std::unique_ptr<LockingContext> ctx;
  double context_seconds = 0;
};

const EllipseRun& ellipse_run() {
  static const EllipseRun run = [] {
    EllipseRun r;
    const auto t0 = Clock::now();
    r.problem = load_problem(problem_path("ellipse_forced.json"));
    r.ctx = std::make_unique<LockingContext>(LockingContext::system(r.problem.system, r.problem.solution.u0));
    r.context_seconds = seconds_since(t0);
    return r;
  }();
  return run;
}

// forced standing wave from the shipped problem file
struct WaveRun {
  LoadedProblem problem;
  SecondOrderAdjoint adjoint;
};

const WaveRun& wave_run() {
  static const WaveRun run = [] {
    WaveRun r;
    r.problem = load_problem(problem_path("standing_wave_forced.json"));
    r.adjoint = solve_adjoint_eq(r.problem.second, r.problem.solution.u0);
    return r;
  }();
  return run;
}

Verdict equivalence() {
  Verdict v;
  const auto t0 = Clock::now();
  const auto [p, sol] = manufacture_system(EllipseSpec{});
  SystemModel model(p);
  Transport tr(model, sol.u0.order(), sol.u0.grid_ptr());
  const double abstract = sup_norm(residual_abstract(tr, 0.0, 1.0, beta0(p, sol.u0), sol.u0));
  const double pde = residual_pde(tr, 0.0, 1.0, sol.u0).norm();
  const double elapsed = seconds_since(t0);
  v.check(abstract < 1e-8, "residual_abstract " + fmt(abstract) + " < 1e-8");
  v.check(pde < 1e-8, "residual_pde " + fmt(pde) + " < 1e-8");
  v.check(elapsed < 5.0, "runtime " + fmt(elapsed) + " s < 5 s");
  return v;
}

Verdict inversion() {
  Verdict v;
  EllipseSpec spec;
  spec.order = 16;
  spec.nodes = 65;
  const auto [p, sol] = manufacture_system(spec);
  SystemModel model(p);
  Transport tr(model, 16, sol.u0.grid_ptr());
  const auto beta = beta0(p, sol.u0);
  const double tol = InversionOptions{}.tolerance;
  std::mt19937_64 rng(2024);
  double worst_residual = 0, worst_ratio = 0, best_ratio = 1e300;
  for (int n = 0; n < 20; ++n) {
    const auto f = test::random_field(rng, 2, 16, beta.grid_ptr());
    for (double T : {0.95, 1.0, 1.05}) {
      const auto s = solve_I_minus_CR(tr, T, beta, f);
      const double budget = std::log(tol) / std::log(s.contraction_factor);
      worst_residual = std::max(worst_residual, s.residual);
      worst_ratio = std::max(worst_ratio, s.iterations / budget);
      best_ratio = std::min(best_ratio, s.iterations / budget);
    }
  }
  v.check(worst_residual < 1e-8, "max residual " + fmt(worst_residual) + " < 1e-8");
  v.check(worst_ratio <= 2.0 && best_ratio >= 0.5,
          "iterations/budget in [" + fmt(best_ratio) + ", " + fmt(worst_ratio) + "] within 2x");

  auto [cp, csol] = counterexample_sys({0.0}, 4, 17);
  cp.r = {0.5, 0.5};
  SystemModel cmodel(cp);
  Transport ctr(cmodel, 4, csol.u0.grid_ptr());
  const PeriodicField zero(2, 4, csol.u0.grid_ptr());
  const auto ones = PeriodicField::sample(2, 4, csol.u0.grid_ptr(), [](double, double, double* o) {
    o[0] = o[1] = 1.0;
  });
  const auto c = solve_I_minus_CR(ctr, 1.0, zero, ones);
  const auto two = PeriodicField::sample(2, 4, csol.u0.grid_ptr(), [](double, double, double* o) {
    o[0] = o[1] = 2.0;
  });
  const double err = sup_norm(c.solution - two);
  v.check(err < 1e-12, "constant ansatz error " + fmt(err) + " < 1e-12");
  return v;
}

Verdict negative() {
  Verdict v;
  const auto dir = fs::temp_directory_path() / "hyperlock_acceptance";
  for (const auto& [file, second] : {std::pair{"counterexample.json", false}, {"wave_counterexample.json", true}}) {
    const auto lp = load_problem(problem_path(file));
    const auto r = second ? check_nonres_eq(lp.second, lp.solution.u0) : check_nonres_sys(lp.system, lp.solution.u0);
    const double m = std::max(r.margin[0], r.margin[1]);
    v.check(m < 1e-10, std::string(file) + " margin " + fmt(m) + " < 1e-10");
    cli::RunConfig config;
    config.command = "check-nonres";
    config.problem_path = problem_path(file);
    config.second_order = second;
    config.out_dir = dir.string();
    std::ostringstream out, err;
    const int code = cli::run(config, out, err);
    v.check(code == cli::kAssumption, "exit code " + std::to_string(code) + " == 2");
  }
  return v;
}

Verdict adjoint() {
  Verdict v;
  const auto& run = ellipse_run();
  const auto& ctx = *run.ctx;
  const auto& u0 = run.problem.solution.u0;
  const AdjointOperator op(ctx.transport(), ctx.model().lower_order_jacobian(u0, 0.0, 0.0));
  const double res = op.residual(ctx.u_star()).norm();
  const double pairing = l2_inner(u0.time_derivative(), ctx.u_star());
  v.check(res < 1e-6, "u* PDE residual " + fmt(res) + " < 1e-6");
  v.check(std::abs(pairing - 1.0) < 1e-6, "pairing - 1 = " + fmt(pairing - 1.0));
  v.check(ctx.kernel_gap() > 10, "kernel gap " + fmt(ctx.kernel_gap()) + " > 10");

  const auto& wave = wave_run().adjoint;
  v.check(wave.identity_error < 1e-6, "second-order identity error " + fmt(wave.identity_error) + " < 1e-6");
  v.check(std::abs(wave.pairing - 1.0) < 1e-5, "second-order pairing - 1 = " + fmt(wave.pairing - 1.0));
  return v;
}

Verdict fredholm() {
  Verdict v;
  // singular values at 8 modes, where the dense operator is small enough for a full solve
  EllipseSpec spec;
  spec.order = 8;
  spec.nodes = 33;
  const auto [p, sol] = manufacture_system(spec);
  SystemModel model(p);
  Transport tr(model, 8, sol.u0.grid_ptr());
  const auto beta = beta0(p, sol.u0);
  const auto l = assemble_linearized(tr, tr.kernels(1.0, beta), beta, model.lower_order_jacobian(sol.u0, 0.0, 0.0));
  const auto s = smallest_singular(l, 2);
  v.check(s.values[0] < 1e-6 * s.values[1],
          "sigma_1/sigma_2 = " + fmt(s.values[0] / s.values[1]) + " < 1e-6");

  const auto& run = ellipse_run();
  const auto& ctx = *run.ctx;
  const auto& u0 = run.problem.solution.u0;
  const auto& ttr = ctx.transport();
  const auto db = ctx.model().lower_order_jacobian(u0, 0.0, 0.0);
  const auto kt = ttr.kernels(1.0, ctx.beta0());
  std::mt19937_64 rng(77);
  double worst = 0;
  for (int n = 0; n < 50; ++n) {
    auto w = test::random_field(rng, 2, u0.order(), u0.grid_ptr());
    w *= 1.0 / sup_norm(w);
    const auto lw = apply_linearized(ttr, kt, ctx.beta0(), db, w);
    worst = std::max(worst, std::abs(functional_phi(ttr, ctx.beta0(), ctx.u_star(), lw)));
  }
  v.check(worst < 1e-6, "max |phi(Lw)| over 50 w " + fmt(worst) + " < 1e-6");
  const double one = functional_phi(ttr, ctx.beta0(), ctx.u_star(), ttr.apply_D(kt, u0.time_derivative()));
  v.check(std::abs(one - 1.0) < 1e-6, "phi(D d_t u0) - 1 = " + fmt(one - 1.0));
  return v;
}

struct Ladder {
  double tau = 0, phi0 = 0, seconds = 0;
  std::vector<double> eps;
  std::vector<LockedSolution> solutions;
  std::vector<DiagnosticEntry> diagnostic;
};

const Ladder& ladder() {
  static const Ladder lad = [] {
    Ladder l;
    const auto t0 = Clock::now();
    const auto& ctx = *ellipse_run().ctx;
    const auto& curve = ctx.curve();
    l.tau = curve.modes[0].real();
    for (const auto& r : find_locked_phases(curve, l.tau))
      if (r.nondegenerate) {
        l.phi0 = r.phi;
        break;
      }
    const auto seed = seed_solution(ctx, l.tau, l.phi0);
    std::vector<DiagnosticInput> seq;
    for (double eps : {1e-2, 5e-3, 2.5e-3, 1.25e-3}) {
      l.eps.push_back(eps);
      l.solutions.push_back(solve_locked(ctx, eps, l.tau, l.phi0, seed.w));
      seq.push_back({eps, l.solutions.back().period, l.solutions.back().u});
    }
    l.diagnostic = sys2_diagnostic(ctx, seq);
    l.seconds = seconds_since(t0) + ellipse_run().context_seconds;
    return l;
  }();
  return lad;
}

double phase_gap(double a, double b) {
  const double d = std::abs(a - b);
  return std::min(d, 1.0 - d);
}

Verdict asymptotics() {
  Verdict v;
  const auto& l = ladder();
  std::vector<double> gap, ratio;
  for (const auto& s : l.solutions) {
    gap.push_back(phase_gap(s.phi, l.phi0));
    ratio.push_back(orbit_distance(s.u, ellipse_run().problem.solution.u0).distance / s.eps);
  }
  double min_order = 1e300;
  for (size_t k = 1; k < gap.size(); ++k)
    min_order = std::min(min_order, std::log(gap[k - 1] / gap[k]) / std::log(l.eps[k - 1] / l.eps[k]));
  v.check(min_order >= 0.9, "min empirical order of |phi - phi0| " + fmt(min_order) + " >= 0.9");
  double mean = 0;
  for (double r : ratio) mean += r / ratio.size();
  double spread = 0;
  for (double r : ratio) spread = std::max(spread, std::abs(r / mean - 1.0));
  v.check(spread <= 0.2, "orbit distance / eps within " + fmt(100 * spread) + "% of its mean " + fmt(mean));
  v.check(l.seconds < 120, "runtime " + fmt(l.seconds) + " s < 120 s");
  return v;
}

Verdict diagnostic() {
  Verdict v;
  const auto& d = ladder().diagnostic;
  std::ostringstream values;
  for (const auto& e : d) values << (values.tellp() > 0 ? " " : "") << fmt(std::abs(e.value));
  bool usable = true;
  for (const auto& e : d) usable = usable && !e.excluded;
  v.check(usable, "all rungs solve the forced problem");
  v.check(std::abs(d.back().value) < 1e-3, "finest |Phi(phi) - (T-1)/eps| " + fmt(std::abs(d.back().value)) + " < 1e-3");
  const size_t n = d.size();
  const bool decreasing = std::abs(d[n - 1].value) < std::abs(d[n - 2].value) &&
                          std::abs(d[n - 2].value) < std::abs(d[n - 3].value);
  v.check(decreasing, "decreasing over the last three rungs (" + values.str() + ")");
  return v;
}

Verdict second_order_cross_check() {
  Verdict v;
  const auto& run = wave_run();
  const auto& p = run.problem.second;
  const auto& u0 = run.problem.solution.u0;
  const auto direct = phi_curve_eq(p, run.adjoint);
  const FosContext fos(p, u0);
  Transport tr(fos.model, u0.order(), u0.grid_ptr());
  const auto route = phi_curve_first_order(tr, fos.beta0, fos.v0, run.adjoint.first_order.u_star);
  double route_gap = 0, defect = 0;
  for (size_t i = 0; i < direct.phi.size(); ++i) {
    const double phi = direct.phi[i];
    route_gap = std::max(route_gap, std::abs(direct.values[i] - route.value(phi)));
    defect = std::max(defect, formal_phase_check(p, u0, run.adjoint, phi, direct.values[i]));
  }
  v.check(direct.phi.size() == 512, std::to_string(direct.phi.size()) + " phase samples");
  v.check(route_gap < 1e-6, "max |Phi_direct - Phi_first_order| " + fmt(route_gap) + " < 1e-6");
  v.check(defect < 1e-6, "max formal defect " + fmt(defect) + " < 1e-6");
  return v;
}

Verdict equivariance() {
  Verdict v;
  EllipseSpec spec;
  spec.order = 8;
  spec.nodes = 33;
  const auto [p, sol] = manufacture_system(spec);
  SystemModel model(p);
  Transport tr(model, 8, sol.u0.grid_ptr());
  const auto grid = sol.u0.grid_ptr();
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> unit(0.0, 1.0), period(0.9, 1.1);
  std::array<double, 6> worst{};  // C, D, B, R, group law, identity shift
  const int cases = 100;
  for (int n = 0; n < cases; ++n) {
    const auto beta = 0.5 * test::random_field(rng, 2, 8, grid);
    const auto u = test::random_field(rng, 2, 8, grid);
    const auto g = test::random_signal(rng, 2, 8);
    const double a = unit(rng), b = unit(rng), T = period(rng);
    worst[0] = std::max(worst[0], sup_norm(shift(tr.apply_C(T, beta, g), a) - tr.apply_C(T, shift(beta, a), shift(g, a))));
    worst[1] = std::max(worst[1], sup_norm(shift(tr.apply_D(T, beta, u), a) - tr.apply_D(T, shift(beta, a), shift(u, a))));
    worst[2] = std::max(worst[2], sup_norm(shift(tr.apply_B(beta, u), a) - tr.apply_B(shift(beta, a), shift(u, a))));
    worst[3] = std::max(worst[3], sup_norm(shift(tr.apply_R(u), a) - tr.apply_R(shift(u, a))));
    worst[4] = std::max(worst[4], sup_norm(shift(shift(u, a), b) - shift(u, a + b)));
    worst[5] = std::max(worst[5], std::max(sup_norm(shift(u, 1.0) - u), sup_norm(shift(shift(u, a), -a) - u)));
  }
  const char* names[] = {"C", "D", "B", "R", "S_a S_b = S_(a+b)", "S_1 = S_a S_-a = I"};
  for (int k = 0; k < 6; ++k) v.check(worst[k] < 1e-9, std::string(names[k]) + " " + fmt(worst[k]));
  v.detail << "; " << cases << " cases each";
  return v;
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria = {
      {"equivalence of the unforced solution", equivalence},
      {"constructive inversion of I - CR", inversion},
      {"negative tests on resonant instances", negative},
      {"adjoint correctness", adjoint},
      {"Fredholm structure", fredholm},
      {"phase-equation asymptotics", asymptotics},
      {"period-phase diagnostic", diagnostic},
      {"second-order cross-check", second_order_cross_check},
      {"equivariance", equivariance},
  };
  int failures = 0;
  for (size_t k = 0; k < criteria.size(); ++k) {
    Verdict v;
    try {
      v = criteria[k].second();
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail << "exception: " << e.what();
    }
    failures += !v.pass;
    std::cout << (v.pass ? "PASS" : "FAIL") << " " << k + 1 << " " << criteria[k].first << ": " << v.detail.str()
              << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
