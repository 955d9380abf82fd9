#include "hyperlock/locking.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "hyperlock/linsolve.hpp"

namespace hyperlock {

namespace {

using Operator = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

struct KrylovResult {
  Eigen::VectorXd x;
  int iterations = 0;
  double relative_residual = 0;
};

// Right-preconditioned GMRES with restarts. The preconditioner is the
// factored eps = 0 bordered matrix, so a handful of iterations suffice near it.
KrylovResult gmres(const Operator& op, const Eigen::VectorXd& b,
                   const Eigen::PartialPivLU<Eigen::MatrixXd>& pre, double tol, int restart = 40,
                   int cycles = 5) {
  KrylovResult out;
  const double bnorm = b.norm();
  out.x = Eigen::VectorXd::Zero(b.size());
  if (bnorm == 0) return out;
  out.x = pre.solve(b);
  for (int cycle = 0; cycle < cycles; ++cycle) {
    const Eigen::VectorXd r = b - op(out.x);
    const double beta = r.norm();
    out.relative_residual = beta / bnorm;
    if (out.relative_residual <= tol) return out;
    Eigen::MatrixXd v(b.size(), restart + 1), z(b.size(), restart);
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(restart + 1, restart);
    Eigen::VectorXd g = Eigen::VectorXd::Zero(restart + 1), cs(restart), sn(restart);
    v.col(0) = r / beta;
    g[0] = beta;
    int k = 0;
    for (; k < restart; ++k) {
      ++out.iterations;
      z.col(k) = pre.solve(v.col(k));
      Eigen::VectorXd w = op(z.col(k));
      for (int i = 0; i <= k; ++i) {
        h(i, k) = w.dot(v.col(i));
        w -= h(i, k) * v.col(i);
      }
      h(k + 1, k) = w.norm();
      if (h(k + 1, k) > 0) v.col(k + 1) = w / h(k + 1, k);
      for (int i = 0; i < k; ++i) {
        const double t = cs[i] * h(i, k) + sn[i] * h(i + 1, k);
        h(i + 1, k) = -sn[i] * h(i, k) + cs[i] * h(i + 1, k);
        h(i, k) = t;
      }
      const double d = std::hypot(h(k, k), h(k + 1, k));
      cs[k] = h(k, k) / d;
      sn[k] = h(k + 1, k) / d;
      h(k, k) = d;
      h(k + 1, k) = 0;
      g[k + 1] = -sn[k] * g[k];
      g[k] = cs[k] * g[k];
      if (std::abs(g[k + 1]) / bnorm <= tol) {
        ++k;
        break;
      }
    }
    const Eigen::VectorXd y =
        h.topLeftCorner(k, k).triangularView<Eigen::Upper>().solve(g.head(k));
    out.x += z.leftCols(k) * y;
  }
  out.relative_residual = (b - op(out.x)).norm() / bnorm;
  return out;
}

Eigen::VectorXd join(const PeriodicField& w, double s) {
  Eigen::VectorXd out(PeriodicField::packed_size(2, w.order(), w.nodes()) + 1);
  out.head(out.size() - 1) = w.pack();
  out[out.size() - 1] = s;
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// context

LockingContext LockingContext::system(const SystemProblem& p, const PeriodicField& u0) {
  LockingContext ctx;
  auto model = std::make_shared<SystemModel>(p);
  ctx.model_ = model;
  ctx.transport_ = std::make_shared<Transport>(*model, u0.order(), u0.grid_ptr());
  ctx.u0_ = u0;
  ctx.original_u0_ = u0;
  ctx.beta0_ = hyperlock::beta0(p, u0);
  const auto adj = solve_adjoint_sys(p, u0);
  ctx.u_star_ = adj.u_star;
  ctx.kernel_gap_ = adj.kernel_gap;
  ctx.curve_ = phi_curve_sys(p, adj);
  ctx.finish();
  return ctx;
}

LockingContext LockingContext::second_order(const SecondOrderProblem& p, const PeriodicField& u0) {
  LockingContext ctx;
  FosContext fos(p, u0);
  auto model = std::make_shared<FosModel>(fos.model);
  ctx.model_ = model;
  ctx.transport_ = std::make_shared<Transport>(*model, u0.order(), u0.grid_ptr());
  ctx.u0_ = fos.v0;
  ctx.original_u0_ = u0;
  ctx.beta0_ = fos.beta0;
  ctx.second_ = p;
  const auto adj = solve_adjoint_eq(p, u0);
  ctx.u_star_ = adj.first_order.u_star;
  ctx.kernel_gap_ = adj.first_order.kernel_gap;
  ctx.curve_ = phi_curve_eq(p, adj);
  ctx.finish();
  return ctx;
}

void LockingContext::finish() {
  base_residual_ = residual_abstract(*transport_, 0.0, 1.0, beta0_, u0_, 0.0);
  period_response_ = transport_->apply_D(1.0, beta0_, u0_.time_derivative());
}

PeriodicField LockingContext::scaled_residual(double eps, double tau, double phi,
                                              const PeriodicField& w) const {
  if (!(eps > 0)) throw LockingError("scaled residual needs eps > 0");
  auto r = residual_abstract(*transport_, eps, 1.0 + eps * tau, beta0_, u0_ + eps * w, phi);
  r -= base_residual_;
  r *= 1.0 / eps;
  return r;
}

PeriodicField LockingContext::phase_column(double eps, double period, double phi,
                                           const PeriodicField& state) const {
  const int order = u0_.order();
  const auto kt = transport_->kernels(period, beta0_);
  auto rate = model_->lower_order_phase_rate(state, eps, phi);
  if (model_->forced()) {
    rate += shift(model_->forcing_field(order, u0_.grid_ptr()).time_derivative(), -phi);
    return transport_->apply_C(kt, shift(model_->boundary_forcing(period, order).time_derivative(), -phi)) +
           transport_->apply_D(kt, rate);
  }
  return transport_->apply_D(kt, rate);
}

PeriodicField LockingContext::forcing_response(double phi) const {
  const int order = u0_.order();
  const auto kt = transport_->kernels(1.0, beta0_);
  auto h = model_->lower_order_eps_rate(u0_, phi);
  h *= -1.0;
  if (!model_->forced()) return transport_->apply_D(kt, h);
  h += shift(model_->forcing_field(order, u0_.grid_ptr()), -phi);
  return transport_->apply_C(kt, shift(model_->boundary_forcing(1.0, order), -phi)) +
         transport_->apply_D(kt, h);
}

Eigen::VectorXd LockingContext::pairing_row() const {
  return l2_weights(2, u0_.order(), u0_.grid()).cwiseProduct(u_star_.pack());
}

const Eigen::PartialPivLU<Eigen::MatrixXd>& LockingContext::preconditioner(double phi) const {
  if (precond_ && std::abs(phi - precond_phi_) < 0.05) return *precond_;
  const auto kt = transport_->kernels(1.0, beta0_);
  const auto db = model_->lower_order_jacobian(u0_, 0.0, phi);
  Eigen::MatrixXd a = assemble_linearized(*transport_, kt, beta0_, db);
  const int n = static_cast<int>(a.rows());
  a.conservativeResize(n + 1, n + 1);
  a.col(n).head(n) = phase_column(0.0, 1.0, phi, u0_).pack();
  a.row(n).head(n) = pairing_row().transpose();
  a(n, n) = 0.0;
  precond_ = std::make_shared<Eigen::PartialPivLU<Eigen::MatrixXd>>(a);
  precond_phi_ = phi;
  return *precond_;
}

// ---------------------------------------------------------------------------
// seed

SeedSolution seed_solution(const LockingContext& ctx, double tau0, double phi0) {
  const auto& tr = ctx.transport();
  const int order = ctx.u0().order();
  const auto grid = ctx.u0().grid_ptr();
  const int n = PeriodicField::packed_size(2, order, grid->size());
  const auto kt = tr.kernels(1.0, ctx.beta0());
  const auto db = ctx.model().lower_order_jacobian(ctx.u0(), 0.0, phi0);
  const Eigen::VectorXd row = ctx.pairing_row();
  const Eigen::VectorXd column = ctx.period_response().pack();

  const auto rhs = tau0 * ctx.period_response() + ctx.forcing_response(phi0);
  const Operator op = [&](const Eigen::VectorXd& x) {
    const auto w = PeriodicField::unpack(x.head(n), 2, order, grid);
    Eigen::VectorXd y(n + 1);
    y.head(n) = apply_linearized(tr, kt, ctx.beta0(), db, w).pack() + x[n] * column;
    y[n] = row.dot(x.head(n));
    return y;
  };
  const auto sol = gmres(op, join(rhs, 0.0), ctx.preconditioner(phi0), 1e-13);
  if (!sol.x.allFinite() || sol.relative_residual > 1e-9)
    throw LockingError("seed solve failed: bordered system is numerically singular");

  SeedSolution out;
  out.phi = phi0;
  out.tau = tau0;
  out.w = PeriodicField::unpack(sol.x.head(n), 2, order, grid);
  out.projection = sol.x[n];
  out.krylov_iterations = sol.iterations;
  const auto projected = rhs - out.projection * ctx.period_response();
  out.residual = sup_norm(apply_linearized(tr, kt, ctx.beta0(), db, out.w) - projected);
  return out;
}

// ---------------------------------------------------------------------------
// Newton

namespace {

struct NewtonState {
  double phi;
  PeriodicField w;
};

struct NewtonOutcome {
  NewtonState state;
  int iterations = 0;
  bool converged = false;
  std::string failure;
};

NewtonOutcome newton(const LockingContext& ctx, double eps, double tau, NewtonState x,
                     const LockingOptions& opts, bool damped) {
  const auto& tr = ctx.transport();
  const int order = ctx.u0().order();
  const auto grid = ctx.u0().grid_ptr();
  const int n = PeriodicField::packed_size(2, order, grid->size());
  const double period = 1.0 + eps * tau;
  const auto kt = tr.kernels(period, ctx.beta0());
  const Eigen::VectorXd row = ctx.pairing_row();
  const auto& pre = ctx.preconditioner(x.phi);

  auto residual = [&](const NewtonState& s) {
    return join(ctx.scaled_residual(eps, tau, s.phi, s.w), row.dot(s.w.pack()));
  };

  NewtonOutcome out;
  double last_step = std::numeric_limits<double>::infinity();
  int growth = 0;
  Eigen::VectorXd f = residual(x);
  for (int it = 1; it <= opts.max_newton; ++it) {
    out.iterations = it;
    const auto state = ctx.u0() + eps * x.w;
    const auto db = ctx.model().lower_order_jacobian(state, eps, x.phi);
    const Eigen::VectorXd column = ctx.phase_column(eps, period, x.phi, state).pack();
    const Operator op = [&](const Eigen::VectorXd& v) {
      const auto w = PeriodicField::unpack(v.head(n), 2, order, grid);
      Eigen::VectorXd y(n + 1);
      y.head(n) = apply_linearized(tr, kt, ctx.beta0(), db, w).pack() + v[n] * column;
      y[n] = row.dot(v.head(n));
      return y;
    };
    const auto sol = gmres(op, -f, pre, opts.krylov_tolerance);
    if (!sol.x.allFinite()) {
      out.failure = "non-finite Newton step";
      break;
    }
    const auto dw = PeriodicField::unpack(sol.x.head(n), 2, order, grid);
    const double step = std::max(sup_norm(dw), std::abs(sol.x[n]));

    double lambda = 1.0;
    NewtonState next{x.phi + sol.x[n], x.w + dw};
    Eigen::VectorXd fn = residual(next);
    if (damped) {
      const double f0 = f.lpNorm<Eigen::Infinity>();
      int halvings = 0;
      while (!(fn.lpNorm<Eigen::Infinity>() < f0) && halvings < opts.max_halvings) {
        lambda *= 0.5;
        ++halvings;
        next = {x.phi + lambda * sol.x[n], x.w + lambda * dw};
        fn = residual(next);
      }
    }
    x = std::move(next);
    f = std::move(fn);
    if (lambda * step < opts.step_tolerance) {
      out.converged = true;
      break;
    }
    growth = step > last_step ? growth + 1 : 0;
    last_step = step;
    if (growth >= 3) {
      out.failure = "Newton diverged: step grew over 3 consecutive iterations";
      break;
    }
  }
  if (!out.converged && out.failure.empty()) out.failure = "Newton iteration cap reached";
  out.state = std::move(x);
  return out;
}

}  // namespace

double original_residual(const LockingContext& ctx, double eps, double period, const PeriodicField& u) {
  if (const auto& p2 = ctx.second_order_problem()) return residual_second_order(*p2, eps, period, u);
  return residual_pde(ctx.transport(), eps, period, u).norm();
}

LockedSolution solve_locked(const LockingContext& ctx, double eps, double tau, double phi_start,
                            const PeriodicField& w_start, const LockingOptions& opts) {
  if (!(eps > 0)) throw LockingError("solve_locked: eps must be positive");
  const NewtonState start{phi_start, w_start};
  auto outcome = newton(ctx, eps, tau, start, opts, false);
  if (!outcome.converged) outcome = newton(ctx, eps, tau, start, opts, true);
  if (!outcome.converged)
    throw LockingError(outcome.failure + " (last phi " + std::to_string(outcome.state.phi) + ")");

  LockedSolution s;
  s.eps = eps;
  s.tau = tau;
  s.period = 1.0 + eps * tau;
  s.phi = outcome.state.phi;
  s.w = std::move(outcome.state.w);
  s.newton_iterations = outcome.iterations;
  const auto state = ctx.u0() + eps * s.w;
  s.residual_abstract = sup_norm(residual_abstract(ctx.transport(), eps, s.period, ctx.beta0(), state, s.phi));
  const auto physical = shift(state, s.phi);
  if (const auto& p2 = ctx.second_order_problem()) {
    BoundarySignal g1(1, physical.order());
    if (p2->g1) g1 = BoundarySignal::sample(1, physical.order(), [&](double t, double* o) { o[0] = p2->g1(t); });
    s.u = from_first_order(*p2, physical, eps, g1);
  } else {
    s.u = physical;
  }
  s.residual_pde = original_residual(ctx, eps, s.period, s.u);
  const auto od = orbit_distance(s.u, ctx.original_u0());
  s.orbit_phase = od.phi;
  s.orbit_distance = od.distance;
  return s;
}

// ---------------------------------------------------------------------------

OrbitDistance orbit_distance(const PeriodicField& u, const PeriodicField& u0) {
  auto dist = [&](double phi) { return sup_norm(u - shift(u0, phi)); };
  constexpr int kScan = 256;
  int best = 0;
  double best_v = dist(0.0);
  for (int i = 1; i < kScan; ++i) {
    const double v = dist(double(i) / kScan);
    // strict improvement beyond roundoff keeps the smallest phi among ties
    if (v < best_v - 1e-12 * std::max(1.0, best_v)) best_v = v, best = i;
  }
  double lo = double(best - 1) / kScan, hi = double(best + 1) / kScan;
  const double r = (std::sqrt(5.0) - 1) / 2;
  double c = hi - r * (hi - lo), d = lo + r * (hi - lo);
  double fc = dist(c), fd = dist(d);
  while (hi - lo > 1e-12) {
    if (fc <= fd) {
      hi = d, d = c, fd = fc;
      c = hi - r * (hi - lo), fc = dist(c);
    } else {
      lo = c, c = d, fc = fd;
      d = lo + r * (hi - lo), fd = dist(d);
    }
  }
  OrbitDistance out{double(best) / kScan, best_v};
  const double mid = 0.5 * (lo + hi), fm = dist(mid);
  if (fm < out.distance) out = {mid, fm};
  out.phi -= std::floor(out.phi);
  if (out.phi >= 1.0) out.phi = 0.0;
  return out;
}

SweepResult sweep(const LockingContext& ctx, double eps0, double tau0, double phi0, int eps_steps,
                  int tau_steps, const LockingOptions& opts) {
  SweepResult result;
  if (!(eps0 > 0) || eps_steps < 1 || tau_steps < 1) return result;
  const auto& curve = ctx.curve();
  for (int j = 0; j < tau_steps; ++j) {
    const double tau = tau0 + eps0 * (-1.0 + 2.0 * (j + 1) / (tau_steps + 1));
    // asymptotic phase for this tau, continued from phi0
    double phi = phi0;
    for (int it = 0; it < 50; ++it) {
      const double d = curve.slope(phi);
      if (d == 0) break;
      const double step = (curve.value(phi) - tau) / d;
      phi -= step;
      if (std::abs(step) < 1e-14) break;
    }
    std::optional<SeedSolution> seed;
    std::string seed_failure;
    try {
      seed = seed_solution(ctx, tau, phi);
    } catch (const std::exception& e) {
      seed_failure = e.what();
    }
    double phi_prev = phi;
    PeriodicField w_prev = seed ? seed->w : PeriodicField(2, ctx.u0().order(), ctx.u0().grid_ptr());
    for (int i = 1; i <= eps_steps; ++i) {
      SweepPoint pt;
      pt.eps = eps0 * i / (eps_steps + 1);
      pt.tau = tau;
      if (!seed) {
        pt.failure = seed_failure;
      } else {
        try {
          pt.solution = solve_locked(ctx, pt.eps, tau, phi_prev, w_prev, opts);
          phi_prev = pt.solution->phi;
          w_prev = pt.solution->w;
          result.ratio_bound = std::max(result.ratio_bound, pt.solution->orbit_distance / pt.eps);
        } catch (const std::exception& e) {
          pt.failure = e.what();
        }
      }
      result.points.push_back(std::move(pt));
    }
  }
  return result;
}

std::vector<DiagnosticEntry> sys2_diagnostic(const LockingContext& ctx,
                                             const std::vector<DiagnosticInput>& sequence,
                                             double residual_tolerance) {
  std::vector<DiagnosticEntry> out;
  for (const auto& in : sequence) {
    DiagnosticEntry e;
    e.eps = in.eps;
    e.period = in.period;
    e.residual = original_residual(ctx, in.eps, in.period, in.u);
    e.excluded = !(e.residual <= residual_tolerance);
    e.phi = orbit_distance(in.u, ctx.original_u0()).phi;
    e.value = ctx.curve().value(e.phi) - (in.period - 1.0) / in.eps;
    out.push_back(e);
  }
  return out;
}

}  // namespace hyperlock
