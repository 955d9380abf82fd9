#include "hyperlock/adjoint.hpp"

#include <cmath>

#include "hyperlock/linsolve.hpp"

namespace hyperlock {

AdjointOperator::AdjointOperator(const Transport& tr, const LinearCoefficients& lin) : tr_(&tr) {
  transposed_.samples = lin.samples;
  transposed_.nodes = lin.nodes;
  for (int j = 0; j < 2; ++j)
    for (int k = 0; k < 2; ++k) transposed_.pointwise[j][k] = lin.pointwise[k][j];
  nonlocal_ = lin.nonlocal;
  const auto& m = tr.model();
  const bool up0 = m.speed(0, 0.5) > 0, up1 = m.speed(1, 0.5) > 0;
  if (up0 != up1) {
    // backwards in time a component with positive speed enters at x = 1
    right_row_ = up0 ? 0 : 1;
    left_row_ = 1 - right_row_;
  }
}

PeriodicField AdjointOperator::interior(const PeriodicField& w) const {
  const auto& m = tr_->model();
  const XGrid& g = *tr_->grid();
  auto out = tr_->transport_derivative(1.0, w);
  out *= -1.0;
  out += apply_coefficients(transposed_, w, nullptr);
  for (int k = 0; k < 2; ++k)
    for (int i = 0; i < g.size(); ++i) {
      const double da = m.speed_derivative(k, g.node(i));
      auto dst = out.at(k, i);
      auto src = w.at(k, i);
      for (int r = 0; r < w.modes(); ++r) dst[r] -= da * src[r];
    }

  const bool nonlocal = !nonlocal_[0].empty();
  const double gain = m.boundary_gain();
  if (!nonlocal && gain == 0.0) return out;

  PeriodicField tail(1, w.order(), w.grid_ptr());
  if (nonlocal) {
    const int ns = transposed_.samples;
    const auto s1 = nodal_samples(w, 0, ns), s2 = nodal_samples(w, 1, ns);
    std::vector<double> prod(s1.size());
    for (size_t n = 0; n < prod.size(); ++n) prod[n] = nonlocal_[0][n] * s1[n] + nonlocal_[1][n] * s2[n];
    tail = cumulative_integral(from_nodal_samples({prod}, ns, w.order(), w.grid_ptr()), true);
  }
  const int last = g.size() - 1;
  const double a21 = m.speed(1, 1.0);
  auto w21 = w.at(1, last);
  for (int i = 0; i < g.size(); ++i) {
    const double scale = 0.5 / m.speed(1, g.node(i));
    auto q = tail.at(0, i);
    for (int r = 0; r < w.modes(); ++r) {
      const cplx c = scale * (q[r] + 2.0 * gain * a21 * w21[r]);
      out.at(0, i)[r] += c;
      out.at(1, i)[r] -= c;
    }
  }
  return out;
}

BoundarySignal AdjointOperator::boundary(const PeriodicField& w) const {
  const auto& m = tr_->model();
  const auto r = m.reflections();
  const int last = w.nodes() - 1;
  const double a10 = m.speed(0, 0.0), a20 = m.speed(1, 0.0), a11 = m.speed(0, 1.0),
               a21 = m.speed(1, 1.0);
  BoundarySignal b(2, w.order());
  for (int k = 0; k < w.modes(); ++k) {
    b.at(0)[k] = r[0] * a10 * w.at(0, 0)[k] + a20 * w.at(1, 0)[k];
    b.at(1)[k] = a11 * w.at(0, last)[k] + r[1] * a21 * w.at(1, last)[k];
  }
  return b;
}

PeriodicField AdjointOperator::apply(const PeriodicField& w) const {
  auto out = interior(w);
  const auto b = boundary(w);
  const int last = w.nodes() - 1;
  std::copy(b.at(0).begin(), b.at(0).end(), out.at(left_row_, 0).begin());
  std::copy(b.at(1).begin(), b.at(1).end(), out.at(right_row_, last).begin());
  return out;
}

PdeResidual AdjointOperator::residual(const PeriodicField& w) const {
  return {interior(w), boundary(w)};
}

Eigen::MatrixXd AdjointOperator::assemble() const {
  const auto& grid = tr_->grid();
  const int order = tr_->order();
  const int n = PeriodicField::packed_size(2, order, grid->size());
  Eigen::MatrixXd a(n, n);
  Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
  for (int c = 0; c < n; ++c) {
    e[c] = 1.0;
    a.col(c) = apply(PeriodicField::unpack(e, 2, order, grid)).pack();
    e[c] = 0.0;
  }
  return a;
}

AdjointSolution solve_adjoint(const Transport& tr, const LinearCoefficients& lin,
                              const PeriodicField& pair_with) {
  const AdjointOperator op(tr, lin);
  const auto ss = smallest_singular(op.assemble(), 2);
  AdjointSolution sol;
  sol.kernel_gap = ss.values[1] / std::max(ss.values[0], 1e-300);
  if (!(sol.kernel_gap > 10.0)) throw AdjointError("adjoint kernel not numerically simple");
  auto u = PeriodicField::unpack(ss.vectors.col(0), 2, tr.order(), tr.grid());
  u *= 1.0 / sup_norm(u);
  sol.normalization_value = l2_inner(pair_with, u);
  if (!(std::abs(sol.normalization_value) >= 1e-8))
    throw AdjointError("non-transversal kernel: adjoint null vector is orthogonal to d_t u0");
  u *= 1.0 / sol.normalization_value;
  sol.residual = sup_norm(op.apply(u));
  sol.u_star = std::move(u);
  return sol;
}

AdjointSolution solve_adjoint_sys(const SystemProblem& p, const PeriodicField& u0) {
  const SystemModel model(p);
  const Transport tr(model, u0.order(), u0.grid_ptr());
  return solve_adjoint(tr, model.lower_order_jacobian(u0, 0.0, 0.0), u0.time_derivative());
}

PeriodicField second_order_partial(const SecondOrderProblem& p, const PeriodicField& u0, int slot) {
  if (slot < 0 || slot > 2) throw std::invalid_argument("second_order_partial: slot is 0, 1 or 2");
  const int ns = trig::sample_count(u0.order());
  const auto su = nodal_samples(u0, 0, ns);
  const auto sp = nodal_samples(u0.time_derivative(), 0, ns);
  const auto sq = nodal_samples(x_derivative(u0), 0, ns);
  std::vector<double> out(su.size());
  for (int i = 0; i < u0.nodes(); ++i) {
    const double x = u0.grid().node(i);
    for (int s = 0; s < ns; ++s) {
      const size_t n = size_t(i) * ns + s;
      double d[3];
      p.b.partials(x, su[n], sp[n], sq[n], d);
      out[n] = d[slot];
    }
  }
  return from_nodal_samples({out}, ns, u0.order(), u0.grid_ptr());
}

SecondOrderAdjoint solve_adjoint_eq(const SecondOrderProblem& p, const PeriodicField& u0) {
  const FosContext ctx(p, u0);
  const Transport tr(ctx.model, u0.order(), u0.grid_ptr());
  SecondOrderAdjoint out;
  out.first_order = solve_adjoint(tr, ctx.model.lower_order_jacobian(ctx.v0, 0.0, 0.0),
                                  ctx.v0.time_derivative());
  const auto& v = out.first_order.u_star;
  const auto v1 = v.component(0), v2 = v.component(1);
  out.u_star = v1 + v2;
  out.u_tilde = v2 - v1;

  const auto b3 = second_order_partial(p, u0, 1);
  auto integrand = out.u_star.time_derivative() - multiply(b3, out.u_star);
  auto check = cumulative_integral(integrand, true);
  for (int i = 0; i < check.nodes(); ++i) {
    const double inv = 1.0 / p.a(check.grid().node(i));
    for (auto& c : check.at(0, i)) c *= inv;
  }
  out.identity_error = sup_norm(check - out.u_tilde);
  if (out.identity_error > 1e-4) throw AdjointError("inconsistent adjoint: u_tilde identity violated");

  const auto ut = u0.time_derivative();
  out.pairing = l2_inner(2.0 * ut.time_derivative() + multiply(b3, ut), out.u_star);
  return out;
}

}  // namespace hyperlock
