#include "hyperlock/secondorder.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace hyperlock {

namespace {

// 1/2 int_0^{x_i} (v_1 - v_2)/a dy at every node, on the grid's Gauss points.
PeriodicField half_integral(const CoefficientFunction& a, const PeriodicField& v) {
  if (v.components() != 2) throw std::invalid_argument("partial integral: need 2 components");
  PeriodicField out(1, v.order(), v.grid_ptr());
  const auto quad = v.grid().quad();
  const int per = XGrid::kPointsPerPanel;
  std::vector<cplx> acc(v.modes(), cplx(0));
  for (int i = 1; i < v.nodes(); ++i) {
    for (int r = 0; r < per; ++r) {
      const auto& qp = quad[(i - 1) * per + r];
      const double w = 0.5 * qp.weight / a(qp.y);
      for (int s = 0; s < qp.stencil.count; ++s) {
        auto p = v.at(0, qp.stencil.first + s), m = v.at(1, qp.stencil.first + s);
        const double ws = w * qp.stencil.w[s];
        for (int k = 0; k < v.modes(); ++k) acc[k] += ws * (p[k] - m[k]);
      }
    }
    std::copy(acc.begin(), acc.end(), out.at(0, i).begin());
  }
  return out;
}

std::vector<double> signal_samples(const BoundarySignal& g, int samples) {
  std::vector<double> out(samples);
  trig::to_samples(g.at(0), out);
  return out;
}

}  // namespace

struct FosModel::Slots {
  int samples = 0;
  std::vector<double> u, p, q, v1, v2;  // [node * samples + s]
};

FosModel::FosModel(SecondOrderProblem p) : p_(std::move(p)) {}

PeriodicField FosModel::partial_integral(const PeriodicField& v) const { return half_integral(p_.a, v); }

BoundarySignal FosModel::g1_signal(int order) const {
  if (!p_.g1) return BoundarySignal(1, order);
  return BoundarySignal::sample(1, order, [this](double t, double* out) { out[0] = p_.g1(t); });
}

FosModel::Slots FosModel::evaluate_slots(const PeriodicField& v, double eps, double phi) const {
  if (v.components() != 2) throw std::invalid_argument("FOS model: need 2 components");
  Slots sl;
  const int ns = sl.samples = trig::sample_count(v.order());
  sl.v1 = nodal_samples(v, 0, ns);
  sl.v2 = nodal_samples(v, 1, ns);
  sl.u = nodal_samples(partial_integral(v), 0, ns);
  sl.p.resize(sl.u.size());
  sl.q.resize(sl.u.size());
  std::vector<double> g(ns, 0.0);
  if (eps != 0.0 && p_.g1) g = signal_samples(shift(g1_signal(v.order()), -phi), ns);
  for (int i = 0; i < v.nodes(); ++i) {
    const double a = p_.a(v.grid().node(i));
    for (int s = 0; s < ns; ++s) {
      const size_t n = size_t(i) * ns + s;
      sl.u[n] += eps * g[s];
      sl.p[n] = 0.5 * (sl.v1[n] + sl.v2[n]);
      sl.q[n] = 0.5 * (sl.v1[n] - sl.v2[n]) / a;
    }
  }
  return sl;
}

PeriodicField FosModel::lower_order(const PeriodicField& v, double eps, double phi) const {
  const auto sl = evaluate_slots(v, eps, phi);
  const int ns = sl.samples;
  std::vector<double> out(sl.u.size());
  for (int i = 0; i < v.nodes(); ++i) {
    const double x = v.grid().node(i), da = p_.a.derivative(x);
    for (int s = 0; s < ns; ++s) {
      const size_t n = size_t(i) * ns + s;
      out[n] = p_.b.value(x, sl.u[n], sl.p[n], sl.q[n]) + 0.5 * da * (sl.v1[n] - sl.v2[n]);
    }
  }
  return from_nodal_samples({out, out}, ns, v.order(), v.grid_ptr());
}

LinearCoefficients FosModel::lower_order_jacobian(const PeriodicField& v, double eps,
                                                  double phi) const {
  const auto sl = evaluate_slots(v, eps, phi);
  const int ns = sl.samples;
  LinearCoefficients lc;
  lc.samples = ns;
  lc.nodes = v.nodes();
  for (auto& row : lc.pointwise)
    for (auto& c : row) c.resize(sl.u.size());
  for (auto& c : lc.nonlocal) c.resize(sl.u.size());
  for (int i = 0; i < v.nodes(); ++i) {
    const double x = v.grid().node(i), a = p_.a(x), da = p_.a.derivative(x);
    for (int s = 0; s < ns; ++s) {
      const size_t n = size_t(i) * ns + s;
      double d[3];
      p_.b.partials(x, sl.u[n], sl.p[n], sl.q[n], d);
      const double plus = 0.5 * (d[1] + d[2] / a + da);
      const double minus = 0.5 * (d[1] - d[2] / a - da);
      for (int j = 0; j < 2; ++j) {
        lc.pointwise[j][0][n] = plus;
        lc.pointwise[j][1][n] = minus;
        lc.nonlocal[j][n] = d[0];
      }
    }
  }
  return lc;
}

PeriodicField FosModel::lower_order_eps_rate(const PeriodicField& v, double phi) const {
  if (!p_.g1) return PeriodicField(2, v.order(), v.grid_ptr());
  const auto sl = evaluate_slots(v, 0.0, phi);
  const int ns = sl.samples;
  const auto g = signal_samples(shift(g1_signal(v.order()), -phi), ns);
  std::vector<double> out(sl.u.size());
  for (int i = 0; i < v.nodes(); ++i) {
    const double x = v.grid().node(i);
    for (int s = 0; s < ns; ++s) {
      const size_t n = size_t(i) * ns + s;
      double d[3];
      p_.b.partials(x, sl.u[n], sl.p[n], sl.q[n], d);
      out[n] = d[0] * g[s];
    }
  }
  return from_nodal_samples({out, out}, ns, v.order(), v.grid_ptr());
}

PeriodicField FosModel::lower_order_phase_rate(const PeriodicField& v, double eps, double phi) const {
  if (!p_.g1) return PeriodicField(2, v.order(), v.grid_ptr());
  const auto sl = evaluate_slots(v, eps, phi);
  const int ns = sl.samples;
  const auto dg = signal_samples(shift(g1_signal(v.order()), -phi).time_derivative(), ns);
  std::vector<double> out(sl.u.size());
  for (int i = 0; i < v.nodes(); ++i) {
    const double x = v.grid().node(i);
    for (int s = 0; s < ns; ++s) {
      const size_t n = size_t(i) * ns + s;
      double d[3];
      p_.b.partials(x, sl.u[n], sl.p[n], sl.q[n], d);
      out[n] = -d[0] * dg[s];
    }
  }
  return from_nodal_samples({out, out}, ns, v.order(), v.grid_ptr());
}

PeriodicField FosModel::forcing_field(int order, const GridPtr& grid) const {
  if (!p_.f) return PeriodicField(2, order, grid);
  return PeriodicField::sample(2, order, grid, [this](double t, double x, double* out) {
    out[0] = out[1] = p_.f(t, x);
  });
}

BoundarySignal FosModel::boundary_forcing(double period, int order) const {
  BoundarySignal out(2, order);
  const auto g1 = g1_signal(order);
  const auto dg1 = g1.time_derivative();
  BoundarySignal g2(1, order);
  if (p_.g2) g2 = BoundarySignal::sample(1, order, [this](double t, double* o) { o[0] = p_.g2(t); });
  const double a1 = p_.a(1.0);
  for (int k = 0; k <= order; ++k) {
    out.at(0)[k] = 2.0 * dg1.at(0)[k] / period;
    out.at(1)[k] = -2.0 * a1 * (g2.at(0)[k] - p_.gamma * g1.at(0)[k]);
  }
  return out;
}

FosContext::FosContext(SecondOrderProblem p, const PeriodicField& u0)
    : model(std::move(p)), v0(to_first_order(model.problem(), u0, 1.0)) {
  const auto lc = model.lower_order_jacobian(v0, 0.0, 0.0);
  beta0 = from_nodal_samples({lc.pointwise[0][0], lc.pointwise[1][1]}, lc.samples, v0.order(),
                             v0.grid_ptr());
}

// ---------------------------------------------------------------------------

PeriodicField to_first_order(const SecondOrderProblem& p, const PeriodicField& u, double period) {
  if (u.components() != 1) throw std::invalid_argument("to_first_order: need one component");
  if (!(period > 0)) throw std::invalid_argument("to_first_order: period must be positive");
  const auto ut = u.time_derivative();
  const auto ux = x_derivative(u);
  PeriodicField v(2, u.order(), u.grid_ptr());
  for (int i = 0; i < u.nodes(); ++i) {
    const double a = p.a(u.grid().node(i));
    auto t = ut.at(0, i), x = ux.at(0, i);
    for (int k = 0; k < u.modes(); ++k) {
      v.at(0, i)[k] = t[k] / period + a * x[k];
      v.at(1, i)[k] = t[k] / period - a * x[k];
    }
  }
  return v;
}

PeriodicField from_first_order(const SecondOrderProblem& p, const PeriodicField& v, double eps,
                               const BoundarySignal& g1) {
  auto u = half_integral(p.a, v);
  if (eps != 0.0 && g1.components() > 0) {
    const int n = std::min(g1.order(), u.order()) + 1;
    for (int i = 0; i < u.nodes(); ++i)
      for (int k = 0; k < n; ++k) u.at(0, i)[k] += eps * g1.at(0)[k];
  }
  return u;
}

PeriodicField assemble_fos_nonlinearity(const FosModel& model, double eps, const PeriodicField& v) {
  return model.lower_order(v, eps, 0.0);
}

PeriodicField apply_E(const Transport& tr, double period, const PeriodicField& beta,
                      const PeriodicField& v) {
  BoundarySignal w(2, v.order());
  const double gain = tr.model().boundary_gain();
  if (gain != 0.0) {
    const auto nl = tr.nonlocal_trace(v);
    for (int k = 0; k < v.modes(); ++k) w.at(1)[k] = gain * nl.at(0)[k];
  }
  return tr.apply_C(period, beta, w);
}

NonResonanceReport check_nonres_eq(const SecondOrderProblem& p, const PeriodicField& u0) {
  if (u0.components() != 1) throw std::invalid_argument("check_nonres_eq: need one component");
  const XGrid& g = u0.grid();
  const int ns = trig::sample_count(u0.order());
  const auto su = nodal_samples(u0, 0, ns);
  const auto sp = nodal_samples(u0.time_derivative(), 0, ns);
  const auto sq = nodal_samples(x_derivative(u0), 0, ns);
  std::vector<double> b1(su.size()), b2(su.size());
  for (int i = 0; i < g.size(); ++i) {
    const double x = g.node(i), a = p.a(x), da = p.a.derivative(x);
    for (int s = 0; s < ns; ++s) {
      const size_t n = size_t(i) * ns + s;
      double d[3];
      p.b.partials(x, su[n], sp[n], sq[n], d);
      b1[n] = 0.5 * (da + d[1] + d[2] / a);
      b2[n] = 0.5 * (-da + d[1] - d[2] / a);
    }
  }
  const auto beta = from_nodal_samples({b1, b2}, ns, u0.order(), u0.grid_ptr());

  // travel time A(y) = int_0^y dz/a at the Gauss points
  const auto& fine = gauss_legendre(8);
  auto travel = [&](double x0, double x1) {
    double s = 0;
    for (size_t q = 0; q < fine.nodes.size(); ++q) s += fine.weights[q] / p.a(x0 + (x1 - x0) * fine.nodes[q]);
    return (x1 - x0) * s;
  };
  std::vector<double> node_time(g.size(), 0.0);
  for (int i = 1; i < g.size(); ++i) node_time[i] = node_time[i - 1] + travel(g.node(i - 1), g.node(i));
  const double total = node_time.back();

  // d_0(t) = int (beta_1(t + alpha(x,1)) + beta_2(t - alpha(x,1)))/a dx
  // d_1(t) = int (beta_1(t - alpha(0,x)) + beta_2(t + alpha(0,x)))/a dx
  const int modes = u0.modes();
  std::array<std::vector<cplx>, 2> d{std::vector<cplx>(modes), std::vector<cplx>(modes)};
  std::vector<cplx> m1(modes), m2(modes);
  for (const auto& qp : g.quad()) {
    const double ty = node_time[qp.panel] + travel(g.node(qp.panel), qp.y);
    const double w = qp.weight / p.a(qp.y);
    std::fill(m1.begin(), m1.end(), cplx(0));
    std::fill(m2.begin(), m2.end(), cplx(0));
    for (int s = 0; s < qp.stencil.count; ++s)
      for (int k = 0; k < modes; ++k) {
        m1[k] += qp.stencil.w[s] * beta.at(0, qp.stencil.first + s)[k];
        m2[k] += qp.stencil.w[s] * beta.at(1, qp.stencil.first + s)[k];
      }
    for (int c = 0; c < 2; ++c) {
      const double lag = c == 0 ? total - ty : -ty;
      auto e1 = m1, e2 = m2;
      trig::shift(e1, lag);
      trig::shift(e2, -lag);
      for (int k = 0; k < modes; ++k) d[c][k] += w * (e1[k] + e2[k]);
    }
  }

  NonResonanceReport rep;
  for (int c = 0; c < 2; ++c) {
    rep.margin[c] = trig::min_abs(d[c]);
    rep.satisfied[c] = rep.margin[c] > rep.tolerance;
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (int n = 0; n < 1024; ++n) {
      const double val = trig::evaluate(d[c], n / 1024.0);
      lo = std::min(lo, val), hi = std::max(hi, val);
    }
    if (c == 0) {
      rep.c_minus = std::exp(lo);
      rep.c_plus = std::exp(hi);
    }
    if (rep.satisfied[c]) rep.route[c] = hi < 0 ? InversionRoute::Contract : InversionRoute::Inverted;
  }
  return rep;
}

double residual_second_order(const SecondOrderProblem& p, double eps, double period,
                             const PeriodicField& u) {
  if (u.components() != 1) throw std::invalid_argument("residual_second_order: need one component");
  const int ns = trig::sample_count(u.order());
  const auto ut = u.time_derivative();
  const auto ux = x_derivative(u);
  const auto su = nodal_samples(u, 0, ns), sp = nodal_samples(ut, 0, ns),
             spp = nodal_samples(ut.time_derivative(), 0, ns), sq = nodal_samples(ux, 0, ns),
             sqq = nodal_samples(x_derivative(ux), 0, ns);
  std::vector<double> res(su.size());
  const double inv = 1.0 / period;
  for (int i = 0; i < u.nodes(); ++i) {
    const double x = u.grid().node(i), a = p.a(x);
    for (int s = 0; s < ns; ++s) {
      const size_t n = size_t(i) * ns + s;
      res[n] = spp[n] * inv * inv - a * a * sqq[n] + p.b.value(x, su[n], sp[n] * inv, sq[n]);
      if (eps != 0.0 && p.f) res[n] -= eps * p.f(double(s) / ns, x);
    }
  }
  double r = sup_norm(from_nodal_samples({res}, ns, u.order(), u.grid_ptr()));
  const int last = u.nodes() - 1;
  BoundarySignal left(1, u.order()), right(1, u.order());
  BoundarySignal g1(1, u.order()), g2(1, u.order());
  if (eps != 0.0 && p.g1) g1 = BoundarySignal::sample(1, u.order(), [&p](double t, double* o) { o[0] = p.g1(t); });
  if (eps != 0.0 && p.g2) g2 = BoundarySignal::sample(1, u.order(), [&p](double t, double* o) { o[0] = p.g2(t); });
  for (int k = 0; k < u.modes(); ++k) {
    left.at(0)[k] = u.at(0, 0)[k] - eps * g1.at(0)[k];
    right.at(0)[k] = ux.at(0, last)[k] + p.gamma * u.at(0, last)[k] - eps * g2.at(0)[k];
  }
  r = std::max(r, sup_norm(left));
  return std::max(r, sup_norm(right));
}

PdeResidual residual_fos(const Transport& tr, double eps, double period, const PeriodicField& v,
                         double phi) {
  return residual_pde(tr, eps, period, v, phi);
}

}  // namespace hyperlock
