#include "hyperlock/phase.hpp"

#include <algorithm>
#include <cmath>

namespace hyperlock {

namespace {

constexpr double kRootTolerance = 1e-10;
constexpr double kSlopeThreshold = 1e-8;

// sum over |k| <= M of conj(a_k) b_k e^{2 pi i k phi}, i.e. int a(t - phi) b(t) dt, into acc
void accumulate_correlation(std::span<const cplx> a, std::span<const cplx> b, double weight,
                            std::vector<cplx>& acc) {
  const size_t n = std::min({a.size(), b.size(), acc.size()});
  for (size_t k = 0; k < n; ++k) acc[k] += weight * std::conj(a[k]) * b[k];
}

BoundarySignal scalar_signal(const std::function<double(double)>& fn, int order) {
  if (!fn) return BoundarySignal(1, order);
  return BoundarySignal::sample(1, order, [&fn](double t, double* out) { out[0] = fn(t); });
}

// Newton on a bracket [lo, hi] with a sign change of Phi - tau, bisection as fallback.
double polish(const PhaseCurve& c, double tau, double lo, double hi) {
  double flo = c.value(lo) - tau;
  double x = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    const double fx = c.value(x) - tau;
    if (std::abs(fx) < 0.01 * kRootTolerance) break;
    if ((fx < 0) == (flo < 0)) lo = x, flo = fx;
    else hi = x;
    const double d = c.slope(x);
    double next = d != 0 ? x - fx / d : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (hi - lo < 1e-15) break;
    x = next;
  }
  return x;
}

}  // namespace

PhaseCurve PhaseCurve::from_modes(std::vector<cplx> modes, int samples) {
  PhaseCurve c;
  c.modes = std::move(modes);
  c.modes[0] = c.modes[0].real();
  c.phi.resize(samples);
  c.values.resize(samples);
  c.slopes.resize(samples);
  for (int n = 0; n < samples; ++n) {
    c.phi[n] = double(n) / samples;
    c.values[n] = c.value(c.phi[n]);
    c.slopes[n] = c.slope(c.phi[n]);
  }
  return c;
}

PhaseCurve phi_curve_sys(const SystemProblem& p, const AdjointSolution& adj) {
  const auto& us = adj.u_star;
  const int order = us.order();
  std::vector<cplx> acc(order + 1, cplx(0));
  if (p.f) {
    const auto f = PeriodicField::sample(2, order, us.grid_ptr(),
                                         [&p](double t, double x, double* out) { p.f(t, x, out); });
    const auto w = us.grid().node_weights();
    for (int j = 0; j < 2; ++j)
      for (int i = 0; i < us.nodes(); ++i) accumulate_correlation(f.at(j, i), us.at(j, i), w[i], acc);
  }
  if (p.g) {
    const auto g = BoundarySignal::sample(2, order, [&p](double t, double* out) { p.g(t, out); });
    const int last = us.nodes() - 1;
    accumulate_correlation(g.at(0), us.at(0, 0), p.a[0](0.0), acc);
    accumulate_correlation(g.at(1), us.at(1, last), -p.a[1](1.0), acc);
  }
  for (auto& c : acc) c = -c;
  return PhaseCurve::from_modes(std::move(acc));
}

PhaseCurve phi_curve_eq(const SecondOrderProblem& p, const SecondOrderAdjoint& adj) {
  const auto& us = adj.u_star;
  const int order = us.order();
  const int last = us.nodes() - 1;
  std::vector<cplx> acc(order + 1, cplx(0));
  if (p.f) {
    const auto f = PeriodicField::sample(1, order, us.grid_ptr(),
                                         [&p](double t, double x, double* out) { out[0] = p.f(t, x); });
    const auto w = us.grid().node_weights();
    for (int i = 0; i < us.nodes(); ++i) accumulate_correlation(f.at(0, i), us.at(0, i), w[i], acc);
  }
  if (p.g2) {
    const double a1 = p.a(1.0);
    accumulate_correlation(scalar_signal(p.g2, order).at(0), us.at(0, last), a1 * a1, acc);
  }
  if (p.g1) {
    const double a0 = p.a(0.0);
    const auto dus = x_derivative(us);
    accumulate_correlation(scalar_signal(p.g1, order).at(0), dus.at(0, 0), a0 * a0, acc);
  }
  for (auto& c : acc) c = -c;
  return PhaseCurve::from_modes(std::move(acc));
}

PhaseCurve phi_curve_first_order(const Transport& tr, const PeriodicField& beta0,
                                 const PeriodicField& v0, const PeriodicField& u_star) {
  const auto& model = tr.model();
  const int order = u_star.order();
  const int ns = trig::sample_count(order);
  std::vector<double> samples(ns, 0.0);
  if (model.forced()) {
    const auto kt = tr.kernels(1.0, beta0);
    const auto g = model.boundary_forcing(1.0, order);
    const auto f = model.forcing_field(order, u_star.grid_ptr());
    for (int n = 0; n < ns; ++n) {
      const double phi = double(n) / ns;
      auto h = shift(f, -phi) - model.lower_order_eps_rate(v0, phi);
      const auto u = tr.apply_C(kt, shift(g, -phi)) + tr.apply_D(kt, h);
      samples[n] = -functional_phi(tr, beta0, u_star, u);
    }
  }
  std::vector<cplx> modes(order + 1);
  trig::from_samples(samples, modes);
  return PhaseCurve::from_modes(std::move(modes));
}

std::vector<PhaseRoot> find_locked_phases(const PhaseCurve& curve, double tau) {
  double spread = 0;
  for (size_t k = 1; k < curve.modes.size(); ++k) spread = std::max(spread, std::abs(curve.modes[k]));
  if (spread < 1e-14 * std::max(1.0, std::abs(curve.modes[0]))) {
    if (std::abs(curve.modes[0].real() - tau) < kRootTolerance)
      throw PhaseError("degenerate phase curve: Phi is constant and equal to tau");
    return {};
  }
  std::vector<PhaseRoot> roots;
  const int n = static_cast<int>(curve.phi.size());
  auto add = [&](double phi) {
    phi -= std::floor(phi);
    if (phi >= 1.0) phi = 0.0;
    for (const auto& r : roots)
      if (std::abs(r.phi - phi) < 1e-12 || std::abs(std::abs(r.phi - phi) - 1.0) < 1e-12) return;
    PhaseRoot r;
    r.phi = phi;
    r.slope = curve.slope(phi);
    r.nondegenerate = std::abs(r.slope) > kSlopeThreshold;
    roots.push_back(r);
  };
  for (int i = 0; i < n; ++i) {
    const double lo = curve.phi[i], hi = i + 1 < n ? curve.phi[i + 1] : 1.0;
    const double flo = curve.values[i] - tau, fhi = curve.value(hi) - tau;
    if (flo == 0.0) add(lo);
    else if ((flo < 0) != (fhi < 0) && fhi != 0.0) add(polish(curve, tau, lo, hi));
  }
  std::sort(roots.begin(), roots.end(), [](const PhaseRoot& a, const PhaseRoot& b) { return a.phi < b.phi; });
  return roots;
}

std::pair<double, double> locking_interval(const PhaseCurve& curve, double lo, double hi) {
  if (!(hi > lo)) throw PhaseError("locking_interval: empty range");
  if (hi - lo > 1.0) throw PhaseError("locking_interval: range longer than one period");
  const int n = 4096;
  const double s0 = curve.slope(lo);
  for (int i = 0; i <= n; ++i) {
    const double s = curve.slope(lo + (hi - lo) * i / n);
    if (std::abs(s) <= kSlopeThreshold || (s < 0) != (s0 < 0))
      throw PhaseError("locking_interval: Phi' vanishes inside the range");
  }
  const double a = curve.value(lo), b = curve.value(hi);
  return {std::min(a, b), std::max(a, b)};
}

double formal_phase_check(const SecondOrderProblem& p, const PeriodicField& u0,
                          const SecondOrderAdjoint& adj, double phi, double tau) {
  const auto& us = adj.u_star;
  const int ns = 4 * trig::sample_count(us.order());
  const auto w = us.grid().node_weights();
  const auto b3 = second_order_partial(p, u0, 1);
  const auto ut = u0.time_derivative();
  const auto weight = 2.0 * ut.time_derivative() + multiply(b3, ut);
  std::vector<double> su(ns), sw(ns);
  double bulk = 0;
  for (int i = 0; i < us.nodes(); ++i) {
    const double x = us.grid().node(i);
    trig::to_samples(us.at(0, i), su);
    trig::to_samples(weight.at(0, i), sw);
    double s = 0;
    for (int n = 0; n < ns; ++n) {
      const double t = double(n) / ns;
      const double f = p.f ? p.f(t - phi, x) : 0.0;
      s += (f + tau * sw[n]) * su[n];
    }
    bulk += w[i] * s / ns;
  }
  const int last = us.nodes() - 1;
  const auto dus = x_derivative(us);
  std::vector<double> right(ns), left(ns);
  trig::to_samples(us.at(0, last), right);
  trig::to_samples(dus.at(0, 0), left);
  const double a0 = p.a(0.0), a1 = p.a(1.0);
  double edge = 0;
  for (int n = 0; n < ns; ++n) {
    const double t = double(n) / ns;
    if (p.g2) edge += a1 * a1 * p.g2(t - phi) * right[n];
    if (p.g1) edge += a0 * a0 * p.g1(t - phi) * left[n];
  }
  return std::abs(bulk + edge / ns);
}

}  // namespace hyperlock
