#include "hyperlock/problem.hpp"

#include <algorithm>
#include <cmath>

#include "hyperlock/charops.hpp"

namespace hyperlock {

namespace {

constexpr double kCheckTolerance = 1e-5;

bool close(double approx, double exact) {
  return std::abs(approx - exact) <= kCheckTolerance * (1.0 + std::abs(exact));
}

double central_difference(const std::function<double(double)>& fn, double x) {
  const double h = 1e-5 * std::max(1.0, std::abs(x));
  return (fn(x + h) - fn(x - h)) / (2 * h);
}

void check_coefficient(const std::string& what, const CoefficientFunction& c, bool need_second) {
  if (!c.value || !c.derivative) throw ProblemError(what + ": value and derivative required");
  if (need_second && !c.second) throw ProblemError(what + ": second derivative required");
  for (int i = 1; i < 100; ++i) {
    const double x = i / 100.0;
    if (!close(central_difference(c.value, x), c.derivative(x)))
      throw ProblemError(what + ": derivative disagrees with finite differences at x = " +
                         std::to_string(x));
    if (need_second && !close(central_difference(c.derivative, x), c.second(x)))
      throw ProblemError(what + ": second derivative disagrees with finite differences at x = " +
                         std::to_string(x));
  }
}

const double kProbeStates[][3] = {
    {0.3, -0.7, 0.2}, {1.1, 0.4, -0.9}, {-0.5, 0.9, 0.6}, {0.0, 0.0, 0.0}};

}  // namespace

CoefficientFunction CoefficientFunction::constant(double c) {
  return {[c](double) { return c; }, [](double) { return 0.0; }, [](double) { return 0.0; }};
}

void SystemProblem::validate() const {
  for (int j = 0; j < 2; ++j) check_coefficient("a" + std::to_string(j + 1), a[j], false);
  for (int i = 0; i <= 1000; ++i) {
    const double x = i / 1000.0;
    const double a1 = a[0](x), a2 = a[1](x);
    if (a1 == 0 || a2 == 0 || !std::isfinite(a1) || !std::isfinite(a2))
      throw ProblemError("speed vanishes at x = " + std::to_string(x));
    if (std::abs(a1 - a2) < 1e-12)
      throw ProblemError("speeds coincide at x = " + std::to_string(x));
  }
  if (!b.value || !b.jacobian) throw ProblemError("b: value and jacobian required");
  for (int i = 0; i <= 4; ++i) {
    const double x = i / 4.0;
    for (const auto& st : kProbeStates) {
      double jac[4];
      b.jacobian(x, st, jac);
      for (int k = 0; k < 2; ++k) {
        const double h = 1e-5 * std::max(1.0, std::abs(st[k]));
        double up[2] = {st[0], st[1]}, dn[2] = {st[0], st[1]}, bu[2], bd[2];
        up[k] += h;
        dn[k] -= h;
        b.value(x, up, bu);
        b.value(x, dn, bd);
        for (int j = 0; j < 2; ++j)
          if (!close((bu[j] - bd[j]) / (2 * h), jac[2 * j + k]))
            throw ProblemError("b: d b" + std::to_string(j + 1) + "/d u" + std::to_string(k + 1) +
                               " disagrees with finite differences at x = " + std::to_string(x));
      }
    }
  }
}

void SecondOrderProblem::validate() const {
  check_coefficient("a", a, true);
  for (int i = 0; i <= 1000; ++i) {
    const double x = i / 1000.0;
    if (a(x) == 0 || !std::isfinite(a(x))) throw ProblemError("a vanishes at x = " + std::to_string(x));
  }
  if (!b.value || !b.partials) throw ProblemError("b: value and partials required");
  for (int i = 0; i <= 4; ++i) {
    const double x = i / 4.0;
    for (const auto& st : kProbeStates) {
      double d[3];
      b.partials(x, st[0], st[1], st[2], d);
      for (int k = 0; k < 3; ++k) {
        const double h = 1e-5 * std::max(1.0, std::abs(st[k]));
        double up[3] = {st[0], st[1], st[2]}, dn[3] = {st[0], st[1], st[2]};
        up[k] += h;
        dn[k] -= h;
        const double fd = (b.value(x, up[0], up[1], up[2]) - b.value(x, dn[0], dn[1], dn[2])) / (2 * h);
        if (!close(fd, d[k]))
          throw ProblemError("b: partial " + std::to_string(k + 2) +
                             " disagrees with finite differences at x = " + std::to_string(x));
      }
    }
  }
}

// ---------------------------------------------------------------------------

std::vector<double> nodal_samples(const PeriodicField& u, int comp, int samples) {
  std::vector<double> out(size_t(u.nodes()) * samples);
  for (int i = 0; i < u.nodes(); ++i)
    trig::to_samples(u.at(comp, i), std::span<double>(out.data() + size_t(i) * samples, samples));
  return out;
}

PeriodicField from_nodal_samples(const std::vector<std::vector<double>>& comps, int samples,
                                 int order, const GridPtr& grid) {
  PeriodicField u(static_cast<int>(comps.size()), order, grid);
  for (size_t j = 0; j < comps.size(); ++j)
    for (int i = 0; i < grid->size(); ++i)
      trig::from_samples(std::span<const double>(comps[j].data() + size_t(i) * samples, samples),
                         u.at(static_cast<int>(j), i));
  return u;
}

PeriodicField coeff_bjk(const SystemProblem& p, const PeriodicField& u0, int j, int k) {
  if (u0.components() != 2) throw std::invalid_argument("coeff_bjk: u0 needs 2 components");
  const int ns = trig::sample_count(u0.order());
  const auto s1 = nodal_samples(u0, 0, ns), s2 = nodal_samples(u0, 1, ns);
  std::vector<std::vector<double>> out(1, std::vector<double>(s1.size()));
  for (int i = 0; i < u0.nodes(); ++i) {
    const double x = u0.grid().node(i);
    for (int s = 0; s < ns; ++s) {
      const size_t n = size_t(i) * ns + s;
      const double u[2] = {s1[n], s2[n]};
      double jac[4];
      p.b.jacobian(x, u, jac);
      out[0][n] = jac[2 * j + k];
    }
  }
  return from_nodal_samples(out, ns, u0.order(), u0.grid_ptr());
}

PeriodicField beta0(const SystemProblem& p, const PeriodicField& u0) {
  const auto b11 = coeff_bjk(p, u0, 0, 0), b22 = coeff_bjk(p, u0, 1, 1);
  PeriodicField out(2, u0.order(), u0.grid_ptr());
  for (int i = 0; i < u0.nodes(); ++i) {
    std::copy(b11.at(0, i).begin(), b11.at(0, i).end(), out.at(0, i).begin());
    std::copy(b22.at(0, i).begin(), b22.at(0, i).end(), out.at(1, i).begin());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Ellipse family

EllipseFamily::EllipseFamily(const EllipseSpec& spec) : spec_(spec) {
  const auto& a = spec.speeds;
  if (a[0] == 0 || a[1] == 0 || a[0] == a[1]) throw ProblemError("ellipse: speeds must be distinct and nonzero");
  if (spec.amplitude[0] <= 0 || spec.amplitude[1] <= 0)
    throw ProblemError("ellipse: amplitudes must be positive");
  rate_ = kTwoPi * (1.0 / a[0] - 1.0 / a[1]);
  turns_ = static_cast<int>(std::lround(rate_ / kPi));
  if (turns_ == 0 || std::abs(rate_ - turns_ * kPi) > 1e-9)
    throw ProblemError("ellipse: 2 pi (1/a1 - 1/a2) must be a nonzero multiple of pi, otherwise "
                       "the boundary conditions cannot hold");
}

double EllipseFamily::delta(double x) const { return rate_ * x; }

double EllipseFamily::amplitude(int j, double x) const {
  return spec_.amplitude[j] * std::exp(spec_.amplitude_growth[j] * x);
}

double EllipseFamily::coupling(double x) const {
  return spec_.coupling_mean + spec_.coupling_swing * std::cos(delta(x));
}

double EllipseFamily::phase(int j, double x) const {
  // Lambda' = coupling * sin(delta) keeps the phase drift expressible through u
  const double c = rate_;
  const double s = std::sin(c * x);
  const double lambda = spec_.coupling_mean * (1 - std::cos(c * x)) / c + spec_.coupling_swing * s * s / (2 * c);
  return kTwoPi * spec_.phase + kTwoPi * x / spec_.speeds[j] - lambda;
}

std::array<double, 4> EllipseFamily::linear_part(double x) const {
  const auto& a = spec_.speeds;
  const auto& g = spec_.amplitude_growth;
  const double lc = coupling(x) * std::cos(delta(x));
  const double ratio = amplitude(0, x) / amplitude(1, x);
  return {a[0] * (lc - g[0]), -a[0] * coupling(x) * ratio, a[1] * coupling(x) / ratio,
          -a[1] * (g[1] + lc)};
}

double EllipseFamily::solution(int j, double t, double x) const {
  return amplitude(j, x) * std::cos(kTwoPi * t - phase(j, x));
}

std::array<double, 2> EllipseFamily::reflections() const {
  const double sign = turns_ % 2 == 0 ? 1.0 : -1.0;
  return {amplitude(0, 0) / amplitude(1, 0), sign * amplitude(1, 1) / amplitude(0, 1)};
}

SystemProblem EllipseFamily::problem() const {
  SystemProblem p;
  p.name = "ellipse";
  p.a = {CoefficientFunction::constant(spec_.speeds[0]), CoefficientFunction::constant(spec_.speeds[1])};
  p.r = reflections();
  const EllipseFamily fam = *this;
  const double kappa = spec_.stiffness;
  // b = M(x) u + kappa (q - sin^2 delta) u, where q(u) = sin^2 delta on the ellipse
  auto quad_form = [fam](double x, const double* u, double* dq) {
    const double r1 = fam.amplitude(0, x), r2 = fam.amplitude(1, x), cd = std::cos(fam.delta(x));
    const double q = u[0] * u[0] / (r1 * r1) + u[1] * u[1] / (r2 * r2) - 2 * cd * u[0] * u[1] / (r1 * r2);
    if (dq) {
      dq[0] = 2 * u[0] / (r1 * r1) - 2 * cd * u[1] / (r1 * r2);
      dq[1] = 2 * u[1] / (r2 * r2) - 2 * cd * u[0] / (r1 * r2);
    }
    const double sd = std::sin(fam.delta(x));
    return q - sd * sd;
  };
  p.b.value = [fam, kappa, quad_form](double x, const double* u, double* b) {
    const auto m = fam.linear_part(x);
    const double e = kappa * quad_form(x, u, nullptr);
    b[0] = m[0] * u[0] + m[1] * u[1] + e * u[0];
    b[1] = m[2] * u[0] + m[3] * u[1] + e * u[1];
  };
  p.b.jacobian = [fam, kappa, quad_form](double x, const double* u, double* jac) {
    const auto m = fam.linear_part(x);
    double dq[2];
    const double e = kappa * quad_form(x, u, dq);
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k) jac[2 * j + k] = m[2 * j + k] + kappa * u[j] * dq[k] + (j == k ? e : 0.0);
  };
  return p;
}

std::pair<SystemProblem, UnforcedSolution> manufacture_system(const EllipseSpec& spec) {
  const EllipseFamily fam(spec);
  auto p = fam.problem();
  p.validate();
  const auto grid = make_grid(spec.nodes);
  UnforcedSolution sol;
  sol.u0 = PeriodicField::sample(2, spec.order, grid, [&fam](double t, double x, double* out) {
    out[0] = fam.solution(0, t, x);
    out[1] = fam.solution(1, t, x);
  });
  sol.provenance = Provenance::Manufactured;
  sol.residual = unforced_residual(p, sol.u0);
  return {std::move(p), std::move(sol)};
}

std::pair<SystemProblem, UnforcedSolution> counterexample_sys(const std::vector<cplx>& psi,
                                                              int order, int nodes) {
  if (psi.empty() || static_cast<int>(psi.size()) > order + 1)
    throw std::invalid_argument("counterexample: Psi needs between 1 and order+1 modes");
  SystemProblem p;
  p.name = "counterexample";
  p.a = {CoefficientFunction::constant(1.0), CoefficientFunction::constant(-1.0)};
  p.r = {1.0, 1.0};
  p.b.value = [](double, const double*, double* b) { b[0] = b[1] = 0; };
  p.b.jacobian = [](double, const double*, double* jac) { std::fill_n(jac, 4, 0.0); };
  const auto grid = make_grid(nodes);
  UnforcedSolution sol;
  sol.u0 = PeriodicField(2, order, grid);
  for (int i = 0; i < nodes; ++i) {
    const double x = grid->node(i);
    std::vector<cplx> m(psi.begin(), psi.end());
    m.resize(order + 1);
    auto left = m, right = m;
    trig::shift(left, -x);
    trig::shift(right, x);
    std::copy(left.begin(), left.end(), sol.u0.at(0, i).begin());
    std::copy(right.begin(), right.end(), sol.u0.at(1, i).begin());
  }
  sol.provenance = Provenance::Manufactured;
  sol.residual = unforced_residual(p, sol.u0);
  return {std::move(p), std::move(sol)};
}

// ---------------------------------------------------------------------------
// Second-order instances

SecondOrderInstance manufacture_second_order(const StandingWaveSpec& spec) {
  const double a = spec.speed, k = spec.wavenumber, amp = spec.amplitude;
  const double drift = spec.drift, kappa = spec.stiffness;
  if (a == 0) throw ProblemError("standing wave: speed must be nonzero");
  if (std::abs(std::sin(k)) < 1e-8) throw ProblemError("standing wave: sin(k) must not vanish");
  SecondOrderInstance inst;
  auto& p = inst.problem;
  p.name = "standing_wave";
  p.a = CoefficientFunction::constant(a);
  p.gamma = -k * std::cos(k) / std::sin(k);
  const double w2 = kTwoPi * kTwoPi;
  // b = P(x) u + drift sin(kx) q + kappa (u^2 + p^2/(2 pi)^2 - A^2 sin^2 kx) p
  auto linear = [=](double x) { return w2 - a * a * k * k - drift * k * std::cos(k * x); };
  p.b.value = [=](double x, double u, double pt, double q) {
    const double s = amp * std::sin(k * x);
    return linear(x) * u + drift * std::sin(k * x) * q + kappa * (u * u + pt * pt / w2 - s * s) * pt;
  };
  p.b.partials = [=](double x, double u, double pt, double, double* d) {
    const double s = amp * std::sin(k * x);
    d[0] = linear(x) + 2 * kappa * u * pt;
    d[1] = kappa * (u * u + 3 * pt * pt / w2 - s * s);
    d[2] = drift * std::sin(k * x);
  };
  p.validate();
  const auto grid = make_grid(spec.nodes);
  inst.solution.u0 = PeriodicField::sample(1, spec.order, grid, [=](double t, double x, double* out) {
    out[0] = amp * std::sin(k * x) * std::cos(kTwoPi * t);
  });
  inst.solution.provenance = Provenance::Manufactured;
  inst.solution.residual = unforced_residual(p, inst.solution.u0);
  inst.derivatives = [=](double t, double x, double* d) {
    d[0] = -kTwoPi * amp * std::sin(k * x) * std::sin(kTwoPi * t);
    d[1] = amp * k * std::cos(k * x) * std::cos(kTwoPi * t);
  };
  return inst;
}

SecondOrderInstance counterexample_eq(const std::vector<double>& odd_sine_coeffs, int order,
                                      int nodes) {
  if (odd_sine_coeffs.empty()) throw std::invalid_argument("counterexample: no Psi coefficients");
  if (2 * static_cast<int>(odd_sine_coeffs.size()) - 1 > order)
    throw std::invalid_argument("counterexample: order too small for Psi");
  SecondOrderInstance inst;
  auto& p = inst.problem;
  p.name = "counterexample_eq";
  p.a = CoefficientFunction::constant(4.0);
  p.gamma = 0.0;
  p.b.value = [](double, double, double, double) { return 0.0; };
  p.b.partials = [](double, double, double, double, double* d) { d[0] = d[1] = d[2] = 0; };
  const auto c = odd_sine_coeffs;
  // each term: sin(4 w t) sin(w x) / (4 w), w = (2n+1) pi / 2
  inst.solution.u0 = PeriodicField::sample(1, order, make_grid(nodes), [c](double t, double x, double* out) {
    out[0] = 0;
    for (size_t n = 0; n < c.size(); ++n) {
      const double w = (2.0 * n + 1.0) * kPi / 2;
      out[0] += c[n] * std::sin(4 * w * t) * std::sin(w * x) / (4 * w);
    }
  });
  inst.solution.provenance = Provenance::Manufactured;
  inst.solution.residual = unforced_residual(p, inst.solution.u0);
  inst.derivatives = [c](double t, double x, double* d) {
    d[0] = d[1] = 0;
    for (size_t n = 0; n < c.size(); ++n) {
      const double w = (2.0 * n + 1.0) * kPi / 2;
      d[0] += c[n] * std::cos(4 * w * t) * std::sin(w * x);
      d[1] += c[n] * std::sin(4 * w * t) * std::cos(w * x) / 4;
    }
  };
  return inst;
}

// ---------------------------------------------------------------------------

double unforced_residual(const SystemProblem& p, const PeriodicField& u0) {
  SystemModel model(p);
  Transport tr(model, u0.order(), u0.grid_ptr());
  return residual_pde(tr, 0.0, 1.0, u0).norm();
}

double unforced_residual(const SecondOrderProblem& p, const PeriodicField& u0) {
  if (u0.components() != 1) throw std::invalid_argument("unforced_residual: need one component");
  const int ns = trig::sample_count(u0.order());
  const auto ut = u0.time_derivative();
  const auto utt = ut.time_derivative();
  const auto ux = x_derivative(u0);
  const auto uxx = x_derivative(ux);
  const auto su = nodal_samples(u0, 0, ns), sp = nodal_samples(ut, 0, ns),
             spp = nodal_samples(utt, 0, ns), sq = nodal_samples(ux, 0, ns),
             sqq = nodal_samples(uxx, 0, ns);
  std::vector<std::vector<double>> res(1, std::vector<double>(su.size()));
  for (int i = 0; i < u0.nodes(); ++i) {
    const double x = u0.grid().node(i), a = p.a(x);
    for (int s = 0; s < ns; ++s) {
      const size_t n = size_t(i) * ns + s;
      res[0][n] = spp[n] - a * a * sqq[n] + p.b.value(x, su[n], sp[n], sq[n]);
    }
  }
  double r = sup_norm(from_nodal_samples(res, ns, u0.order(), u0.grid_ptr()));
  const int last = u0.nodes() - 1;
  BoundarySignal right(1, u0.order());
  for (int k = 0; k < u0.modes(); ++k) right.at(0)[k] = ux.at(0, last)[k] + p.gamma * u0.at(0, last)[k];
  r = std::max(r, sup_norm(u0.trace(0, 0)));
  return std::max(r, sup_norm(right));
}

// ---------------------------------------------------------------------------
// FirstOrderModel defaults and the system model

PeriodicField FirstOrderModel::lower_order_eps_rate(const PeriodicField& v, double) const {
  return PeriodicField(2, v.order(), v.grid_ptr());
}

PeriodicField FirstOrderModel::lower_order_phase_rate(const PeriodicField& v, double, double) const {
  return PeriodicField(2, v.order(), v.grid_ptr());
}

PeriodicField SystemModel::lower_order(const PeriodicField& v, double, double) const {
  const int ns = trig::sample_count(v.order());
  auto s1 = nodal_samples(v, 0, ns), s2 = nodal_samples(v, 1, ns);
  for (int i = 0; i < v.nodes(); ++i) {
    const double x = v.grid().node(i);
    for (int s = 0; s < ns; ++s) {
      const size_t n = size_t(i) * ns + s;
      const double u[2] = {s1[n], s2[n]};
      double b[2];
      p_.b.value(x, u, b);
      s1[n] = b[0];
      s2[n] = b[1];
    }
  }
  return from_nodal_samples({s1, s2}, ns, v.order(), v.grid_ptr());
}

LinearCoefficients SystemModel::lower_order_jacobian(const PeriodicField& v, double, double) const {
  const int ns = trig::sample_count(v.order());
  const auto s1 = nodal_samples(v, 0, ns), s2 = nodal_samples(v, 1, ns);
  LinearCoefficients lc;
  lc.samples = ns;
  lc.nodes = v.nodes();
  for (auto& row : lc.pointwise)
    for (auto& c : row) c.resize(s1.size());
  for (int i = 0; i < v.nodes(); ++i) {
    const double x = v.grid().node(i);
    for (int s = 0; s < ns; ++s) {
      const size_t n = size_t(i) * ns + s;
      const double u[2] = {s1[n], s2[n]};
      double jac[4];
      p_.b.jacobian(x, u, jac);
      for (int j = 0; j < 2; ++j)
        for (int k = 0; k < 2; ++k) lc.pointwise[j][k][n] = jac[2 * j + k];
    }
  }
  return lc;
}

PeriodicField SystemModel::forcing_field(int order, const GridPtr& grid) const {
  if (!p_.f) return PeriodicField(2, order, grid);
  return PeriodicField::sample(2, order, grid, [this](double t, double x, double* out) { p_.f(t, x, out); });
}

BoundarySignal SystemModel::boundary_forcing(double, int order) const {
  if (!p_.g) return BoundarySignal(2, order);
  return BoundarySignal::sample(2, order, [this](double t, double* out) { p_.g(t, out); });
}

}  // namespace hyperlock
