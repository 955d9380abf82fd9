#include "hyperlock/charops.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hyperlock {

namespace {

constexpr int kFineGauss = 8;

// Modes of the interpolant of u_comp at a stencil.
void interpolate(const PeriodicField& u, int comp, const XGrid::Stencil& st, std::span<cplx> out) {
  std::fill(out.begin(), out.end(), cplx(0));
  const int n = std::min<int>(out.size(), u.modes());
  for (int s = 0; s < st.count; ++s) {
    auto src = u.at(comp, st.first + s);
    for (int k = 0; k < n; ++k) out[k] += st.w[s] * src[k];
  }
}

// Multiplies modes by e^{2 pi i k phi}.
void rotate(std::span<cplx> modes, double phi) { trig::shift(modes, phi); }

bool all_zero(const PeriodicField& f) {
  for (const auto& c : f.data())
    if (c != cplx(0)) return false;
  return true;
}

}  // namespace

// ---------------------------------------------------------------------------
// Characteristics

Characteristics::Characteristics(std::array<std::function<double(double)>, 2> speeds, GridPtr grid)
    : speeds_(std::move(speeds)), grid_(std::move(grid)) {
  const auto& gl = gauss_legendre(kFineGauss);
  const XGrid& g = *grid_;
  const double h = g.spacing();
  for (int j = 0; j < 2; ++j) {
    panel_integral_[j].assign(g.size() - 1, 0.0);
    node_A_[j].assign(g.size(), 0.0);
    node_a_[j].resize(g.size());
    for (int i = 0; i < g.size(); ++i) node_a_[j][i] = speeds_[j](g.node(i));
    for (int p = 0; p + 1 < g.size(); ++p) {
      double s = 0;
      for (size_t q = 0; q < gl.nodes.size(); ++q)
        s += gl.weights[q] / speeds_[j](g.node(p) + h * gl.nodes[q]);
      panel_integral_[j][p] = h * s;
      node_A_[j][p + 1] = node_A_[j][p] + panel_integral_[j][p];
    }
    quad_A_[j].resize(g.quad().size());
    quad_a_[j].resize(g.quad().size());
    for (size_t q = 0; q < g.quad().size(); ++q) {
      quad_A_[j][q] = antiderivative(j, g.quad()[q].y);
      quad_a_[j][q] = speeds_[j](g.quad()[q].y);
    }
  }
}

double Characteristics::antiderivative(int j, double x) const {
  if (!(x >= 0.0 && x <= 1.0)) throw std::out_of_range("antiderivative: x outside [0,1]");
  const XGrid& g = *grid_;
  const int p = std::min(static_cast<int>(std::floor(x / g.spacing())), g.size() - 2);
  const double x0 = g.node(p);
  const double len = x - x0;
  if (len == 0.0) return node_A_[j][p];
  const auto& gl = gauss_legendre(kFineGauss);
  double s = 0;
  for (size_t q = 0; q < gl.nodes.size(); ++q) s += gl.weights[q] / speeds_[j](x0 + len * gl.nodes[q]);
  return node_A_[j][p] + len * s;
}

// ---------------------------------------------------------------------------
// KernelTables

KernelTables::KernelTables(const Characteristics& ch, double period, const PeriodicField& beta,
                           int samples)
    : period_(period),
      samples_(samples),
      beta_modes_(beta.modes()),
      trivial_(all_zero(beta)),
      nodes_(ch.grid().size()),
      quads_(static_cast<int>(ch.grid().quad().size())),
      ones_(samples, 1.0) {
  if (!(period > 0)) throw std::invalid_argument("kernel tables: period must be positive");
  if (beta.components() != 2) throw std::invalid_argument("kernel tables: beta needs 2 components");
  if (trivial_) return;
  const XGrid& g = ch.grid();
  const auto& gl = gauss_legendre(kFineGauss);
  const int km = beta_modes_;
  std::vector<cplx> bz(km), acc(km);

  for (int j = 0; j < 2; ++j) {
    node_G_[j].assign(size_t(nodes_) * km, cplx(0));
    quad_G_[j].assign(size_t(quads_) * km, cplx(0));
    // int_{x0}^{x1} beta_k(z) e^{2 pi i k A(z)/T} / a(z) dz
    auto integrate = [&](double x0, double x1, std::span<cplx> out) {
      std::fill(out.begin(), out.end(), cplx(0));
      const double len = x1 - x0;
      for (size_t q = 0; q < gl.nodes.size(); ++q) {
        const double z = x0 + len * gl.nodes[q];
        interpolate(beta, j, g.stencil(z), bz);
        const double w = len * gl.weights[q] / ch.speed(j, z);
        const cplx step = std::polar(1.0, kTwoPi * ch.antiderivative(j, z) / period);
        cplx e = 1;
        for (int k = 0; k < km; ++k) {
          out[k] += w * bz[k] * e;
          e *= step;
        }
      }
    };
    int q = 0;
    for (int p = 0; p + 1 < nodes_; ++p) {
      std::span<const cplx> base(node_G_[j].data() + size_t(p) * km, km);
      for (int r = 0; r < XGrid::kPointsPerPanel; ++r, ++q) {
        integrate(g.node(p), g.quad()[q].y, acc);
        for (int k = 0; k < km; ++k) quad_G_[j][size_t(q) * km + k] = base[k] + acc[k];
      }
      integrate(g.node(p), g.node(p + 1), acc);
      for (int k = 0; k < km; ++k) node_G_[j][size_t(p + 1) * km + k] = base[k] + acc[k];
    }
    for (int sgn = 0; sgn < 2; ++sgn) {
      node_exp_[j][sgn].resize(size_t(nodes_) * samples_);
      quad_exp_[j][sgn].resize(size_t(quads_) * samples_);
    }
    std::vector<double> buf(samples_);
    auto fill = [&](std::span<const cplx> modes, double* plus, double* minus) {
      trig::to_samples(modes, buf);
      for (int s = 0; s < samples_; ++s) {
        plus[s] = std::exp(buf[s]);
        minus[s] = 1.0 / plus[s];
      }
    };
    for (int i = 0; i < nodes_; ++i)
      fill(node_exponent(j, i), node_exp_[j][1].data() + size_t(i) * samples_,
           node_exp_[j][0].data() + size_t(i) * samples_);
    for (int qq = 0; qq < quads_; ++qq)
      fill(quad_exponent(j, qq), quad_exp_[j][1].data() + size_t(qq) * samples_,
           quad_exp_[j][0].data() + size_t(qq) * samples_);
  }
}

std::span<const cplx> KernelTables::node_exponent(int j, int i) const {
  if (trivial_) return {};
  return {node_G_[j].data() + size_t(i) * beta_modes_, size_t(beta_modes_)};
}

std::span<const cplx> KernelTables::quad_exponent(int j, int q) const {
  if (trivial_) return {};
  return {quad_G_[j].data() + size_t(q) * beta_modes_, size_t(beta_modes_)};
}

std::span<const double> KernelTables::node_growth(int j, int i, int sign) const {
  if (trivial_) return ones_;
  return {node_exp_[j][sign > 0].data() + size_t(i) * samples_, size_t(samples_)};
}

std::span<const double> KernelTables::quad_growth(int j, int q, int sign) const {
  if (trivial_) return ones_;
  return {quad_exp_[j][sign > 0].data() + size_t(q) * samples_, size_t(samples_)};
}

// ---------------------------------------------------------------------------
// Transport

Transport::Transport(const FirstOrderModel& model, int order, GridPtr grid)
    : model_(&model),
      order_(order),
      grid_(grid),
      chars_({[&model](double x) { return model.speed(0, x); },
              [&model](double x) { return model.speed(1, x); }},
             grid) {
  nonlocal_weights_.assign(grid_->size(), 0.0);
  const auto quad = grid_->quad();
  for (size_t q = 0; q < quad.size(); ++q) {
    const auto& pt = quad[q];
    for (int s = 0; s < pt.stencil.count; ++s)
      nonlocal_weights_[pt.stencil.first + s] += pt.weight * pt.stencil.w[s] / chars_.quad_speed(1, q);
  }
}

KernelTables Transport::kernels(double period, const PeriodicField& beta) const {
  return KernelTables(chars_, period, beta, samples());
}

double Transport::kernel_c(int j, double t, double x, double y, double period,
                           const PeriodicField& beta) const {
  if (!(period > 0)) throw std::invalid_argument("kernel_c: period must be positive");
  if (x == y) return 1.0;
  const auto& gl = gauss_legendre(kFineGauss);
  const XGrid& g = *grid_;
  // split [x, y] at the nodes so every piece sees one smooth interpolant
  std::vector<double> cuts{x};
  const double lo = std::min(x, y), hi = std::max(x, y);
  for (int i = 0; i < g.size(); ++i) {
    const double xi = g.node(i);
    if (xi > lo && xi < hi) cuts.push_back(xi);
  }
  if (y < x) std::sort(cuts.begin() + 1, cuts.end(), std::greater<>());
  cuts.push_back(y);
  const double ax = chars_.antiderivative(j, x);
  double e = 0;
  for (size_t c = 0; c + 1 < cuts.size(); ++c) {
    const double z0 = cuts[c], len = cuts[c + 1] - cuts[c];
    for (size_t q = 0; q < gl.nodes.size(); ++q) {
      const double z = z0 + len * gl.nodes[q];
      const auto modes = interpolate_modes(beta, j, z);
      const double tau = t + (chars_.antiderivative(j, z) - ax) / period;
      e += len * gl.weights[q] * trig::evaluate(modes, tau) / chars_.speed(j, z);
    }
  }
  return std::exp(e);
}

BoundarySignal Transport::nonlocal_trace(const PeriodicField& u) const {
  BoundarySignal w(1, u.order());
  auto out = w.at(0);
  for (int i = 0; i < u.nodes(); ++i) {
    auto a = u.at(0, i), b = u.at(1, i);
    for (int k = 0; k < u.modes(); ++k) out[k] += nonlocal_weights_[i] * (a[k] - b[k]);
  }
  return w;
}

BoundarySignal Transport::apply_R(const PeriodicField& u) const {
  if (u.components() != 2) throw std::invalid_argument("apply_R: need 2 components");
  const auto r = model_->reflections();
  BoundarySignal w(2, u.order());
  auto left = u.at(1, 0), right = u.at(0, u.nodes() - 1);
  for (int k = 0; k < u.modes(); ++k) {
    w.at(0)[k] = r[0] * left[k];
    w.at(1)[k] = r[1] * right[k];
  }
  const double gain = model_->boundary_gain();
  if (gain != 0.0) {
    const auto nl = nonlocal_trace(u);
    for (int k = 0; k < u.modes(); ++k) w.at(1)[k] += gain * nl.at(0)[k];
  }
  return w;
}

PeriodicField Transport::apply_C(const KernelTables& kt, const BoundarySignal& w) const {
  PeriodicField out(2, order_, grid_);
  const int ns = kt.samples();
  const double T = kt.period();
  const int keep = std::min(order_, w.order()) + 1;
  // comp 2 enters at x = 1: pre-shift by A_2(1)/T
  std::vector<cplx> w1(w.at(0).begin(), w.at(0).end());
  std::vector<cplx> w2(w.at(1).begin(), w.at(1).end());
  rotate(w2, chars_.node_antiderivative(1, grid_->size() - 1) / T);
  std::vector<double> s1(ns), s2(ns), buf(ns);
  std::vector<cplx> modes(order_ + 1);
  if (!kt.trivial()) {
    trig::to_samples(w1, s1);
    trig::to_samples(w2, s2);
    const auto g1 = kt.node_growth(1, grid_->size() - 1, +1);
    for (int s = 0; s < ns; ++s) s2[s] *= g1[s];
  }
  for (int i = 0; i < grid_->size(); ++i) {
    for (int j = 0; j < 2; ++j) {
      auto dst = out.at(j, i);
      if (kt.trivial()) {
        std::fill(modes.begin(), modes.end(), cplx(0));
        const auto& src = j == 0 ? w1 : w2;
        std::copy_n(src.begin(), keep, modes.begin());
      } else {
        const auto& src = j == 0 ? s1 : s2;
        const auto g = kt.node_growth(j, i, -1);
        for (int s = 0; s < ns; ++s) buf[s] = g[s] * src[s];
        trig::from_samples(buf, modes);
      }
      rotate(modes, -chars_.node_antiderivative(j, i) / T);
      std::copy(modes.begin(), modes.end(), dst.begin());
    }
  }
  return out;
}

PeriodicField Transport::apply_D(const KernelTables& kt, const PeriodicField& u) const {
  if (u.components() != 2) throw std::invalid_argument("apply_D: need 2 components");
  PeriodicField out(2, order_, grid_);
  const int ns = kt.samples();
  const double T = kt.period();
  const int n = grid_->size();
  const auto quad = grid_->quad();
  const int per = XGrid::kPointsPerPanel;
  std::vector<cplx> m(order_ + 1), hm(order_ + 1), modes(order_ + 1);
  std::vector<double> h(ns), buf(ns);

  auto add_panel = [&](int j, int p) {
    for (int r = 0; r < per; ++r) {
      const int q = p * per + r;
      interpolate(u, j, quad[q].stencil, m);
      rotate(m, chars_.quad_antiderivative(j, q) / T);
      const double w = quad[q].weight / chars_.quad_speed(j, q);
      if (kt.trivial()) {
        for (int k = 0; k <= order_; ++k) hm[k] += w * m[k];
      } else {
        trig::to_samples(m, buf);
        const auto g = kt.quad_growth(j, q, +1);
        for (int s = 0; s < ns; ++s) h[s] += w * g[s] * buf[s];
      }
    }
  };
  auto emit = [&](int j, int i, double sign) {
    if (kt.trivial()) {
      modes = hm;
    } else {
      const auto g = kt.node_growth(j, i, -1);
      for (int s = 0; s < ns; ++s) buf[s] = g[s] * h[s];
      trig::from_samples(buf, modes);
    }
    rotate(modes, -chars_.node_antiderivative(j, i) / T);
    auto dst = out.at(j, i);
    for (int k = 0; k <= order_; ++k) dst[k] = sign * modes[k];
  };

  // D_1: int_0^x
  std::fill(h.begin(), h.end(), 0.0);
  std::fill(hm.begin(), hm.end(), cplx(0));
  for (int i = 1; i < n; ++i) {
    add_panel(0, i - 1);
    emit(0, i, 1.0);
  }
  // D_2: -int_x^1
  std::fill(h.begin(), h.end(), 0.0);
  std::fill(hm.begin(), hm.end(), cplx(0));
  for (int i = n - 2; i >= 0; --i) {
    add_panel(1, i);
    emit(1, i, -1.0);
  }
  return out;
}

PeriodicField Transport::partial_integral(const PeriodicField& v) const {
  PeriodicField out(1, v.order(), v.grid_ptr());
  const auto quad = grid_->quad();
  const int per = XGrid::kPointsPerPanel;
  std::vector<cplx> a(v.modes()), b(v.modes()), acc(v.modes(), cplx(0));
  for (int i = 1; i < v.nodes(); ++i) {
    for (int r = 0; r < per; ++r) {
      const int q = (i - 1) * per + r;
      interpolate(v, 0, quad[q].stencil, a);
      interpolate(v, 1, quad[q].stencil, b);
      const double w = 0.5 * quad[q].weight / chars_.quad_speed(1, q);
      for (int k = 0; k < v.modes(); ++k) acc[k] += w * (a[k] - b[k]);
    }
    std::copy(acc.begin(), acc.end(), out.at(0, i).begin());
  }
  return out;
}

PeriodicField Transport::transport_derivative(double period, const PeriodicField& u) const {
  if (!(period > 0)) throw std::invalid_argument("transport_derivative: period must be positive");
  PeriodicField out(u.components(), u.order(), u.grid_ptr());
  std::vector<cplx> step(u.modes());
  for (int j = 0; j < u.components(); ++j)
    for (int i = 0; i < u.nodes(); ++i) {
      const auto row = grid_->diff_row(i);
      auto dst = out.at(j, i);
      const double ai = chars_.node_antiderivative(j, i);
      for (int s = 0; s < row.count; ++s) {
        const int n = row.first + s;
        const cplx rot = std::polar(1.0, kTwoPi * (chars_.node_antiderivative(j, n) - ai) / period);
        auto src = u.at(j, n);
        cplx e = row.w[s];
        for (int k = 0; k < u.modes(); ++k) {
          dst[k] += e * src[k];
          e *= rot;
        }
      }
      const double a = chars_.node_speed(j, i);
      for (auto& c : dst) c *= a;
    }
  return out;
}

PeriodicField Transport::apply_B(const PeriodicField& beta, const PeriodicField& u, double eps,
                                 double phi) const {
  return multiply(beta, u) - model_->lower_order(u, eps, phi);
}

PeriodicField Transport::apply_dB(const PeriodicField& beta, const LinearCoefficients& db,
                                  const PeriodicField& w) const {
  if (db.has_nonlocal()) {
    const auto jw = partial_integral(w);
    return multiply(beta, w) - apply_coefficients(db, w, &jw);
  }
  return multiply(beta, w) - apply_coefficients(db, w, nullptr);
}

// ---------------------------------------------------------------------------
// pointwise products

PeriodicField multiply(const PeriodicField& c, const PeriodicField& u) {
  if (c.components() != u.components() || !(c.grid() == u.grid()))
    throw std::invalid_argument("multiply: shape mismatch");
  PeriodicField out(u.components(), u.order(), u.grid_ptr());
  const int ns = trig::sample_count(std::max(c.order(), u.order()));
  std::vector<double> a(ns), b(ns);
  for (int j = 0; j < u.components(); ++j)
    for (int i = 0; i < u.nodes(); ++i) {
      trig::to_samples(c.at(j, i), a);
      trig::to_samples(u.at(j, i), b);
      for (int s = 0; s < ns; ++s) a[s] *= b[s];
      trig::from_samples(a, out.at(j, i));
    }
  return out;
}

PeriodicField apply_coefficients(const LinearCoefficients& k, const PeriodicField& u,
                                 const PeriodicField* partial_integral) {
  const int ns = k.samples;
  if (ns < u.modes() * 2) throw std::invalid_argument("apply_coefficients: too few samples");
  PeriodicField out(2, u.order(), u.grid_ptr());
  std::vector<double> s0(ns), s1(ns), sj(ns), acc(ns);
  for (int i = 0; i < u.nodes(); ++i) {
    trig::to_samples(u.at(0, i), s0);
    trig::to_samples(u.at(1, i), s1);
    if (partial_integral) trig::to_samples(partial_integral->at(0, i), sj);
    for (int j = 0; j < 2; ++j) {
      const double* p0 = k.pointwise[j][0].data() + size_t(i) * ns;
      const double* p1 = k.pointwise[j][1].data() + size_t(i) * ns;
      for (int s = 0; s < ns; ++s) acc[s] = p0[s] * s0[s] + p1[s] * s1[s];
      if (partial_integral && !k.nonlocal[j].empty()) {
        const double* pn = k.nonlocal[j].data() + size_t(i) * ns;
        for (int s = 0; s < ns; ++s) acc[s] += pn[s] * sj[s];
      }
      trig::from_samples(acc, out.at(j, i));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// residuals and the functional

PeriodicField residual_abstract(const Transport& tr, double eps, double period,
                                const PeriodicField& beta, const PeriodicField& u, double phi) {
  const auto kt = tr.kernels(period, beta);
  auto bnd = tr.apply_R(u);
  auto rhs = tr.apply_B(beta, u, eps, phi);
  if (eps != 0.0 && tr.model().forced()) {
    bnd += eps * shift(tr.model().boundary_forcing(period, u.order()), -phi);
    rhs += eps * shift(tr.model().forcing_field(u.order(), u.grid_ptr()), -phi);
  }
  return u - tr.apply_C(kt, bnd) - tr.apply_D(kt, rhs);
}

double PdeResidual::norm() const { return std::max(sup_norm(interior), sup_norm(boundary)); }

PdeResidual residual_pde(const Transport& tr, double eps, double period, const PeriodicField& u,
                         double phi) {
  const auto& model = tr.model();
  PdeResidual res;
  res.interior = tr.transport_derivative(period, u);
  res.interior += model.lower_order(u, eps, phi);
  BoundarySignal forcing(2, u.order());
  if (eps != 0.0 && model.forced()) {
    res.interior -= eps * shift(model.forcing_field(u.order(), u.grid_ptr()), -phi);
    forcing = eps * shift(model.boundary_forcing(period, u.order()), -phi);
  }
  const auto r = model.reflections();
  res.boundary = BoundarySignal(2, u.order());
  auto left = res.boundary.at(0), right = res.boundary.at(1);
  const int last = u.nodes() - 1;
  for (int k = 0; k < u.modes(); ++k) {
    left[k] = u.at(0, 0)[k] - r[0] * u.at(1, 0)[k] - forcing.at(0)[k];
    right[k] = u.at(1, last)[k] - r[1] * u.at(0, last)[k] - forcing.at(1)[k];
  }
  if (model.boundary_gain() != 0.0) {
    const auto nl = tr.nonlocal_trace(u);
    for (int k = 0; k < u.modes(); ++k) right[k] -= model.boundary_gain() * nl.at(0)[k];
  }
  return res;
}

PeriodicField apply_A(const Transport& tr, double period, const PeriodicField& beta,
                      const PeriodicField& u) {
  PeriodicField out = tr.transport_derivative(period, u);
  out += multiply(beta, u);
  return out;
}

double functional_phi(const Transport& tr, const PeriodicField& beta, const PeriodicField& u_star,
                      const PeriodicField& u) {
  const auto au = apply_A(tr, 1.0, beta, u);
  double s = l2_inner(au, u_star);
  const int last = u.nodes() - 1;
  s += tr.model().speed(0, 0.0) * trig::mean_product(u.at(0, 0), u_star.at(0, 0));
  s -= tr.model().speed(1, 1.0) * trig::mean_product(u.at(1, last), u_star.at(1, last));
  return s;
}

}  // namespace hyperlock
