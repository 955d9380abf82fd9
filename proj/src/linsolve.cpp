#include "hyperlock/linsolve.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace hyperlock {

namespace {

constexpr int kLoopSamples = 1024;

std::pair<double, double> extremes(std::span<const cplx> modes) {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (int i = 0; i < kLoopSamples; ++i) {
    const double v = trig::evaluate(modes, double(i) / kLoopSamples);
    lo = std::min(lo, v), hi = std::max(hi, v);
  }
  return {lo, hi};
}

// Scalar maps between the two boundary traces built from the kernel tables:
// to_right(w) = (C_1 w)(., 1), to_left(w) = (C_2 w)(., 0), and their inverses.
class BoundaryMaps {
 public:
  BoundaryMaps(const Transport& tr, const KernelTables& kt, int order)
      : tr_(tr), kt_(kt), order_(order), last_(tr.grid()->size() - 1),
        a1_(tr.characteristics().node_antiderivative(0, last_) / kt.period()),
        a2_(tr.characteristics().node_antiderivative(1, last_) / kt.period()),
        buf_(kt.samples()) {}

  BoundarySignal to_right(const BoundarySignal& w) const {
    return transform(w, 0.0, kt_.node_growth(0, last_, -1), -a1_);
  }
  BoundarySignal to_left(const BoundarySignal& w) const {
    return transform(w, a2_, kt_.node_growth(1, last_, +1), 0.0);
  }
  BoundarySignal from_right(const BoundarySignal& w) const {
    return transform(w, a1_, kt_.node_growth(0, last_, +1), 0.0);
  }
  BoundarySignal from_left(const BoundarySignal& w) const {
    return transform(w, 0.0, kt_.node_growth(1, last_, -1), -a2_);
  }

  // Loop multiplier exponent G_2(s; 1) - G_1(s + (A_2(1) - A_1(1))/T; 1) as modes.
  std::vector<cplx> loop_exponent() const {
    std::vector<cplx> out(std::max<int>(order_, 1) + 1, cplx(0));
    if (kt_.trivial()) return out;
    auto g2 = kt_.node_exponent(1, last_), g1 = kt_.node_exponent(0, last_);
    std::vector<cplx> s1(g1.begin(), g1.end());
    trig::shift(s1, a2_ - a1_);
    out.assign(g2.size(), cplx(0));
    for (size_t k = 0; k < g2.size(); ++k) out[k] = g2[k] - s1[k];
    return out;
  }

 private:
  BoundarySignal transform(const BoundarySignal& w, double pre, std::span<const double> growth,
                           double post) const {
    BoundarySignal out(1, order_);
    std::vector<cplx> m(w.at(0).begin(), w.at(0).end());
    m.resize(order_ + 1);
    trig::shift(m, pre);
    if (!kt_.trivial()) {
      trig::to_samples(m, buf_);
      for (size_t s = 0; s < buf_.size(); ++s) buf_[s] *= growth[s];
      trig::from_samples(buf_, m);
    }
    trig::shift(m, post);
    std::copy(m.begin(), m.end(), out.at(0).begin());
    return out;
  }

  const Transport& tr_;
  const KernelTables& kt_;
  int order_;
  int last_;
  double a1_, a2_;
  mutable std::vector<double> buf_;
};

double sup(const BoundarySignal& w) { return sup_norm(w); }

}  // namespace

const char* to_string(InversionRoute r) {
  switch (r) {
    case InversionRoute::Contract: return "contract";
    case InversionRoute::Inverted: return "inverted";
    case InversionRoute::None: break;
  }
  return "none";
}

NonResonanceReport nonresonance(const Transport& tr, const PeriodicField& beta, double period) {
  const auto& ch = tr.characteristics();
  const XGrid& g = *tr.grid();
  const auto r = tr.model().reflections();
  const int modes = beta.modes();
  // I_0(t) = int beta_1(t - alpha_1(x,1)/T, x)/a_1 - beta_2(t - alpha_2(x,1)/T, x)/a_2 dx
  // I_1(t) = int beta_1(t + alpha_1(0,x)/T, x)/a_1 - beta_2(t + alpha_2(0,x)/T, x)/a_2 dx
  std::array<std::vector<cplx>, 2> loop{std::vector<cplx>(modes), std::vector<cplx>(modes)};
  const auto quad = g.quad();
  const int last = g.size() - 1;
  std::vector<cplx> m(modes);
  for (size_t q = 0; q < quad.size(); ++q) {
    for (int j = 0; j < 2; ++j) {
      std::fill(m.begin(), m.end(), cplx(0));
      const auto& st = quad[q].stencil;
      for (int s = 0; s < st.count; ++s) {
        auto src = beta.at(j, st.first + s);
        for (int k = 0; k < modes; ++k) m[k] += st.w[s] * src[k];
      }
      const double sign = (j == 0 ? 1.0 : -1.0) * quad[q].weight / ch.quad_speed(j, q);
      const double aq = ch.quad_antiderivative(j, q);
      auto m0 = m, m1 = m;
      trig::shift(m0, -(ch.node_antiderivative(j, last) - aq) / period);
      trig::shift(m1, aq / period);
      for (int k = 0; k < modes; ++k) {
        loop[0][k] += sign * m0[k];
        loop[1][k] += sign * m1[k];
      }
    }
  }
  NonResonanceReport rep;
  const double prod = std::abs(r[0] * r[1]);
  for (int c = 0; c < 2; ++c) {
    if (prod == 0) {
      rep.margin[c] = std::numeric_limits<double>::infinity();
      rep.satisfied[c] = true;
      rep.route[c] = InversionRoute::Contract;
      continue;
    }
    // log|r1 r2| - I_c(t), whose sign decides the route
    std::vector<cplx> d(modes);
    for (int k = 0; k < modes; ++k) d[k] = -loop[c][k];
    d[0] += std::log(prod);
    rep.margin[c] = trig::min_abs(d);
    rep.satisfied[c] = rep.margin[c] > rep.tolerance;
    const auto [lo, hi] = extremes(d);
    if (c == 0) {
      rep.c_minus = std::exp(lo);
      rep.c_plus = std::exp(hi);
    }
    if (rep.satisfied[c]) rep.route[c] = hi < 0 ? InversionRoute::Contract : InversionRoute::Inverted;
  }
  return rep;
}

NonResonanceReport check_nonres_sys(const SystemProblem& p, const PeriodicField& u0) {
  SystemModel model(p);
  Transport tr(model, u0.order(), u0.grid_ptr());
  return nonresonance(tr, beta0(p, u0), 1.0);
}

BoundarySignal apply_reflections(const Transport& tr, const PeriodicField& u) {
  const auto r = tr.model().reflections();
  BoundarySignal w(2, u.order());
  const int last = u.nodes() - 1;
  for (int k = 0; k < u.modes(); ++k) {
    w.at(0)[k] = r[0] * u.at(1, 0)[k];
    w.at(1)[k] = r[1] * u.at(0, last)[k];
  }
  return w;
}

FunctionalEquationSolve solve_I_minus_CR(const Transport& tr, double period,
                                         const PeriodicField& beta, const PeriodicField& f,
                                         const InversionOptions& opts) {
  if (!(period > 0)) throw std::invalid_argument("solve_I_minus_CR: period must be positive");
  if (f.components() != 2) throw std::invalid_argument("solve_I_minus_CR: f needs 2 components");
  const auto r = tr.model().reflections();
  const int order = f.order();
  const int last = f.nodes() - 1;

  int condition = opts.condition;
  if (condition < 0) {
    const auto rep = nonresonance(tr, beta, period);
    if (!rep.any()) throw LinsolveError("non-resonant inversion unavailable");
    condition = rep.margin[1] > rep.margin[0] && rep.satisfied[1] ? 1 : 0;
  }

  const auto kt = tr.kernels(period, beta);
  const BoundaryMaps maps(tr, kt, order);
  const double prod = r[0] * r[1];

  // multiplier |r1 r2| exp(loop exponent) decides the direction of iteration
  FunctionalEquationSolve out;
  out.condition = condition;
  double factor = 0;
  if (prod == 0) {
    out.route = InversionRoute::Contract;
  } else {
    const auto [lo, hi] = extremes(maps.loop_exponent());
    const double lp = std::log(std::abs(prod));
    if (lp + hi < 0) {
      out.route = InversionRoute::Contract;
      factor = std::exp(lp + hi);
    } else if (lp + lo > 0) {
      out.route = InversionRoute::Inverted;
      factor = std::exp(-(lp + lo));
    } else {
      throw LinsolveError("non-resonant inversion unavailable");
    }
  }
  out.contraction_factor = factor;

  const BoundarySignal f1_right = f.trace(0, last), f2_left = f.trace(1, 0);
  // condition 0: unknown u_2(., 0); condition 1: unknown u_1(., 1)
  auto forward = [&](const BoundarySignal& x) {
    return condition == 0 ? maps.to_left(maps.to_right(x)) : maps.to_right(maps.to_left(x));
  };
  auto backward = [&](const BoundarySignal& x) {
    return condition == 0 ? maps.from_right(maps.from_left(x)) : maps.from_left(maps.from_right(x));
  };
  BoundarySignal h = condition == 0 ? r[1] * maps.to_left(f1_right) + f2_left
                                    : r[0] * maps.to_right(f2_left) + f1_right;

  const double tol = opts.tolerance;
  const int cap = factor > 0 ? 10 * static_cast<int>(std::ceil(std::log(tol) / std::log(factor))) + 10 : 10;
  BoundarySignal x = h;
  int it = 0;
  if (prod != 0 && sup(h) > 0) {
    for (;;) {
      BoundarySignal next = out.route == InversionRoute::Contract
                                ? prod * forward(x) + h
                                : (1.0 / prod) * backward(x - h);
      const double step = sup(next - x);
      x = std::move(next);
      ++it;
      // a-posteriori error bound factor/(1-factor) * step, kept well below tol
      if (factor / (1 - factor) * step <= 0.01 * tol || step == 0) break;
      if (it >= cap)
        throw LinsolveError("functional equation: iteration cap " + std::to_string(cap) +
                            " exceeded (contraction factor " + std::to_string(factor) + ")");
    }
  } else {
    it = 1;
  }
  out.iterations = it;

  BoundarySignal left = x, right = x;
  if (condition == 0) right = r[0] * maps.to_right(x) + f1_right;
  else left = r[1] * maps.to_left(x) + f2_left;
  BoundarySignal w(2, order);
  for (int k = 0; k <= order; ++k) {
    w.at(0)[k] = r[0] * left.at(0)[k];
    w.at(1)[k] = r[1] * right.at(0)[k];
  }
  out.solution = tr.apply_C(kt, w) + f;
  out.residual = sup_norm(out.solution - tr.apply_C(kt, apply_reflections(tr, out.solution)) - f);
  return out;
}

PeriodicField apply_linearized(const Transport& tr, const KernelTables& kt,
                               const PeriodicField& beta, const LinearCoefficients& db,
                               const PeriodicField& w) {
  return w - tr.apply_C(kt, tr.apply_R(w)) - tr.apply_D(kt, tr.apply_dB(beta, db, w));
}

PeriodicField apply_linearized(const Transport& tr, double period, const PeriodicField& beta,
                               const LinearCoefficients& db, const PeriodicField& w) {
  return apply_linearized(tr, tr.kernels(period, beta), beta, db, w);
}

Eigen::MatrixXd assemble_linearized(const Transport& tr, const KernelTables& kt,
                                    const PeriodicField& beta, const LinearCoefficients& db) {
  const int order = tr.order();
  const auto& grid = tr.grid();
  const int n = PeriodicField::packed_size(2, order, grid->size());
  Eigen::MatrixXd a(n, n);
  Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
  for (int c = 0; c < n; ++c) {
    e[c] = 1;
    const auto col = PeriodicField::unpack(e, 2, order, grid);
    a.col(c) = apply_linearized(tr, kt, beta, db, col).pack();
    e[c] = 0;
  }
  return a;
}

SmallSingular smallest_singular(const Eigen::MatrixXd& a, int count, double tol,
                                int max_iterations) {
  const int n = static_cast<int>(a.rows());
  if (a.cols() != n) throw std::invalid_argument("smallest_singular: matrix must be square");
  const int block = std::min(n, count + 6);
  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
  // deterministic start
  Eigen::MatrixXd x(n, block);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < block; ++j) x(i, j) = std::sin(1.0 + 0.7 * i + 1.3 * j * j + 0.1 * i * j);
  SmallSingular out;
  Eigen::VectorXd prev = Eigen::VectorXd::Constant(count, -1);
  for (int it = 1; it <= max_iterations; ++it) {
    Eigen::MatrixXd y = lu.transpose().solve(x);
    y = lu.solve(y);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(y);
    Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, block);
    const Eigen::MatrixXd b = a * q;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(b, Eigen::ComputeThinV);
    // JacobiSVD sorts descending
    const Eigen::VectorXd s = svd.singularValues().reverse();
    const Eigen::MatrixXd v = svd.matrixV().rowwise().reverse();
    x = q * v;
    out.iterations = it;
    const Eigen::VectorXd cur = s.head(count);
    // measured against the largest requested value: the smallest may sit at roundoff
    const double change = (cur - prev).cwiseAbs().maxCoeff() / std::max(cur.maxCoeff(), 1e-300);
    prev = cur;
    if (change < tol && it > 2) break;
  }
  Eigen::MatrixXd q = x;
  const Eigen::MatrixXd b = a * q;
  out.values.resize(count);
  out.vectors = q.leftCols(count);
  for (int j = 0; j < count; ++j) out.values[j] = b.col(j).norm() / q.col(j).norm();
  return out;
}

}  // namespace hyperlock
