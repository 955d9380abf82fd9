#include "hyperlock/field.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>

#include "json.hpp"

namespace hyperlock {

// ---------------------------------------------------------------------------
// quadrature

namespace {

QuadratureRule build_gauss_legendre(int n) {
  QuadratureRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    double z = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double dp = 0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1, p1 = 0;
      for (int k = 1; k <= n; ++k) {
        double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * k - 1) * z * p1 - (k - 1.0) * p2) / k;
      }
      dp = n * (z * p0 - p1) / (z * z - 1);
      double dz = p0 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    // map [-1,1] -> [0,1], ascending
    rule.nodes[n - 1 - i] = 0.5 * (1 + z);
    rule.weights[n - 1 - i] = 1.0 / ((1 - z * z) * dp * dp);
  }
  return rule;
}

}  // namespace

const QuadratureRule& gauss_legendre(int points) {
  static std::mutex mu;
  static std::map<int, QuadratureRule> cache;
  std::lock_guard lock(mu);
  auto it = cache.find(points);
  if (it == cache.end()) it = cache.emplace(points, build_gauss_legendre(points)).first;
  return it->second;
}

// ---------------------------------------------------------------------------
// XGrid

namespace {

// Fornberg's recursion for first-derivative weights at z over nodes xs.
std::vector<double> derivative_weights(double z, const std::vector<double>& xs) {
  const int n = static_cast<int>(xs.size());
  std::vector<std::array<double, 2>> c(n, {0.0, 0.0});
  double c1 = 1, c4 = xs[0] - z;
  c[0][0] = 1;
  for (int i = 1; i < n; ++i) {
    const int mn = std::min(i, 1);
    double c2 = 1;
    const double c5 = c4;
    c4 = xs[i] - z;
    for (int j = 0; j < i; ++j) {
      const double c3 = xs[i] - xs[j];
      c2 *= c3;
      if (j == i - 1) {
        for (int k = mn; k >= 1; --k) c[i][k] = c1 * (k * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
        c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
      }
      for (int k = mn; k >= 1; --k) c[j][k] = (c4 * c[j][k] - k * c[j][k - 1]) / c3;
      c[j][0] = c4 * c[j][0] / c3;
    }
    c1 = c2;
  }
  std::vector<double> w(n);
  for (int i = 0; i < n; ++i) w[i] = c[i][1];
  return w;
}

}  // namespace

XGrid::XGrid(int nodes, int derivative_order, int interpolation_points)
    : n_(nodes), order_(derivative_order), points_(interpolation_points) {
  if (derivative_order != 4 && derivative_order != 6 && derivative_order != 8)
    throw std::invalid_argument("XGrid: derivative order must be 4, 6 or 8");
  if (interpolation_points != 4 && interpolation_points != 6)
    throw std::invalid_argument("XGrid: interpolation uses 4 or 6 points");
  if (nodes < std::max(derivative_order + 1, interpolation_points))
    throw std::invalid_argument("XGrid: too few nodes");
  const auto& gl = gauss_legendre(kPointsPerPanel);
  const double h = spacing();
  weights_.assign(n_, 0.0);
  quad_.reserve(size_t(n_ - 1) * kPointsPerPanel);
  for (int p = 0; p + 1 < n_; ++p) {
    for (int q = 0; q < kPointsPerPanel; ++q) {
      QuadPoint pt;
      pt.y = node(p) + h * gl.nodes[q];
      pt.weight = h * gl.weights[q];
      pt.panel = p;
      pt.stencil = stencil(pt.y);
      for (int s = 0; s < pt.stencil.count; ++s)
        weights_[pt.stencil.first + s] += pt.weight * pt.stencil.w[s];
      quad_.push_back(pt);
    }
  }
  const int width = order_ + 1;
  diff_.resize(n_);
  for (int i = 0; i < n_; ++i) {
    DiffRow& row = diff_[i];
    row.first = std::clamp(i - order_ / 2, 0, n_ - width);
    row.count = width;
    // offsets in units of h keep the weights exact for symmetric stencils
    std::vector<double> xs(width);
    for (int s = 0; s < width; ++s) xs[s] = row.first + s;
    const auto w = derivative_weights(i, xs);
    for (int s = 0; s < width; ++s) row.w[s] = w[s] / spacing();
  }
}

XGrid::Stencil XGrid::stencil(double y) const {
  const double h = spacing();
  int first = static_cast<int>(std::floor(y / h)) - (points_ / 2 - 1);
  first = std::clamp(first, 0, n_ - points_);
  Stencil st;
  st.first = first;
  st.count = points_;
  for (int s = 0; s < points_; ++s) {
    double w = 1;
    const double xs = node(first + s);
    for (int r = 0; r < points_; ++r) {
      if (r == s) continue;
      w *= (y - node(first + r)) / (xs - node(first + r));
    }
    st.w[s] = w;
  }
  return st;
}

GridPtr make_grid(int nodes, int derivative_order, int interpolation_points) {
  return std::make_shared<const XGrid>(nodes, derivative_order, interpolation_points);
}

// ---------------------------------------------------------------------------
// FFT plumbing

namespace trig {

namespace {

std::mutex& planner_mutex() {
  static std::mutex mu;
  return mu;
}

struct Plan {
  int n = 0;
  double* real = nullptr;
  fftw_complex* spec = nullptr;
  fftw_plan r2c = nullptr;
  fftw_plan c2r = nullptr;

  explicit Plan(int size) : n(size) {
    std::lock_guard lock(planner_mutex());
    real = fftw_alloc_real(n);
    spec = fftw_alloc_complex(n / 2 + 1);
    r2c = fftw_plan_dft_r2c_1d(n, real, spec, FFTW_ESTIMATE);
    c2r = fftw_plan_dft_c2r_1d(n, spec, real, FFTW_ESTIMATE);
  }
  Plan(const Plan&) = delete;
  Plan& operator=(const Plan&) = delete;
  ~Plan() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(r2c);
    fftw_destroy_plan(c2r);
    fftw_free(real);
    fftw_free(spec);
  }
};

Plan& plan_for(int n) {
  thread_local std::unordered_map<int, std::unique_ptr<Plan>> plans;
  auto& p = plans[n];
  if (!p) p = std::make_unique<Plan>(n);
  return *p;
}

}  // namespace

int sample_count(int order) { return 4 * order + 4; }

void to_samples(std::span<const cplx> modes, std::span<double> samples) {
  const int n = static_cast<int>(samples.size());
  Plan& p = plan_for(n);
  const int half = n / 2;
  for (int k = 0; k <= half; ++k) {
    cplx c = 0;
    if (k < static_cast<int>(modes.size())) c = modes[k];
    // the Nyquist mode folds c_k and c_{-k} into one real coefficient
    if (k == half && n % 2 == 0 && k != 0) c = cplx(2 * c.real(), 0.0);
    p.spec[k][0] = c.real();
    p.spec[k][1] = c.imag();
  }
  p.spec[0][1] = 0;
  fftw_execute(p.c2r);
  std::copy(p.real, p.real + n, samples.begin());
}

void from_samples(std::span<const double> samples, std::span<cplx> modes) {
  const int n = static_cast<int>(samples.size());
  Plan& p = plan_for(n);
  std::copy(samples.begin(), samples.end(), p.real);
  fftw_execute(p.r2c);
  const int half = n / 2;
  for (int k = 0; k < static_cast<int>(modes.size()); ++k) {
    if (k > half) {
      modes[k] = 0;
      continue;
    }
    cplx c(p.spec[k][0] / n, p.spec[k][1] / n);
    if (k == half && n % 2 == 0 && k != 0) c *= 0.5;
    modes[k] = c;
  }
  if (!modes.empty()) modes[0] = cplx(modes[0].real(), 0.0);
}

void shift(std::span<cplx> modes, double phi) {
  for (size_t k = 1; k < modes.size(); ++k) modes[k] *= std::polar(1.0, kTwoPi * double(k) * phi);
}

double evaluate(std::span<const cplx> modes, double t) {
  if (modes.empty()) return 0;
  double s = 0;
  const cplx step = std::polar(1.0, kTwoPi * t);
  cplx e = step;
  for (size_t k = 1; k < modes.size(); ++k) {
    s += (modes[k] * e).real();
    e *= step;
    if (k % 16 == 0) e = std::polar(1.0, kTwoPi * double(k + 1) * t);
  }
  return modes[0].real() + 2 * s;
}

double evaluate_derivative(std::span<const cplx> modes, double t) {
  double s = 0;
  for (size_t k = 1; k < modes.size(); ++k) {
    const cplx ik(0.0, kTwoPi * double(k));
    s += (ik * modes[k] * std::polar(1.0, kTwoPi * double(k) * t)).real();
  }
  return 2 * s;
}

double mean_product(std::span<const cplx> u, std::span<const cplx> v) {
  const size_t n = std::min(u.size(), v.size());
  if (n == 0) return 0;
  double s = 0;
  for (size_t k = 1; k < n; ++k) s += u[k].real() * v[k].real() + u[k].imag() * v[k].imag();
  return u[0].real() * v[0].real() + 2 * s;
}

double max_abs(std::span<const cplx> modes, int samples) {
  std::vector<double> buf(samples);
  to_samples(modes, buf);
  double m = 0;
  for (double x : buf) m = std::max(m, std::abs(x));
  return m;
}

// min over t of |f(t)| for a trig polynomial f: dense scan plus golden-section polish.
double min_abs(std::span<const cplx> modes) {
  constexpr int kScan = 1024;
  auto g = [&](double t) { return std::abs(trig::evaluate(modes, t)); };
  int best = 0;
  double best_v = g(0.0);
  for (int i = 1; i < kScan; ++i) {
    const double v = g(double(i) / kScan);
    if (v < best_v) best_v = v, best = i;
  }
  double lo = double(best - 1) / kScan, hi = double(best + 1) / kScan;
  const double r = (std::sqrt(5.0) - 1) / 2;
  double c = hi - r * (hi - lo), d = lo + r * (hi - lo);
  double gc = g(c), gd = g(d);
  while (hi - lo > 1e-13) {
    if (gc < gd) {
      hi = d, d = c, gd = gc;
      c = hi - r * (hi - lo), gc = g(c);
    } else {
      lo = c, c = d, gc = gd;
      d = lo + r * (hi - lo), gd = g(d);
    }
  }
  return std::min({best_v, gc, gd});
}

}  // namespace trig

// ---------------------------------------------------------------------------
// BoundarySignal

BoundarySignal::BoundarySignal(int components, int order)
    : ncomp_(components), order_(order), data_(size_t(components) * (order + 1)) {
  if (components < 1 || components > 2 || order < 0)
    throw std::invalid_argument("BoundarySignal: bad shape");
}

BoundarySignal BoundarySignal::sample(int components, int order,
                                      const std::function<void(double, double*)>& fn) {
  BoundarySignal w(components, order);
  const int n = trig::sample_count(order);
  std::vector<std::vector<double>> s(components, std::vector<double>(n));
  double out[2];
  for (int i = 0; i < n; ++i) {
    fn(double(i) / n, out);
    for (int j = 0; j < components; ++j) s[j][i] = out[j];
  }
  for (int j = 0; j < components; ++j) trig::from_samples(s[j], w.at(j));
  return w;
}

BoundarySignal BoundarySignal::time_derivative() const {
  BoundarySignal d = *this;
  for (int j = 0; j < ncomp_; ++j) {
    auto m = d.at(j);
    for (int k = 0; k <= order_; ++k) m[k] *= cplx(0.0, kTwoPi * k);
  }
  return d;
}

BoundarySignal& BoundarySignal::operator+=(const BoundarySignal& o) {
  if (o.ncomp_ != ncomp_ || o.order_ != order_) throw std::invalid_argument("signal shape mismatch");
  for (size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
  return *this;
}

BoundarySignal& BoundarySignal::operator-=(const BoundarySignal& o) {
  if (o.ncomp_ != ncomp_ || o.order_ != order_) throw std::invalid_argument("signal shape mismatch");
  for (size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
  return *this;
}

BoundarySignal& BoundarySignal::operator*=(double s) {
  for (auto& c : data_) c *= s;
  return *this;
}

BoundarySignal operator+(BoundarySignal a, const BoundarySignal& b) { return a += b; }
BoundarySignal operator-(BoundarySignal a, const BoundarySignal& b) { return a -= b; }
BoundarySignal operator*(double s, BoundarySignal a) { return a *= s; }

BoundarySignal shift(const BoundarySignal& w, double phi) {
  BoundarySignal r = w;
  for (int j = 0; j < r.components(); ++j) trig::shift(r.at(j), phi);
  return r;
}

namespace {

// Only sampled peaks above this fraction of the largest sample are refined. With
// samples 1/(8M) apart, a degree-M polynomial drops at most (pi/8)^2/2 < 8% of
// its maximum between the true peak and the nearest sample.
constexpr double kPeakShortlist = 0.8;

// max |f| on [t0 - h, t0 + h] by golden-section search.
double refine_peak(std::span<const cplx> modes, double t0, double h) {
  constexpr double kInv = 0.6180339887498949;
  auto g = [&](double t) { return std::abs(trig::evaluate(modes, t)); };
  double a = t0 - h, b = t0 + h;
  double c = b - kInv * (b - a), d = a + kInv * (b - a);
  double gc = g(c), gd = g(d);
  for (int it = 0; it < 60; ++it) {
    if (gc > gd) b = d, d = c, gd = gc, c = b - kInv * (b - a), gc = g(c);
    else a = c, c = d, gc = gd, d = a + kInv * (b - a), gd = g(d);
  }
  return std::max({gc, gd, g(t0)});
}

}  // namespace

double sup_norm(const BoundarySignal& w) {
  const int n = sup_norm_samples(w.order());
  std::vector<double> buf(n);
  double m = 0;
  for (int j = 0; j < w.components(); ++j) {
    trig::to_samples(w.at(j), buf);
    double sampled = 0;
    for (double x : buf) sampled = std::max(sampled, std::abs(x));
    m = std::max(m, sampled);
    for (int s = 0; s < n; ++s) {
      const double v = std::abs(buf[s]);
      if (v >= kPeakShortlist * sampled && v >= std::abs(buf[(s + n - 1) % n]) &&
          v >= std::abs(buf[(s + 1) % n]))
        m = std::max(m, refine_peak(w.at(j), double(s) / n, 1.0 / n));
    }
  }
  return m;
}

// ---------------------------------------------------------------------------
// PeriodicField

PeriodicField::PeriodicField(int components, int order, GridPtr grid)
    : ncomp_(components), order_(order), grid_(std::move(grid)) {
  if (components < 1 || components > 2 || order < 0 || !grid_)
    throw std::invalid_argument("PeriodicField: bad shape");
  data_.assign(size_t(components) * grid_->size() * (order + 1), cplx(0));
}

PeriodicField PeriodicField::sample(int components, int order, GridPtr grid,
                                    const std::function<void(double, double, double*)>& fn) {
  PeriodicField u(components, order, grid);
  const int n = trig::sample_count(order);
  std::vector<std::vector<double>> s(components, std::vector<double>(n));
  double out[2];
  for (int i = 0; i < grid->size(); ++i) {
    const double x = grid->node(i);
    for (int k = 0; k < n; ++k) {
      fn(double(k) / n, x, out);
      for (int j = 0; j < components; ++j) s[j][k] = out[j];
    }
    for (int j = 0; j < components; ++j) trig::from_samples(s[j], u.at(j, i));
  }
  return u;
}

BoundarySignal PeriodicField::trace(int comp, int node) const {
  BoundarySignal w(1, order_);
  auto src = at(comp, node);
  std::copy(src.begin(), src.end(), w.at(0).begin());
  return w;
}

PeriodicField PeriodicField::component(int comp) const {
  PeriodicField r(1, order_, grid_);
  for (int i = 0; i < nodes(); ++i) {
    auto src = at(comp, i);
    std::copy(src.begin(), src.end(), r.at(0, i).begin());
  }
  return r;
}

PeriodicField PeriodicField::time_derivative() const {
  PeriodicField d = *this;
  for (int j = 0; j < ncomp_; ++j)
    for (int i = 0; i < nodes(); ++i) {
      auto m = d.at(j, i);
      for (int k = 0; k <= order_; ++k) m[k] *= cplx(0.0, kTwoPi * k);
    }
  return d;
}

PeriodicField PeriodicField::with_order(int order) const {
  PeriodicField r(ncomp_, order, grid_);
  const int keep = std::min(order, order_) + 1;
  for (int j = 0; j < ncomp_; ++j)
    for (int i = 0; i < nodes(); ++i) std::copy_n(at(j, i).begin(), keep, r.at(j, i).begin());
  return r;
}

Eigen::VectorXd PeriodicField::pack() const {
  const int m = 2 * order_ + 1;
  Eigen::VectorXd v(packed_size(ncomp_, order_, nodes()));
  for (int j = 0; j < ncomp_; ++j)
    for (int i = 0; i < nodes(); ++i) {
      auto c = at(j, i);
      double* out = v.data() + (size_t(j) * nodes() + i) * m;
      out[0] = c[0].real();
      for (int k = 1; k <= order_; ++k) {
        out[2 * k - 1] = c[k].real();
        out[2 * k] = c[k].imag();
      }
    }
  return v;
}

PeriodicField PeriodicField::unpack(const Eigen::Ref<const Eigen::VectorXd>& v, int components,
                                    int order, GridPtr grid) {
  PeriodicField u(components, order, grid);
  const int m = 2 * order + 1;
  if (v.size() != packed_size(components, order, grid->size()))
    throw std::invalid_argument("unpack: size mismatch");
  for (int j = 0; j < components; ++j)
    for (int i = 0; i < grid->size(); ++i) {
      auto c = u.at(j, i);
      const double* in = v.data() + (size_t(j) * grid->size() + i) * m;
      c[0] = in[0];
      for (int k = 1; k <= order; ++k) c[k] = cplx(in[2 * k - 1], in[2 * k]);
    }
  return u;
}

void PeriodicField::require_compatible(const PeriodicField& o) const {
  if (o.ncomp_ != ncomp_ || o.order_ != order_ || !(*o.grid_ == *grid_))
    throw std::invalid_argument("field shape or grid mismatch");
}

PeriodicField& PeriodicField::operator+=(const PeriodicField& o) {
  require_compatible(o);
  for (size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
  return *this;
}

PeriodicField& PeriodicField::operator-=(const PeriodicField& o) {
  require_compatible(o);
  for (size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
  return *this;
}

PeriodicField& PeriodicField::operator*=(double s) {
  for (auto& c : data_) c *= s;
  return *this;
}

PeriodicField operator+(PeriodicField a, const PeriodicField& b) { return a += b; }
PeriodicField operator-(PeriodicField a, const PeriodicField& b) { return a -= b; }
PeriodicField operator*(double s, PeriodicField a) { return a *= s; }

PeriodicField shift(const PeriodicField& u, double phi) {
  PeriodicField r = u;
  std::vector<cplx> rot(u.modes());
  for (int k = 0; k < u.modes(); ++k) rot[k] = std::polar(1.0, kTwoPi * k * phi);
  for (int j = 0; j < u.components(); ++j)
    for (int i = 0; i < u.nodes(); ++i) {
      auto m = r.at(j, i);
      for (int k = 1; k < u.modes(); ++k) m[k] *= rot[k];
    }
  return r;
}

int sup_norm_samples(int order) { return std::max(8 * order, 16); }

double sup_norm(const PeriodicField& u) {
  const int n = sup_norm_samples(u.order());
  std::vector<double> buf(n);
  std::vector<std::array<int, 3>> peaks;  // (comp, node, sample)
  std::vector<double> peak_values;
  double sampled = 0;
  for (int j = 0; j < u.components(); ++j)
    for (int i = 0; i < u.nodes(); ++i) {
      trig::to_samples(u.at(j, i), buf);
      for (int s = 0; s < n; ++s) {
        const double v = std::abs(buf[s]);
        sampled = std::max(sampled, v);
        if (v >= std::abs(buf[(s + n - 1) % n]) && v >= std::abs(buf[(s + 1) % n])) {
          peaks.push_back({j, i, s});
          peak_values.push_back(v);
        }
      }
    }
  double m = sampled;
  for (size_t k = 0; k < peaks.size(); ++k)
    if (peak_values[k] >= kPeakShortlist * sampled) {
      const auto [j, i, s] = peaks[k];
      m = std::max(m, refine_peak(u.at(j, i), double(s) / n, 1.0 / n));
    }
  return m;
}

double l2_inner(const PeriodicField& u, const PeriodicField& v) {
  if (u.components() != v.components() || !(u.grid() == v.grid()))
    throw std::invalid_argument("l2_inner: grid mismatch");
  const auto w = u.grid().node_weights();
  double s = 0;
  for (int j = 0; j < u.components(); ++j)
    for (int i = 0; i < u.nodes(); ++i) s += w[i] * trig::mean_product(u.at(j, i), v.at(j, i));
  return s;
}

Eigen::VectorXd l2_weights(int components, int order, const XGrid& grid) {
  const int m = 2 * order + 1;
  Eigen::VectorXd w(PeriodicField::packed_size(components, order, grid.size()));
  const auto nw = grid.node_weights();
  for (int j = 0; j < components; ++j)
    for (int i = 0; i < grid.size(); ++i) {
      double* out = w.data() + (size_t(j) * grid.size() + i) * m;
      out[0] = nw[i];
      for (int r = 1; r < m; ++r) out[r] = 2 * nw[i];
    }
  return w;
}

std::vector<cplx> interpolate_modes(const PeriodicField& u, int comp, double x) {
  if (!(x >= 0.0 && x <= 1.0)) throw std::out_of_range("x outside [0,1]");
  std::vector<cplx> m(u.modes(), cplx(0));
  const XGrid& g = u.grid();
  const double pos = x / g.spacing();
  const int nearest = static_cast<int>(std::lround(pos));
  if (std::abs(pos - nearest) < 1e-12) {
    auto src = u.at(comp, nearest);
    std::copy(src.begin(), src.end(), m.begin());
    return m;
  }
  const auto st = g.stencil(x);
  for (int s = 0; s < st.count; ++s) {
    auto src = u.at(comp, st.first + s);
    for (int k = 0; k < u.modes(); ++k) m[k] += st.w[s] * src[k];
  }
  return m;
}

std::vector<double> eval(const PeriodicField& u, double t, double x) {
  std::vector<double> out(u.components());
  for (int j = 0; j < u.components(); ++j) out[j] = trig::evaluate(interpolate_modes(u, j, x), t);
  return out;
}

PeriodicField resample(const PeriodicField& u, int order, GridPtr grid) {
  PeriodicField r(u.components(), order, grid);
  const int keep = std::min(order, u.order()) + 1;
  for (int j = 0; j < u.components(); ++j)
    for (int i = 0; i < grid->size(); ++i) {
      auto m = interpolate_modes(u, j, grid->node(i));
      std::copy_n(m.begin(), keep, r.at(j, i).begin());
    }
  return r;
}

PeriodicField x_derivative(const PeriodicField& u) {
  PeriodicField d(u.components(), u.order(), u.grid_ptr());
  for (int j = 0; j < u.components(); ++j)
    for (int i = 0; i < u.nodes(); ++i) {
      const auto row = u.grid().diff_row(i);
      auto out = d.at(j, i);
      for (int s = 0; s < row.count; ++s) {
        auto src = u.at(j, row.first + s);
        for (int k = 0; k < u.modes(); ++k) out[k] += row.w[s] * src[k];
      }
    }
  return d;
}

PeriodicField cumulative_integral(const PeriodicField& u, bool from_right) {
  PeriodicField out(u.components(), u.order(), u.grid_ptr());
  const auto quad = u.grid().quad();
  const int per = XGrid::kPointsPerPanel, last = u.nodes() - 1;
  std::vector<cplx> acc(u.modes());
  for (int j = 0; j < u.components(); ++j) {
    std::fill(acc.begin(), acc.end(), cplx(0));
    for (int step = 1; step <= last; ++step) {
      const int panel = from_right ? last - step : step - 1;
      for (int r = 0; r < per; ++r) {
        const auto& qp = quad[panel * per + r];
        for (int s = 0; s < qp.stencil.count; ++s) {
          auto src = u.at(j, qp.stencil.first + s);
          const double w = qp.weight * qp.stencil.w[s];
          for (int k = 0; k < u.modes(); ++k) acc[k] += w * src[k];
        }
      }
      const int node = from_right ? panel : panel + 1;
      std::copy(acc.begin(), acc.end(), out.at(j, node).begin());
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// serialization

namespace {
int csv_rows(int order) { return std::max(4 * order, 4); }
}  // namespace

void write_csv(std::ostream& os, const PeriodicField& u) {
  nlohmann::json header = {{"M", u.order()},
                           {"N_x", u.nodes()},
                           {"n_components", u.components()},
                           {"rows", csv_rows(u.order())}};
  os << header.dump() << "\n";
  const int n = csv_rows(u.order());
  std::vector<std::vector<double>> cols;
  for (int j = 0; j < u.components(); ++j)
    for (int i = 0; i < u.nodes(); ++i) {
      std::vector<double> c(n);
      trig::to_samples(u.at(j, i), c);
      cols.push_back(std::move(c));
    }
  os << std::setprecision(17);
  for (int r = 0; r < n; ++r) {
    for (size_t c = 0; c < cols.size(); ++c) {
      if (c) os << ',';
      os << cols[c][r];
    }
    os << "\n";
  }
}

PeriodicField read_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("field csv: missing header");
  const auto header = nlohmann::json::parse(line);
  const int order = header.at("M").get<int>();
  const int nx = header.at("N_x").get<int>();
  const int nc = header.at("n_components").get<int>();
  const int n = csv_rows(order);
  std::vector<std::vector<double>> cols(size_t(nc) * nx, std::vector<double>(n));
  for (int r = 0; r < n; ++r) {
    if (!std::getline(is, line))
      throw std::runtime_error("field csv: expected " + std::to_string(n) + " rows, got " +
                               std::to_string(r));
    std::stringstream ss(line);
    std::string cell;
    for (size_t c = 0; c < cols.size(); ++c) {
      if (!std::getline(ss, cell, ','))
        throw std::runtime_error("field csv: short row " + std::to_string(r + 2));
      cols[c][r] = std::stod(cell);
    }
  }
  PeriodicField u(nc, order, make_grid(nx));
  for (int j = 0; j < nc; ++j)
    for (int i = 0; i < nx; ++i) trig::from_samples(cols[size_t(j) * nx + i], u.at(j, i));
  return u;
}

}  // namespace hyperlock
