#pragma once

#include <array>
#include <complex>
#include <functional>
#include <iosfwd>
#include <memory>
#include <numbers>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace hyperlock {

using cplx = std::complex<double>;
inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Gauss-Legendre rule on [0,1].
struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};
const QuadratureRule& gauss_legendre(int points);

// Uniform nodes on [0,1] plus the interpolation, quadrature and
// difference tables every operator shares.
class XGrid {
 public:
  struct Stencil {
    int first = 0;
    int count = 0;
    std::array<double, 6> w{};
  };
  struct QuadPoint {
    double y = 0;
    double weight = 0;
    int panel = 0;
    Stencil stencil;
  };
  struct DiffRow {
    int first = 0;
    int count = 0;
    std::array<double, 9> w{};
  };

  // derivative_order: 4, 6 or 8; interpolation_points: 4 (cubic) or 6 (quintic).
  explicit XGrid(int nodes = 129, int derivative_order = 8, int interpolation_points = 6);

  int size() const { return n_; }
  double spacing() const { return 1.0 / (n_ - 1); }
  double node(int i) const { return static_cast<double>(i) / (n_ - 1); }

  // Lagrange stencil through consecutive nodes around y.
  Stencil stencil(double y) const;
  int interpolation_points() const { return points_; }
  // Four Gauss points per panel, panels in increasing order.
  std::span<const QuadPoint> quad() const { return quad_; }
  static constexpr int kPointsPerPanel = 4;
  // Integrates the piecewise interpolant: int_0^1 f ~ sum w_i f(x_i).
  std::span<const double> node_weights() const { return weights_; }
  // First-derivative stencil of the configured order, one-sided near the ends.
  DiffRow diff_row(int i) const { return diff_[i]; }
  int derivative_order() const { return order_; }

  bool operator==(const XGrid& o) const { return n_ == o.n_; }

 private:
  int n_;
  int order_;
  int points_;
  std::vector<DiffRow> diff_;
  std::vector<QuadPoint> quad_;
  std::vector<double> weights_;
};

using GridPtr = std::shared_ptr<const XGrid>;
GridPtr make_grid(int nodes, int derivative_order = 8, int interpolation_points = 6);

// Operations on one truncated Fourier series c_0..c_M of a real
// 1-periodic function u(t) = sum_{|k|<=M} c_k e^{2 pi i k t}.
namespace trig {

// Pseudo-spectral sample count for order M (exact for cubic products).
int sample_count(int order);
void to_samples(std::span<const cplx> modes, std::span<double> samples);
// Projects samples onto modes 0..modes.size()-1.
void from_samples(std::span<const double> samples, std::span<cplx> modes);
void shift(std::span<cplx> modes, double phi);
double evaluate(std::span<const cplx> modes, double t);
double evaluate_derivative(std::span<const cplx> modes, double t);
// int_0^1 u v dt
double mean_product(std::span<const cplx> u, std::span<const cplx> v);
// max |u(t)| over `samples` equispaced points
double max_abs(std::span<const cplx> modes, int samples);
// min |u(t)|: dense scan refined by golden-section search
double min_abs(std::span<const cplx> modes);

}  // namespace trig

// Time-periodic signal with one or two components (boundary data and traces).
class BoundarySignal {
 public:
  BoundarySignal() = default;
  BoundarySignal(int components, int order);
  static BoundarySignal sample(int components, int order,
                               const std::function<void(double t, double* out)>& fn);

  int components() const { return ncomp_; }
  int order() const { return order_; }
  std::span<cplx> at(int comp) { return {data_.data() + comp * (order_ + 1), size_t(order_ + 1)}; }
  std::span<const cplx> at(int comp) const {
    return {data_.data() + comp * (order_ + 1), size_t(order_ + 1)};
  }
  double eval(int comp, double t) const { return trig::evaluate(at(comp), t); }
  BoundarySignal time_derivative() const;

  BoundarySignal& operator+=(const BoundarySignal& o);
  BoundarySignal& operator-=(const BoundarySignal& o);
  BoundarySignal& operator*=(double s);

 private:
  int ncomp_ = 0;
  int order_ = 0;
  std::vector<cplx> data_;
};

BoundarySignal operator+(BoundarySignal a, const BoundarySignal& b);
BoundarySignal operator-(BoundarySignal a, const BoundarySignal& b);
BoundarySignal operator*(double s, BoundarySignal a);
BoundarySignal shift(const BoundarySignal& w, double phi);
double sup_norm(const BoundarySignal& w);

// Fourier modes in t at every x-node, one or two components.
class PeriodicField {
 public:
  PeriodicField() = default;
  PeriodicField(int components, int order, GridPtr grid);
  static PeriodicField sample(int components, int order, GridPtr grid,
                              const std::function<void(double t, double x, double* out)>& fn);

  int components() const { return ncomp_; }
  int order() const { return order_; }
  int modes() const { return order_ + 1; }
  const XGrid& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const { return grid_; }
  int nodes() const { return grid_->size(); }

  std::span<cplx> at(int comp, int node) {
    return {data_.data() + index(comp, node), size_t(order_ + 1)};
  }
  std::span<const cplx> at(int comp, int node) const {
    return {data_.data() + index(comp, node), size_t(order_ + 1)};
  }
  std::vector<cplx>& data() { return data_; }
  const std::vector<cplx>& data() const { return data_; }

  BoundarySignal trace(int comp, int node) const;
  PeriodicField component(int comp) const;
  PeriodicField time_derivative() const;
  // Same grid, order changed by truncation or zero padding.
  PeriodicField with_order(int order) const;

  // Real packing: per (comp, node) [Re c0, Re c1, Im c1, ..., Re cM, Im cM].
  Eigen::VectorXd pack() const;
  static PeriodicField unpack(const Eigen::Ref<const Eigen::VectorXd>& v, int components, int order,
                              GridPtr grid);
  static int packed_size(int components, int order, int nodes) {
    return components * nodes * (2 * order + 1);
  }

  PeriodicField& operator+=(const PeriodicField& o);
  PeriodicField& operator-=(const PeriodicField& o);
  PeriodicField& operator*=(double s);

 private:
  size_t index(int comp, int node) const {
    return (size_t(comp) * grid_->size() + node) * (order_ + 1);
  }
  void require_compatible(const PeriodicField& o) const;

  int ncomp_ = 0;
  int order_ = 0;
  GridPtr grid_;
  std::vector<cplx> data_;
};

PeriodicField operator+(PeriodicField a, const PeriodicField& b);
PeriodicField operator-(PeriodicField a, const PeriodicField& b);
PeriodicField operator*(double s, PeriodicField a);

PeriodicField shift(const PeriodicField& u, double phi);
// Sampling density used by sup_norm for a field of the given order.
int sup_norm_samples(int order);
double sup_norm(const PeriodicField& u);
double l2_inner(const PeriodicField& u, const PeriodicField& v);
// Weights w with l2_inner(u, v) = sum_n pack(u)_n w_n pack(v)_n.
Eigen::VectorXd l2_weights(int components, int order, const XGrid& grid);
std::vector<double> eval(const PeriodicField& u, double t, double x);
// Fourier modes of u(., x) at an arbitrary x by Lagrange interpolation.
std::vector<cplx> interpolate_modes(const PeriodicField& u, int comp, double x);
// Transfers u to another grid and order (Lagrange interpolation in x).
PeriodicField resample(const PeriodicField& u, int order, GridPtr grid);
// x-derivative at the nodes using the grid's difference stencils.
PeriodicField x_derivative(const PeriodicField& u);
// int_0^x u dy, or int_x^1 u dy when from_right, at the nodes.
PeriodicField cumulative_integral(const PeriodicField& u, bool from_right = false);

// CSV: one JSON header line, then 4M rows of t-samples, one column per
// (component, node).
void write_csv(std::ostream& os, const PeriodicField& u);
PeriodicField read_csv(std::istream& is);

}  // namespace hyperlock
