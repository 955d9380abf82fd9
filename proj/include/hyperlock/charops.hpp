#pragma once

#include <array>
#include <functional>
#include <span>
#include <vector>

#include "hyperlock/field.hpp"
#include "hyperlock/problem.hpp"

namespace hyperlock {

// Antiderivatives A_j(x) = int_0^x dz / a_j(z) of both speeds.
class Characteristics {
 public:
  Characteristics(std::array<std::function<double(double)>, 2> speeds, GridPtr grid);

  const XGrid& grid() const { return *grid_; }
  double speed(int j, double x) const { return speeds_[j](x); }
  double antiderivative(int j, double x) const;
  // alpha_j(x, y) = int_x^y dz / a_j(z)
  double alpha(int j, double x, double y) const {
    return antiderivative(j, y) - antiderivative(j, x);
  }

  double node_antiderivative(int j, int i) const { return node_A_[j][i]; }
  double quad_antiderivative(int j, int q) const { return quad_A_[j][q]; }
  double node_speed(int j, int i) const { return node_a_[j][i]; }
  double quad_speed(int j, int q) const { return quad_a_[j][q]; }

 private:
  std::array<std::function<double(double)>, 2> speeds_;
  GridPtr grid_;
  std::array<std::vector<double>, 2> node_A_, quad_A_, node_a_, quad_a_;
  std::array<std::vector<double>, 2> panel_integral_;
};

// The characteristic kernel c_j(t,x,y) = exp int_x^y beta_j(t + alpha_j(x,z)/T, z)/a_j(z) dz
// factorizes in the characteristic time s = t - A_j(x)/T as
// exp(G_j(s; y)) exp(-G_j(s; x)), where G_j(s; y) = int_0^y beta_j(s + A_j(z)/T, z)/a_j(z) dz.
// The tables hold samples of exp(+-G_j) at the nodes and the Gauss points.
class KernelTables {
 public:
  KernelTables(const Characteristics& ch, double period, const PeriodicField& beta, int samples);

  double period() const { return period_; }
  int samples() const { return samples_; }
  bool trivial() const { return trivial_; }
  // Fourier modes of G_j(.; y) at node i or Gauss point q.
  std::span<const cplx> node_exponent(int j, int i) const;
  std::span<const cplx> quad_exponent(int j, int q) const;
  // samples of exp(sign * G_j(s; .)) on s = n / samples
  std::span<const double> node_growth(int j, int i, int sign) const;
  std::span<const double> quad_growth(int j, int q, int sign) const;

 private:
  double period_;
  int samples_;
  int beta_modes_;
  bool trivial_;
  int nodes_, quads_;
  std::array<std::vector<cplx>, 2> node_G_, quad_G_;
  std::array<std::array<std::vector<double>, 2>, 2> node_exp_, quad_exp_;  // [j][sign>0]
  std::vector<double> ones_;
};

// Characteristic operators of one first-order model at one resolution.
class Transport {
 public:
  Transport(const FirstOrderModel& model, int order, GridPtr grid);

  const FirstOrderModel& model() const { return *model_; }
  int order() const { return order_; }
  const GridPtr& grid() const { return grid_; }
  int samples() const { return trig::sample_count(order_); }
  const Characteristics& characteristics() const { return chars_; }

  double alpha(int j, double x, double y) const { return chars_.alpha(j, x, y); }
  // Direct quadrature along the characteristic (independent of the tables).
  double kernel_c(int j, double t, double x, double y, double period,
                  const PeriodicField& beta) const;
  KernelTables kernels(double period, const PeriodicField& beta) const;

  // (r_1 u_2(.,0), r_2 u_1(.,1) + gain int_0^1 (u_1 - u_2)/a_2 dy)
  BoundarySignal apply_R(const PeriodicField& u) const;
  // int_0^1 (u_1 - u_2)/a_2 dy
  BoundarySignal nonlocal_trace(const PeriodicField& u) const;
  PeriodicField apply_C(const KernelTables& k, const BoundarySignal& w) const;
  PeriodicField apply_D(const KernelTables& k, const PeriodicField& u) const;
  PeriodicField apply_C(double period, const PeriodicField& beta, const BoundarySignal& w) const {
    return apply_C(kernels(period, beta), w);
  }
  PeriodicField apply_D(double period, const PeriodicField& beta, const PeriodicField& u) const {
    return apply_D(kernels(period, beta), u);
  }
  // B(beta, u) = beta u - b(eps, phi)[u]
  PeriodicField apply_B(const PeriodicField& beta, const PeriodicField& u, double eps = 0,
                        double phi = 0) const;
  // beta u - (db) w, the derivative of B in direction w.
  PeriodicField apply_dB(const PeriodicField& beta, const LinearCoefficients& db,
                         const PeriodicField& w) const;
  // (J v)(x) = 1/2 int_0^x (v_1 - v_2)/a_2 dy at the nodes (one component)
  PeriodicField partial_integral(const PeriodicField& v) const;
  // d_t u_j / T + a_j d_x u_j. The x-difference is taken on e^{2 pi i k A_j(x)/T} u_jk,
  // so pure transport along characteristics differentiates exactly.
  PeriodicField transport_derivative(double period, const PeriodicField& u) const;

 private:
  const FirstOrderModel* model_;
  int order_;
  GridPtr grid_;
  Characteristics chars_;
  std::vector<double> nonlocal_weights_;  // int_0^1 f/a_2 ~ sum_i w_i f(x_i)
};

// Pointwise product of each component of u with the matching component of c.
PeriodicField multiply(const PeriodicField& c, const PeriodicField& u);
// Pointwise product with sampled coefficients (layout of LinearCoefficients).
PeriodicField apply_coefficients(const LinearCoefficients& k, const PeriodicField& u,
                                 const PeriodicField* partial_integral);

// u - C(R u + eps S_phi^{-1} g(T)) - D(B(beta, u) + eps S_phi^{-1} f)
PeriodicField residual_abstract(const Transport& tr, double eps, double period,
                                const PeriodicField& beta, const PeriodicField& u,
                                double phi = 0);

struct PdeResidual {
  PeriodicField interior;
  BoundarySignal boundary;  // (left condition, right condition)
  double norm() const;
};
// d_t u_j / T + a_j d_x u_j + b_j(eps, phi)[u] - eps f_j(t - phi) and the
// boundary conditions, with Fourier derivatives in t and finite differences in x.
PdeResidual residual_pde(const Transport& tr, double eps, double period, const PeriodicField& u,
                         double phi = 0);

// A(T)u = d_t u_j / T + a_j d_x u_j + beta_j u_j
PeriodicField apply_A(const Transport& tr, double period, const PeriodicField& beta,
                      const PeriodicField& u);

// phi(u) = sum_j int int (A(1)u)_j u*_j + int a_1(0) u_1 u*_1 (t,0) - a_2(1) u_2 u*_2 (t,1) dt
double functional_phi(const Transport& tr, const PeriodicField& beta, const PeriodicField& u_star,
                      const PeriodicField& u);

}  // namespace hyperlock
