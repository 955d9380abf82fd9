#pragma once

#include <random>

#include "hyperlock/field.hpp"
#include "hyperlock/problem.hpp"

namespace hyperlock::test {

// Smooth random field: low modes only, geometric decay, smooth in x.
inline PeriodicField random_field(std::mt19937_64& rng, int components, int order,
                                  const GridPtr& grid, int active_modes = 4) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const int km = std::min(order, active_modes);
  std::vector<double> amp(components * (km + 1) * 3), freq(amp.size()), ph(amp.size());
  for (size_t n = 0; n < amp.size(); ++n) amp[n] = u(rng), freq[n] = 3 * u(rng), ph[n] = 3 * u(rng);
  PeriodicField f(components, order, grid);
  for (int j = 0; j < components; ++j)
    for (int i = 0; i < f.nodes(); ++i) {
      const double x = grid->node(i);
      auto m = f.at(j, i);
      for (int k = 0; k <= km; ++k) {
        cplx c = 0;
        for (int q = 0; q < 3; ++q) {
          const size_t n = (size_t(j) * (km + 1) + k) * 3 + q;
          c += amp[n] * std::polar(1.0, freq[n] * x + ph[n]);
        }
        c *= std::pow(0.5, k);
        if (k == 0) c = c.real();
        m[k] = c;
      }
    }
  return f;
}

inline BoundarySignal random_signal(std::mt19937_64& rng, int components, int order,
                                    int active_modes = 4) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  BoundarySignal s(components, order);
  for (int j = 0; j < components; ++j)
    for (int k = 0; k <= std::min(order, active_modes); ++k)
      s.at(j)[k] = k == 0 ? cplx(u(rng)) : std::pow(0.5, k) * cplx(u(rng), u(rng));
  return s;
}

inline void add_ellipse_forcing(SystemProblem& p) {
  p.f = [](double t, double x, double* o) {
    o[0] = std::cos(kTwoPi * t) * (1 + x);
    o[1] = 0.5 * std::sin(kTwoPi * t + 0.3) * x;
  };
  p.g = [](double t, double* o) {
    o[0] = std::sin(kTwoPi * t);
    o[1] = 0.2 * std::cos(2 * kTwoPi * t);
  };
}

inline void add_wave_forcing(SecondOrderProblem& p) {
  p.f = [](double t, double x) { return std::cos(kTwoPi * t) * x * (1 - x); };
  p.g1 = [](double t) { return 0.3 * std::sin(kTwoPi * t); };
  p.g2 = [](double t) { return 0.2 * std::cos(kTwoPi * t); };
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0;
  for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace hyperlock::test
