#include <gtest/gtest.h>

#include <sstream>

#include "hyperlock/field.hpp"
#include "support.hpp"

using namespace hyperlock;

namespace {

PeriodicField constant_field(double c, int order = 6, int nodes = 17) {
  return PeriodicField::sample(2, order, make_grid(nodes), [c](double, double, double* o) {
    o[0] = c;
    o[1] = -c;
  });
}

}  // namespace

TEST(Field, ConstantEvaluatesEverywhere) {
  const auto u = constant_field(1.75);
  for (double t : {0.0, 0.31, 0.99})
    for (double x : {0.0, 0.123, 0.5, 1.0}) {
      const auto v = eval(u, t, x);
      EXPECT_NEAR(v[0], 1.75, 1e-14);
      EXPECT_NEAR(v[1], -1.75, 1e-14);
    }
}

TEST(Field, NodeEvaluationIsExact) {
  std::mt19937_64 rng(1);
  const auto u = test::random_field(rng, 2, 8, make_grid(33));
  for (int i = 0; i < u.nodes(); i += 4) {
    const double x = u.grid().node(i);
    EXPECT_EQ(eval(u, 0.37, x)[1], trig::evaluate(u.at(1, i), 0.37));
  }
}

TEST(Field, TravelingWaveInterpolation) {
  const auto u = PeriodicField::sample(1, 4, make_grid(65), [](double t, double x, double* o) {
    o[0] = std::sin(kTwoPi * (t - x));
  });
  EXPECT_NEAR(eval(u, 0.2, 0.37)[0], std::sin(kTwoPi * (-0.17)), 1e-6);
}

TEST(Field, EvalRejectsPointsOutsideInterval) {
  const auto u = constant_field(1.0);
  EXPECT_THROW(eval(u, 0.1, 1.5), std::out_of_range);
  EXPECT_THROW(eval(u, 0.1, -0.01), std::out_of_range);
}

TEST(Field, InnerProductOfCosines) {
  auto grid = make_grid(17);
  const auto c = PeriodicField::sample(2, 4, grid, [](double t, double, double* o) {
    o[0] = std::cos(kTwoPi * t);
    o[1] = 0;
  });
  const auto s = PeriodicField::sample(2, 4, grid, [](double t, double, double* o) {
    o[0] = std::sin(kTwoPi * t);
    o[1] = 0;
  });
  EXPECT_NEAR(l2_inner(c, c), 0.5, 1e-10);
  EXPECT_NEAR(l2_inner(c, s), 0.0, 1e-12);
}

TEST(FieldProperty, ShiftIsAGroupAction) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> phase(-2.0, 2.0);
  auto grid = make_grid(17);
  for (int n = 0; n < 100; ++n) {
    const auto u = test::random_field(rng, 2, 8, grid);
    const double a = phase(rng), b = phase(rng);
    EXPECT_LT(sup_norm(shift(shift(u, a), b) - shift(u, a + b)), 1e-12);
  }
}

TEST(FieldProperty, SupNormIsShiftInvariant) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> phase(0.0, 1.0);
  auto grid = make_grid(17);
  for (int n = 0; n < 100; ++n) {
    const auto u = test::random_field(rng, 2, 8, grid);
    EXPECT_NEAR(sup_norm(shift(u, phase(rng))), sup_norm(u), 1e-8 * std::max(1.0, sup_norm(u)));
  }
}

TEST(FieldProperty, InnerProductIsShiftInvariant) {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> phase(0.0, 1.0);
  auto grid = make_grid(17);
  for (int n = 0; n < 100; ++n) {
    const auto u = test::random_field(rng, 2, 8, grid);
    const auto v = test::random_field(rng, 2, 8, grid);
    const double p = phase(rng);
    EXPECT_NEAR(l2_inner(shift(u, p), shift(v, p)), l2_inner(u, v), 1e-10);
  }
}

TEST(FieldProperty, Parseval) {
  std::mt19937_64 rng(14);
  auto grid = make_grid(17);
  for (int n = 0; n < 100; ++n) {
    const auto u = test::random_field(rng, 2, 8, grid);
    EXPECT_GT(l2_inner(u, u), 0.0);
  }
  EXPECT_EQ(l2_inner(PeriodicField(2, 8, grid), PeriodicField(2, 8, grid)), 0.0);
}

TEST(Field, PackRoundTrip) {
  std::mt19937_64 rng(2);
  auto grid = make_grid(17);
  const auto u = test::random_field(rng, 2, 6, grid);
  const auto v = PeriodicField::unpack(u.pack(), 2, 6, grid);
  EXPECT_EQ(sup_norm(u - v), 0.0);
  const auto w = l2_weights(2, 6, *grid);
  EXPECT_NEAR((u.pack().array() * w.array() * u.pack().array()).sum(), l2_inner(u, u), 1e-12);
}

TEST(Field, CsvRoundTrip) {
  std::mt19937_64 rng(3);
  const auto u = test::random_field(rng, 2, 6, make_grid(17));
  std::stringstream ss;
  write_csv(ss, u);
  std::string header;
  std::getline(ss, header);
  EXPECT_NE(header.find("\"M\":6"), std::string::npos);
  EXPECT_NE(header.find("\"N_x\":17"), std::string::npos);
  ss.seekg(0);
  const auto v = read_csv(ss);
  EXPECT_LT(sup_norm(u - v), 1e-13);
}

TEST(Field, TimeDerivativeOfSine) {
  const auto u = PeriodicField::sample(1, 6, make_grid(9), [](double t, double x, double* o) {
    o[0] = std::sin(2 * kTwoPi * t) * (1 + x);
  });
  const auto du = u.time_derivative();
  EXPECT_NEAR(eval(du, 0.1, 0.5)[0], 1.5 * 2 * kTwoPi * std::cos(2 * kTwoPi * 0.1), 1e-10);
}

TEST(Field, XDerivativeAndCumulativeIntegral) {
  const auto u = PeriodicField::sample(1, 2, make_grid(33), [](double t, double x, double* o) {
    o[0] = std::cos(3 * x) * (1 + std::cos(kTwoPi * t));
  });
  const auto du = x_derivative(u);
  const auto left = cumulative_integral(u);
  const auto right = cumulative_integral(u, true);
  for (int i = 0; i < u.nodes(); ++i) {
    const double x = u.grid().node(i);
    EXPECT_NEAR(trig::evaluate(du.at(0, i), 0.0), -6 * std::sin(3 * x), 1e-8);
    EXPECT_NEAR(trig::evaluate(left.at(0, i), 0.0), 2 * std::sin(3 * x) / 3, 1e-8);
    EXPECT_NEAR(trig::evaluate(right.at(0, i), 0.0), 2 * (std::sin(3.0) - std::sin(3 * x)) / 3, 1e-8);
  }
}

TEST(Field, MinAbsFindsTheMinimum) {
  std::vector<cplx> m{2.0, cplx(0.5, 0.25), 0.0};
  // 2 + cos(2 pi t) - 0.5 sin(2 pi t), minimum 2 - sqrt(1.25)
  EXPECT_NEAR(trig::min_abs(m), 2 - std::sqrt(1.25), 1e-12);
}

TEST(Field, ResampleKeepsSmoothFields) {
  // six-point interpolation on h = 1/32: error of order h^6 max|d^6 u/dx^6|
  auto coarse = make_grid(33), fine = make_grid(65);
  const auto fn = [](double t, double x, double* o) { o[0] = std::sin(kTwoPi * t + x * x); };
  const auto u = PeriodicField::sample(1, 8, coarse, fn);
  const auto v = resample(u, 8, fine);
  EXPECT_LT(sup_norm(v - PeriodicField::sample(1, 8, fine, fn)), 1e-7);
}
