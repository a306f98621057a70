#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "qtrans/conslaw/lax_oleinik.hpp"
#include "qtrans/conslaw/pipeline.hpp"

using namespace qtrans;

namespace {

// Burgers with χ_{[-1,0]} - χ_{[0,1]}: stationary shock at 0 between two
// rarefaction fans that reach it at t = 1.
double double_step_exact(double t, double x) {
  if (x <= -1 || x >= 1) return 0.0;
  if (x < 0) return x < -1 + t ? std::min((x + 1) / t, 1.0) : 1.0;
  return x > 1 - t ? std::max((x - 1) / t, -1.0) : -1.0;
}

}  // namespace

TEST(Riemann, BurgersShock) {
  const auto s = EntropySolution::riemann(FluxFunction::burgers(), 1.0, 0.0);
  for (double t : {0.5, 1.0, 2.0}) {
    for (double x : {-1.0, -0.3, 0.1, t / 2 - 0.01, t / 2 + 0.01, 0.9 * t + 0.5})
      EXPECT_NEAR(s(t, x), oracle::burgers_riemann(1.0, 0.0, t, x), 1e-9) << t << " " << x;
    const auto sh = s.shocks(t, -1.0, 2.0, 600);
    ASSERT_EQ(sh.size(), 1u);
    EXPECT_NEAR(sh[0].x, t / 2, 1e-9);
    EXPECT_NEAR(sh[0].u_minus, 1.0, 1e-6);
    EXPECT_NEAR(sh[0].u_plus, 0.0, 1e-6);
  }
}

TEST(Riemann, BurgersRarefaction) {
  const auto s = EntropySolution::riemann(FluxFunction::burgers(), -0.5, 1.0);
  for (double t : {0.25, 1.0})
    for (int i = 0; i <= 40; ++i) {
      const double x = -1.0 + 3.0 * i / 40;
      EXPECT_NEAR(s(t, x), oracle::burgers_riemann(-0.5, 1.0, t, x), 1e-7) << t << " " << x;
    }
  EXPECT_EQ(s.count_shocks(1.0, -2.0, 2.0, 400), 0);
}

TEST(Riemann, CubicFluxShockMovesAtHugoniotSpeed) {
  const auto f = FluxFunction::cubic();
  const double uL = 1.5, uR = -0.5;
  const auto s = EntropySolution::riemann(f, uL, uR);
  const double speed = (f.f(uL) - f.f(uR)) / (uL - uR);
  EXPECT_DOUBLE_EQ(s.rh_speed(uL, uR), speed);
  for (double t : {0.5, 2.0}) {
    const auto sh = s.shocks(t, -2.0, 3.0, 250);
    ASSERT_EQ(sh.size(), 1u);
    EXPECT_NEAR(sh[0].x, speed * t, 1e-8);
  }
}

TEST(DoubleStep, MatchesExactSolution) {
  const auto s = EntropySolution::from_piecewise(FluxFunction::burgers(), BVDatum::double_step().u);
  for (double t : {0.3, 1.0, 2.5})
    for (int i = 0; i <= 60; ++i) {
      const double x = -1.5 + 3.0 * i / 60 + 1e-3;
      EXPECT_NEAR(s(t, x), double_step_exact(t, x), 1e-7) << t << " " << x;
    }
  EXPECT_EQ(s.count_shocks(0.5, -2, 2, 800), 1);
  EXPECT_LE(oleinik_violation(s, 0.7, -2, 2, 4000, 11), 1e-6);
}

TEST(TwoBumps, ShocksMerge) {
  const auto u = PiecewiseConstant({{-2.0, -1.0, 1.0}, {0.0, 1.0, 1.0}});
  const auto s = EntropySolution::from_piecewise(FluxFunction::burgers(), u);
  EXPECT_EQ(s.count_shocks(0.5, -3, 3, 1200), 2);
  // After the merge a single triangle of mass 2: shock at -2 + 2√t.
  const double t = 40.0;
  const auto sh = s.shocks(t, s.support_lo(t), s.support_hi(t), 4000);
  ASSERT_EQ(sh.size(), 1u);
  EXPECT_NEAR(sh[0].x, -2 + 2 * std::sqrt(t), 1e-2);
}

TEST(Scan, TracksRiemannShock) {
  const auto s = EntropySolution::riemann(FluxFunction::burgers(), 1.0, -1.0, 0.25);
  const auto sol = EntropySolution::from_piecewise(FluxFunction::burgers(),
                                                   PiecewiseConstant({{-1.0, 0.25, 1.0}, {0.25, 1.0, -1.0}}));
  const auto scan = shock_generation_scan(sol, geometric_times(0.05, 0.6, 16), 800);
  EXPECT_EQ(scan.curves.size(), 1u);
  EXPECT_EQ(scan.speed_failures, 0);
  EXPECT_EQ(scan.entropy_violations, 0);
  EXPECT_EQ(scan.max_simultaneous, 1);
  for (double x : scan.curves[0].x) EXPECT_NEAR(x, 0.25, 1e-6);
  EXPECT_NEAR(s(0.5, 0.2), 1.0, 1e-7);
}

TEST(Times, Geometric) {
  const auto t = geometric_times(0.1, 10.0, 3);
  ASSERT_EQ(t.size(), 3u);
  EXPECT_DOUBLE_EQ(t[0], 0.1);
  EXPECT_NEAR(t[1], 1.0, 1e-15);
  EXPECT_NEAR(t[2], 10.0, 1e-14);
  EXPECT_THROW(geometric_times(0.0, 1.0), DomainError);
  EXPECT_THROW(geometric_times(2.0, 1.0), DomainError);
}

TEST(EntropySolution, RejectsBadInput) {
  EXPECT_THROW(EntropySolution::riemann(FluxFunction::polynomial(-1, 0, 0), 1, 0), DomainError);
  const auto s = EntropySolution::riemann(FluxFunction::burgers(), 1, 0);
  EXPECT_THROW(s(0.0, 0.0), DomainError);
  EXPECT_THROW(s.shocks(1.0, 0.0, 0.0, 10), DomainError);
}

TEST(Reconstruction, L1ContractionAgainstExact) {
  // ‖u(t) - ũ(t)‖₁ <= ‖ū - v̄‖₁ <= ε for entropy solutions.
  const auto p = pipeline(BVDatum::double_step(), FluxFunction::burgers(), 0.4);
  const auto s = EntropySolution::from_reconstruction(p.datum, (1 << 14) + 1);
  for (double t : {0.5, 2.0}) {
    const double d = oracle::trapezoid([&](double x) { return std::abs(s(t, x) - double_step_exact(t, x)); },
                                       -1.5 - t, 1.5 + t, 3000);
    EXPECT_LE(d, p.l1_error + 1e-3) << t;
  }
  EXPECT_EQ(s.count_shocks(1.0, -2, 2, 1000), 1);
  EXPECT_EQ(characteristic_folds(p.datum, 0.01), 0);
  EXPECT_GE(characteristic_folds(p.datum, 1.0), 1);
}
