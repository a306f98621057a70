#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "qtrans/conslaw/pipeline.hpp"

using namespace qtrans;

namespace {

const PipelineResult& burgers_run() {
  static const PipelineResult r = pipeline(BVDatum::double_step(), FluxFunction::burgers(), 0.4);
  return r;
}

// u_δ by direct quadrature of the convolution, split at the jumps.
double mollified_ref(const BVDatum& d, double delta, double x) {
  auto rho = [&](double y) {
    const double t = y / delta;
    if (std::abs(t) >= 1) return 0.0;
    const double w = 1 - t * t;
    return 315.0 / 256.0 * w * w * w * w / delta;
  };
  std::vector<double> cuts{-delta, delta};
  for (const auto& s : d.u.segments())
    for (double b : {s.left, s.right})
      if (std::abs(x - b) < delta) cuts.push_back(x - b);
  std::sort(cuts.begin(), cuts.end());
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
    if (cuts[i + 1] > cuts[i])
      acc += d.u(x - 0.5 * (cuts[i] + cuts[i + 1])) * oracle::simpson(rho, cuts[i], cuts[i + 1], 400);
  return acc;
}

}  // namespace

TEST(Pipeline, ParametersFollowTheBudget) {
  const auto& r = burgers_run();
  const auto& rd = r.datum;
  EXPECT_DOUBLE_EQ(rd.delta, 0.4 / (2 * 4.0));
  EXPECT_DOUBLE_EQ(rd.R1, 1.0 + rd.delta);
  EXPECT_DOUBLE_EQ(rd.b, 1.0 + 2 * rd.delta);
  EXPECT_NEAR(rd.sigma, rd.lambda * 0.4 / (8 * std::pow(1.0 + 2 * rd.delta, 3)), 1e-15);
  EXPECT_LE(rd.theta, rd.delta / 4);
  const double w = rd.b - rd.R1;
  EXPECT_NEAR(rd.alpha2, rd.alpha1 + 3 * rd.alpha0 / w, 1e-15);
  EXPECT_NEAR(rd.alpha3, -6 * rd.alpha0 / (w * w), 1e-15);
}

TEST(Pipeline, BoundsHold) {
  const auto& r = burgers_run();
  EXPECT_LE(r.l1_error, 0.4);
  EXPECT_LE(r.l1_error, r.l1_budget);
  EXPECT_LE(r.sup_speed_error, r.sup_speed_budget);
  EXPECT_LE(static_cast<double>(r.inflections), r.theorem_bound);
  EXPECT_LE(static_cast<double>(r.inflections), r.inflection_bound);
  EXPECT_LT(r.gluing_max, 1e-9);
  EXPECT_LE(r.mollifier_l1, 4.0 * r.datum.delta);
  EXPECT_GE(r.support_lo, -r.datum.b);
  EXPECT_LE(r.support_hi, r.datum.b);
}

TEST(Pipeline, L1ErrorAgainstDenseTrapezoid) {
  const auto& r = burgers_run();
  const auto& rd = r.datum;
  const double l1 = oracle::trapezoid([&](double x) { return std::abs(rd.vbar(x) - rd.datum.u(x)); }, -rd.b - 0.1,
                                      rd.b + 0.1, 400000);
  EXPECT_NEAR(r.l1_error, l1, 2e-4);
}

TEST(Pipeline, SpeedCloseToMollifiedSpeed) {
  const auto& r = burgers_run();
  const auto& rd = r.datum;
  double worst = 0.0;
  for (int i = 0; i <= 2000; ++i) {
    const double x = -rd.b + 2 * rd.b * i / 2000.0;
    const double u = mollified_ref(rd.datum, rd.delta, x);
    worst = std::max(worst, std::abs(rd.F(x) - rd.flux.d1(u)));
  }
  EXPECT_LE(worst, r.sup_speed_budget * (1 + 1e-9));
}

TEST(Pipeline, DerivativesOfFAgree) {
  const auto& rd = burgers_run().datum;
  const double h = 1e-5;
  for (double x : {-1.02, -0.6, -0.03, 0.2, 0.97, 1.04, rd.R1 + 0.3 * rd.theta, rd.R2 + 0.01}) {
    for (int k = 1; k <= 2; ++k) {
      const double fd = (rd.F(x + h, k - 1) - rd.F(x - h, k - 1)) / (2 * h);
      EXPECT_NEAR(rd.F(x, k), fd, 2e-3 * (1 + std::abs(fd))) << x << " k=" << k;
    }
  }
}

TEST(Pipeline, InflectionsNotBelowDenseSignChanges) {
  const auto& r = burgers_run();
  const auto& rd = r.datum;
  const auto seen = oracle::sign_changes([&](double x) { return rd.F(x, 2); }, -rd.b, rd.b, 200001);
  EXPECT_GE(r.inflections, seen);
  EXPECT_GE(seen, 2);
}

TEST(Pipeline, VbarVanishesOutsideSupport) {
  const auto& rd = burgers_run().datum;
  for (double x : {-5.0, -rd.b, rd.b, 3.0}) EXPECT_EQ(rd.vbar(x), 0.0);
  EXPECT_NEAR(rd.vbar(-0.5), 1.0, 0.05);
  EXPECT_NEAR(rd.vbar(0.5), -1.0, 0.05);
}

TEST(ClosingPatch, HermiteConditionsAndClosedForm) {
  for (auto [a2, a3, th] : {std::tuple{1.0, -2.0, 0.1}, {-3e-4, 5e-2, 0.01}, {0.0, 1.0, 0.5}}) {
    const ClosingPatch g(1.0, th, a2, a3);
    EXPECT_NEAR(g(1.0), 0.0, 1e-15);
    EXPECT_NEAR(g(1.0, 1), a2, 1e-9 * (1 + std::abs(a2)));
    EXPECT_NEAR(g(1.0, 2), a3, 1e-9 * (1 + std::abs(a3)));
    for (int k = 0; k < 3; ++k) EXPECT_NEAR(g(1.0 + th, k), 0.0, 1e-9);
    // (x-R1)(x-R2)³(A + B(x-R1)) with A, B from the two conditions at R1.
    const double d = -th, A = a2 / (d * d * d), B = (a3 / 2 - 3 * d * d * A) / (d * d * d);
    for (int i = 0; i <= 10; ++i) {
      const double x = 1.0 + th * i / 10.0;
      const double ref = (x - 1.0) * std::pow(x - 1.0 - th, 3) * (A + B * (x - 1.0));
      EXPECT_NEAR(g(x), ref, 1e-12 * (1 + std::abs(a2) + std::abs(a3)));
    }
    EXPECT_EQ(g(0.5), 0.0);
  }
}

TEST(Pipeline, ZeroDatumIsTrivial) {
  const auto r = pipeline(BVDatum({}, 1.0, 1.0), FluxFunction::burgers(), 0.1);
  EXPECT_TRUE(r.datum.trivial);
  EXPECT_EQ(r.inflections, 0);
  EXPECT_EQ(r.datum.vbar(0.3), 0.0);
}

TEST(Pipeline, RejectsBudgetOutOfRange) {
  EXPECT_THROW(pipeline(BVDatum::double_step(), FluxFunction::burgers(), 0.0), DomainError);
  EXPECT_THROW(pipeline(BVDatum::double_step(), FluxFunction::burgers(), 1.5), DomainError);
}

TEST(Pipeline, CubicFlux) {
  const auto r = pipeline(BVDatum::double_step(), FluxFunction::cubic(), 0.4);
  EXPECT_LE(r.l1_error, 0.4);
  EXPECT_LT(r.gluing_max, 1e-9);
  EXPECT_LE(static_cast<double>(r.inflections), r.theorem_bound);
}
