#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "oracles.hpp"
#include "qtrans/conslaw/flux.hpp"
#include "qtrans/conslaw/mollifier.hpp"

using namespace qtrans;

namespace {

double kernel_ref(double t) {
  if (std::abs(t) >= 1) return 0.0;
  const double w = 1 - t * t;
  return 315.0 / 256.0 * w * w * w * w;
}

// u_δ(x) = ∫ ū(x - y) ρ_δ(y) dy by Simpson over [-δ, δ], split where ū jumps.
double convolve_ref(const BVDatum& d, double delta, double x) {
  std::vector<double> cuts{-delta, delta};
  for (const auto& s : d.u.segments())
    for (double b : {s.left, s.right})
      if (std::abs(x - b) < delta) cuts.push_back(x - b);
  std::sort(cuts.begin(), cuts.end());
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double a = cuts[i], b = cuts[i + 1];
    if (b <= a) continue;
    const double v = d.u(x - 0.5 * (a + b));
    acc += v * oracle::simpson([&](double y) { return kernel_ref(y / delta) / delta; }, a, b, 2000);
  }
  return acc;
}

BVDatum sample_datum(int k) {
  switch (k % 4) {
    case 0: return BVDatum::double_step();
    case 1: return BVDatum({{-0.5, 0.5, 1.0}}, 1.0, 2.0);
    case 2: return BVDatum({{-1.0, -0.2, 0.5}, {-0.2, 0.3, -1.0}, {0.3, 0.9, 0.25}}, 1.0, 4.0);
    default: return BVDatum({{-2.0, -1.0, 2.0}, {-1.0, 1.0, 1.0}, {1.0, 2.0, -0.5}}, 2.0, 6.0);
  }
}

}  // namespace

TEST(Kernel, UnitMassAndCdf) {
  EXPECT_NEAR(oracle::simpson(kernel_ref, -1, 1, 2000), 1.0, 1e-12);
  for (double t : {-0.9, -0.3, 0.0, 0.4, 0.95})
    EXPECT_NEAR(mollifier::cdf(t), oracle::simpson(kernel_ref, -1, t, 4000), 1e-12) << t;
  EXPECT_EQ(mollifier::cdf(-2), 0.0);
  EXPECT_EQ(mollifier::cdf(2), 1.0);
}

TEST(Kernel, DerivativesMatchDifferences) {
  const double h = 1e-5;
  for (int k = 1; k <= 3; ++k)
    for (double t : {-0.8, -0.35, 0.1, 0.5, 0.77}) {
      const double fd = (mollifier::rho(k - 1, t + h) - mollifier::rho(k - 1, t - h)) / (2 * h);
      EXPECT_NEAR(mollifier::rho(k, t), fd, 1e-6 * (1 + std::abs(fd))) << k << " " << t;
    }
  EXPECT_THROW(mollifier::rho(4, 0.0), DomainError);
}

TEST(Kernel, DerivativeBoundsDominateKernelSup) {
  // |u_δ^{(k)}| <= V sup|ρ^{(k-1)}| δ^{-k}.
  const double V = 3.0, delta = 0.2;
  const auto b = mollifier::derivative_bounds(V, delta);
  for (int k = 1; k <= 3; ++k) {
    double s = 0.0;
    for (int i = 0; i <= 200000; ++i) s = std::max(s, std::abs(mollifier::rho(k - 1, -1 + i / 100000.0)));
    EXPECT_GE(b[k - 1], V * s * std::pow(delta, -k) * (1 - 1e-12)) << k;
  }
}

class Mollify : public ::testing::TestWithParam<std::tuple<int, double>> {};

TEST_P(Mollify, MatchesConvolutionAndBounds) {
  const auto [which, delta] = GetParam();
  const auto d = sample_datum(which);
  const auto u = mollify(d, delta);
  for (double x : {-1.3, -0.95, -0.5, -0.21, 0.0, 0.07, 0.3, 0.88, 1.05})
    EXPECT_NEAR(u(x), convolve_ref(d, delta, x), 1e-9) << x;
  const double h = 1e-6 * delta;
  for (double x : {-0.95, -0.21, 0.07, 0.88})
    for (int k = 1; k <= 3; ++k) {
      const double fd = (u(x + h, k - 1) - u(x - h, k - 1)) / (2 * h);
      EXPECT_NEAR(u(x, k), fd, 1e-4 * (1 + std::abs(fd))) << k << " " << x;
    }
  const double l1 = oracle::trapezoid([&](double x) { return std::abs(u(x) - d.u(x)); }, u.support_lo(),
                                      u.support_hi(), 400000);
  EXPECT_NEAR(u.l1_error(), l1, 1e-5);
  EXPECT_LE(u.l1_error(), d.V * delta);
  const auto s = u.sampled_derivative_norms(20001);
  const auto b = mollifier::derivative_bounds(d.V, delta);
  for (int k = 0; k < 3; ++k) EXPECT_LE(s[k], b[k]) << k;
  EXPECT_EQ(u(u.support_lo() - 1e-9), 0.0);
  EXPECT_EQ(u(u.support_hi() + 1e-9), 0.0);
}

INSTANTIATE_TEST_SUITE_P(Data, Mollify,
                         ::testing::Combine(::testing::Range(0, 4), ::testing::Values(0.05, 0.1, 0.25)));

TEST(Datum, ParseHeadersAndDefaults) {
  std::istringstream in("# two steps\nR = 1\n-1 0 1\n0 1 -1  # right\n");
  const auto d = BVDatum::parse(in);
  EXPECT_EQ(d.R, 1.0);
  EXPECT_EQ(d.V, 4.0);
  EXPECT_EQ(d.u(-0.5), 1.0);
  EXPECT_EQ(d.u(0.5), -1.0);
  EXPECT_EQ(d.u(2.0), 0.0);
  EXPECT_DOUBLE_EQ(d.u.total_variation(), 4.0);
}

TEST(Datum, Rejects) {
  std::istringstream a("R=0.5\n-1 0 1\n");
  EXPECT_THROW(BVDatum::parse(a), DomainError);
  std::istringstream b("V=1\n-1 0 1\n");
  EXPECT_THROW(BVDatum::parse(b), DomainError);
  std::istringstream c("Q=1\n");
  EXPECT_THROW(BVDatum::parse(c), DomainError);
  std::istringstream e("-1 x 1\n");
  EXPECT_THROW(BVDatum::parse(e), DomainError);
  EXPECT_THROW(mollify(BVDatum::double_step(), 0.0), DomainError);
}

TEST(Datum, Antiderivative) {
  const auto d = BVDatum::double_step();
  // Measured from 0.
  EXPECT_DOUBLE_EQ(d.u.antiderivative(-1.0), -1.0);
  EXPECT_DOUBLE_EQ(d.u.antiderivative(-0.25), -0.25);
  EXPECT_DOUBLE_EQ(d.u.antiderivative(0.0), 0.0);
  EXPECT_DOUBLE_EQ(d.u.antiderivative(0.5), -0.5);
  EXPECT_DOUBLE_EQ(d.u.antiderivative(3.0), -1.0);
}

class Flux : public ::testing::TestWithParam<const char*> {};

TEST_P(Flux, DerivativesConsistent) {
  const auto f = FluxFunction::parse(GetParam());
  const double h = 1e-5;
  for (double u : {-1.5, -0.4, 0.0, 0.6, 1.7})
    for (int k = 1; k <= (f.has_d4() ? 4 : 3); ++k) {
      const double fd = (f.derivative(k - 1, u + h) - f.derivative(k - 1, u - h)) / (2 * h);
      EXPECT_NEAR(f.derivative(k, u), fd, 1e-6 * (1 + std::abs(fd))) << GetParam() << " k=" << k << " u=" << u;
    }
}

TEST_P(Flux, InverseSpeedAndConjugate) {
  const auto f = FluxFunction::parse(GetParam());
  const double a = -2, b = 2;
  for (double v : {-1.9, -0.7, 0.0, 0.3, 1.6}) {
    const double q = f.d1(v);
    EXPECT_NEAR(f.inverse_derivative(q, a, b), v, 1e-12);
    // Legendre identity at the touching point.
    EXPECT_NEAR(f.conjugate(q, a, b), q * v - f.f(v), 1e-11);
  }
  if (!f.has_closed_inverse()) EXPECT_THROW(f.inverse_derivative(f.d1(b) + 1.0, a, b), RangeError);
  if (f.name() == "exp") EXPECT_THROW(f.inverse_derivative(-1.0, a, b), RangeError);
}

INSTANTIATE_TEST_SUITE_P(Fluxes, Flux, ::testing::Values("burgers", "cubic", "exp", "poly:1,0.3,0.05"));

TEST(FluxNorms, BurgersAndCubic) {
  const auto f = FluxFunction::burgers();
  EXPECT_DOUBLE_EQ(f.norm(3, -2, 2), 2.0);
  EXPECT_DOUBLE_EQ(f.convexity(-2, 2), 1.0);
  const auto c = FluxFunction::cubic();
  EXPECT_NEAR(c.convexity(-2, 2), 0.6, 1e-15);
  EXPECT_THROW(FluxFunction::parse("quartic"), DomainError);
  EXPECT_THROW(FluxFunction::parse("poly:1,2"), DomainError);
  EXPECT_DOUBLE_EQ(c.norm(4, -1, 1), c.norm(3, -1, 1));
}
