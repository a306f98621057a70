#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "qtrans/functions.hpp"
#include "qtrans/io.hpp"

using namespace qtrans;

namespace {

std::size_t count(const std::string& s, const std::string& needle) {
  std::size_t n = 0;
  for (auto p = s.find(needle); p != std::string::npos; p = s.find(needle, p + 1)) ++n;
  return n;
}

}  // namespace

TEST(FormatDouble, ShortestRoundTrip) {
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_EQ(format_double(1.0 / 3.0), "0.3333333333333333");
  EXPECT_EQ(format_double(-2.0), "-2");
  EXPECT_EQ(format_double(std::nan("")), "nan");
  EXPECT_EQ(format_double(-kInf), "-inf");
  for (double v : {1e-300, 123456.789, std::nextafter(1.0, 2.0)}) EXPECT_EQ(std::stod(format_double(v)), v);
}

TEST(Csv, HeaderAndRows) {
  std::ostringstream o;
  {
    CsvWriter w(o, {"x", "y"});
    w.row({0.5, -1});
    EXPECT_THROW(w.row({1.0}), DomainError);
  }
  EXPECT_EQ(o.str(), "x,y\n0.5,-1\n");
}

TEST(Plot, OnePolylineAndLegend) {
  const auto svg = emit_plot({{"a<b", {0, 1, 2}, {0, 1, 4}, false}}, {"t", "x", "y", 320, 200});
  EXPECT_EQ(count(svg, "<polyline"), 1u);
  EXPECT_EQ(count(svg, "<circle"), 0u);
  EXPECT_NE(svg.find("a&lt;b"), std::string::npos);
  EXPECT_EQ(svg.rfind("</svg>\n"), svg.size() - 7);
}

TEST(Plot, ScatterSkipsNonFinite) {
  const auto svg = emit_plot({{"", {0, 1, 2}, {1, std::nan(""), 3}, true}});
  EXPECT_EQ(count(svg, "<circle"), 2u);
}

TEST(Plot, Rejects) {
  EXPECT_THROW(emit_plot({}), DomainError);
  EXPECT_THROW(emit_plot({{"", {0, 1}, {0}, false}}), DomainError);
  EXPECT_THROW(emit_plot({{"", {std::nan("")}, {0}, false}}), DomainError);
}

TEST(Specs, ScalarFunctions) {
  EXPECT_DOUBLE_EQ(scalar_function("linear:2,-1")(0.75), 0.5);
  EXPECT_NEAR(scalar_function("sin:1")(0.25), 1.0, 1e-15);
  EXPECT_NEAR(scalar_function("sin:2,0.5,0")(0.125), 0.5, 1e-15);
  EXPECT_DOUBLE_EQ(scalar_function("sqrt")(0.25), 0.5);
  EXPECT_DOUBLE_EQ(scalar_function("poly:1,0,3")(2.0), 13.0);
  EXPECT_DOUBLE_EQ(scalar_function("sharp:2")(0.0625), 0.0625);
  for (const char* bad : {"linear:1", "sin", "sqrt:1", "poly:a", "nope:1", "sharp:9"})
    EXPECT_THROW(scalar_function(bad), DomainError) << bad;
}

TEST(Specs, LipschitzFunctionsAreLipschitz) {
  for (int seed = 1; seed <= 20; ++seed) {
    const auto f = lipschitz_test_function(seed);
    double worst = 0.0;
    for (int i = 0; i < 20000; ++i) worst = std::max(worst, std::abs(f((i + 1) / 20000.0) - f(i / 20000.0)) * 20000.0);
    EXPECT_LE(worst, 4.0 + 1e-9) << seed;
    EXPECT_EQ(f(0.3), lipschitz_test_function(seed)(0.3));
  }
  EXPECT_NE(lipschitz_test_function(1)(0.3), lipschitz_test_function(2)(0.3));
}

TEST(Specs, FieldsAndManifolds) {
  const auto g = make_function("field:vortex", 17);
  EXPECT_EQ(g.dim(), 2);
  EXPECT_EQ(g.out_dim(), 2);
  EXPECT_THROW(make_function("field:nope", 17), DomainError);
  EXPECT_EQ(make_function("linear:1,0", 33).dim(), 1);
  EXPECT_EQ(make_manifold("zero", 2).m(), 2);
  EXPECT_EQ(make_manifold("line:0.5,0.1", 2).p(), 1);
  EXPECT_EQ(make_manifold("point:0.2,0.3", 2).p(), 0);
  EXPECT_THROW(make_manifold("point:0.2", 2), DomainError);
  EXPECT_THROW(make_manifold("torus", 2), DomainError);
}
