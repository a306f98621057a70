#include <gtest/gtest.h>

#include "qtrans/transversal.hpp"

TEST(Smoke, Compiles) {
  auto g = qtrans::SampledFunction::scalar(0.0, 1.0, 257, [](double x) { return x - 0.5; });
  auto r = qtrans::perturb(g, qtrans::GraphManifold::zero(1), 0.1);
  EXPECT_EQ(r.slices.size(), 1u);
}
