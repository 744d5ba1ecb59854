#include <cmath>

#include <gtest/gtest.h>

#include "flagsphere/counterexample.hpp"

using namespace flagsphere;

namespace {

// Smaller batch sizes than the acceptance run; same thresholds.
CounterexampleOptions quick() {
  CounterexampleOptions o;
  o.random_orbits = 8;
  o.horizon = 150.0;
  o.grid_theta = 10;
  o.grid_phi = 6;
  o.grid_directions = 16;
  o.jacobi_orbits = 5;
  return o;
}

}  // namespace

TEST(Counterexample, DefaultsPass) {
  CounterexampleReport r = verify_counterexample({}, quick());
  for (const auto& e : r.entries) EXPECT_TRUE(e.pass) << e.check << " " << e.value << " " << e.detail;
  ASSERT_EQ(r.closed.size(), 2u);
  const auto& east = r.closed[0];
  const auto& west = r.closed[1];
  const double a = std::sqrt(2.0) - 1.0;
  // The deformation is a symplectomorphism that maps the base equatorial
  // orbits onto these two, so their lengths are unchanged.
  EXPECT_NEAR(east.length, kTwoPi / (1.0 + a), 1e-8);
  EXPECT_NEAR(west.length, kTwoPi / (1.0 - a), 1e-8);
  for (const auto& s : east.samples) EXPECT_NEAR(z_latitude(s.state), -0.05, 1e-4);
  for (const auto& s : west.samples) EXPECT_NEAR(z_latitude(s.state), 0.05, 1e-4);
  EXPECT_TRUE(r.all_pass());
}

TEST(Counterexample, ZeroT0CollapsesToEquator) {
  CounterexampleParams p{};
  p.t0 = 0.0;
  CounterexampleOptions o = quick();
  o.random_orbits = 0;
  o.jacobi_orbits = 1;
  CounterexampleReport r = verify_counterexample(p, o);
  ASSERT_EQ(r.closed.size(), 2u);
  EXPECT_TRUE(r.closed[0].on_equator);
  EXPECT_TRUE(r.closed[1].on_equator);
  ASSERT_NE(r.find("intersections"), nullptr);
  EXPECT_FALSE(r.find("intersections")->pass);
  EXPECT_EQ(r.find("intersections")->detail, "identical images");
  EXPECT_FALSE(r.find("non_reversible")->pass);
}

TEST(Counterexample, BadParametersReported) {
  CounterexampleParams p{};
  p.t0 = 0.4;
  CounterexampleReport r = verify_counterexample(p, quick());
  ASSERT_EQ(r.entries.size(), 1u);
  EXPECT_EQ(r.entries[0].check, "parameters");
  EXPECT_FALSE(r.all_pass());
}
