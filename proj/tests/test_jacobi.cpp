#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "flagsphere/jacobi.hpp"

using namespace flagsphere;

TEST(Jacobi, RoundIsSine) {
  std::mt19937_64 rng(1);
  const MetricSpec m = MetricSpec::round();
  for (int i = 0; i < 3; ++i) {
    JacobiRecord r = variational_flow(m, random_unit_state(m, rng), kPi);
    double worst = 0.0;
    for (std::size_t k = 0; k < r.times.size(); ++k) worst = std::max(worst, std::abs(r.y[k] - std::sin(r.times[k])));
    EXPECT_LE(worst, 1e-8);
  }
}

TEST(Jacobi, StartsAtZeroWithUnitSlope) {
  std::mt19937_64 rng(2);
  const MetricSpec m = MetricSpec::katok(0.6);
  JacobiRecord r = variational_flow(m, random_unit_state(m, rng), 0.5);
  EXPECT_EQ(r.y.front(), 0.0);
  EXPECT_NEAR((r.y[1] - r.y[0]) / (r.times[1] - r.times[0]), 1.0, 1e-3);
}

TEST(Jacobi, KatokConjugateAtPi) {
  std::mt19937_64 rng(42);
  const MetricSpec m = MetricSpec::katok(0.3);
  for (int i = 0; i < 10; ++i) {
    JacobiRecord r = variational_flow(m, random_unit_state(m, rng), kPi + 0.3);
    ASSERT_FALSE(r.conjugate_times.empty());
    EXPECT_NEAR(r.conjugate_times.front(), kPi, 1e-4);
    ASSERT_FALSE(r.k_values.empty());
    for (double k : r.k_values) EXPECT_NEAR(k, 1.0, 1e-3);
  }
}

TEST(Jacobi, DirectAndDifferencePathsAgree) {
  std::mt19937_64 rng(3);
  const MetricSpec m = MetricSpec::katok(-0.5);
  PhaseState s = random_unit_state(m, rng);
  JacobiRecord a = variational_flow(m, s, 4.0, {}, Propagator::Direct);
  JacobiRecord b = variational_flow(m, s, 4.0, {}, Propagator::Oracle);
  ASSERT_EQ(a.y.size(), b.y.size());
  for (std::size_t k = 0; k < a.y.size(); ++k) EXPECT_NEAR(a.y[k], b.y[k], 1e-6);
  ASSERT_EQ(a.conjugate_times.size(), 1u);
  ASSERT_EQ(b.conjugate_times.size(), 1u);
  EXPECT_NEAR(a.conjugate_times[0], b.conjugate_times[0], 1e-8);
}

TEST(Jacobi, SecondConjugatePointAtTwoPi) {
  std::mt19937_64 rng(4);
  const MetricSpec m = MetricSpec::katok(1.0 / 3.0);
  JacobiRecord r = variational_flow(m, random_unit_state(m, rng), 2.0 * kPi + 0.3);
  ASSERT_EQ(r.conjugate_times.size(), 2u);
  EXPECT_NEAR(r.conjugate_times[1], 2.0 * kPi, 1e-4);
}

TEST(Jacobi, PerturbedConjugateTimesNearPi) {
  std::mt19937_64 rng(5);
  const MetricSpec m = MetricSpec::perturbed({});
  for (int i = 0; i < 10; ++i) {
    JacobiRecord r = variational_flow(m, random_unit_state(m, rng), kPi + 0.5, {}, Propagator::Oracle);
    ASSERT_FALSE(r.conjugate_times.empty());
    EXPECT_NEAR(r.conjugate_times.front(), kPi, 0.3);
  }
}
