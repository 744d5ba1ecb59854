#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "flagsphere/analysis.hpp"

using namespace flagsphere;

namespace {

const double kIrr = std::sqrt(2.0) - 1.0;

// Great circle through x0 with unit tangent u, sampled by hand.
ClosedGeodesicRecord great_circle(const Eigen::Vector3d& x0, const Eigen::Vector3d& u, int n = 700) {
  ClosedGeodesicRecord r;
  r.length = kTwoPi;
  for (int i = 0; i <= n; ++i) {
    const double t = kTwoPi * i / n;
    const Eigen::Vector3d x = x0 * std::cos(t) + u * std::sin(t);
    const Eigen::Vector3d w = u * std::cos(t) - x0 * std::sin(t);
    r.samples.push_back({t, best_chart({x, w}), 0.0});
  }
  return r;
}

PhaseState off_equator(const MetricSpec& m, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> lat(0.2, 1.0), lon(-kPi, kPi), ang(0.3, 1.2);
  return unit_covector(m, Chart::ZPolar, lat(rng), lon(rng), ang(rng));
}

Trajectory orbit(const MetricSpec& m, const PhaseState& s, double length) {
  IntegratorOptions o;
  o.sample_interval = 0.02;
  return integrate(m, s, length, o);
}

}  // namespace

TEST(DetectClosure, RoundGreatCircles) {
  std::mt19937_64 rng(1);
  const MetricSpec m = MetricSpec::round();
  for (int i = 0; i < 5; ++i) {
    PhaseState s = random_unit_state(m, rng);
    auto rec = detect_closure(orbit(m, s, 8.0), 1e-8);
    ASSERT_TRUE(rec);
    EXPECT_NEAR(rec->length, kTwoPi, 1e-8);
    EXPECT_LE(rec->residual, 1e-8);
  }
  auto eq = detect_closure(orbit(m, {Chart::ZPolar, 0.0, 0.0, 0.0, 1.0}, 8.0), 1e-8);
  ASSERT_TRUE(eq);
  EXPECT_EQ(eq->winding, 1);
  EXPECT_TRUE(eq->on_equator);
  auto wq = detect_closure(orbit(m, {Chart::ZPolar, 0.0, 0.0, 0.0, -1.0}, 8.0), 1e-8);
  ASSERT_TRUE(wq);
  EXPECT_EQ(wq->winding, -1);
}

TEST(DetectClosure, KatokThirdEquators) {
  const MetricSpec m = MetricSpec::katok(1.0 / 3.0);
  // lambda_raw = 2/3: eastward F*(p_phi) = (1 + 1/3) p_phi.
  auto east = detect_closure(orbit(m, {Chart::ZPolar, 0.0, 0.0, 0.0, 0.75}, 6.0), 1e-8);
  ASSERT_TRUE(east);
  EXPECT_NEAR(east->length, 1.5 * kPi, 1e-8);
  EXPECT_EQ(east->winding, -1);
  EXPECT_TRUE(east->on_equator);
  EXPECT_TRUE(east->exceptional);
  auto west = detect_closure(orbit(m, {Chart::ZPolar, 0.0, 0.0, 0.0, -1.5}, 11.0), 1e-8);
  ASSERT_TRUE(west);
  EXPECT_NEAR(west->length, 3.0 * kPi, 1e-8);
  EXPECT_EQ(west->winding, 1);
  EXPECT_TRUE(west->exceptional);
}

TEST(DetectClosure, IrrationalOrbitDoesNotClose) {
  std::mt19937_64 rng(2);
  const MetricSpec m = MetricSpec::katok(kIrr);
  ClosureOptions o;
  o.propagator = Propagator::Oracle;
  IntegratorOptions io;
  io.sample_interval = 0.02;
  for (int i = 0; i < 3; ++i) {
    Trajectory tr = integrate(m, off_equator(m, rng), 500.0, io, Propagator::Oracle);
    EXPECT_FALSE(detect_closure(tr, o));
  }
}

TEST(DetectClosure, GenericKatokThirdClosesAtCommonPeriod) {
  std::mt19937_64 rng(3);
  const MetricSpec m = MetricSpec::katok(1.0 / 3.0);
  for (int i = 0; i < 3; ++i) {
    auto rec = detect_closure(orbit(m, off_equator(m, rng), 6.0 * kPi + 1.0), 1e-8);
    ASSERT_TRUE(rec);
    EXPECT_NEAR(rec->length, 6.0 * kPi, 1e-6);
    EXPECT_FALSE(rec->exceptional);
  }
}

TEST(FindClosed, KatokThirdSpectrum) {
  const MetricSpec m = MetricSpec::katok(1.0 / 3.0);
  auto recs = find_closed_geodesics(m);
  int equatorial = 0;
  std::set<long> lengths;
  for (const auto& r : recs) {
    lengths.insert(std::lround(r.length / kPi * 1e4));
    if (r.on_equator) ++equatorial;
    // Every length is one of the two exceptional ones or the common period.
    const double d = std::min({std::abs(r.length - 1.5 * kPi), std::abs(r.length - 3.0 * kPi),
                               std::abs(r.length - 6.0 * kPi)});
    EXPECT_LE(d, 1e-5);
  }
  EXPECT_EQ(equatorial, 2);
  EXPECT_EQ(lengths, (std::set<long>{15000, 30000, 60000}));
}

TEST(FindClosed, KatokHalfHasOneExceptional) {
  const MetricSpec m = MetricSpec::katok(0.5);
  SearchOptions g;
  g.longitudes = 3;
  g.headings = 8;
  auto recs = find_closed_geodesics(m, g);
  ASSERT_FALSE(recs.empty());
  int exceptional = 0;
  for (const auto& r : recs) {
    if (r.exceptional) {
      ++exceptional;
      EXPECT_NEAR(r.length, 4.0 * kPi / 3.0, 1e-5);
    } else {
      EXPECT_NEAR(r.length, 4.0 * kPi, 1e-5);
    }
  }
  EXPECT_EQ(exceptional, 1);
  // Denser grid, same exceptional set.
  g.longitudes = 6;
  g.headings = 16;
  auto dense = find_closed_geodesics(m, g);
  int dense_exc = 0;
  for (const auto& r : dense) dense_exc += r.exceptional;
  EXPECT_EQ(dense_exc, 1);
}

TEST(FindClosed, RoundAllTwoPi) {
  SearchOptions g;
  g.longitudes = 3;
  g.headings = 6;
  auto recs = find_closed_geodesics(MetricSpec::round(), g);
  ASSERT_FALSE(recs.empty());
  for (const auto& r : recs) EXPECT_NEAR(r.length, kTwoPi, 1e-6);
}

TEST(RotationNumber, MatchesNormalizedLambda) {
  std::mt19937_64 rng(4);
  EXPECT_NEAR(rotation_number(MetricSpec::round(), off_equator(MetricSpec::round(), rng), 6), 0.5, 1e-4);
  const MetricSpec irr = MetricSpec::katok(kIrr);
  EXPECT_NEAR(rotation_number(irr, off_equator(irr, rng), 10), (2.0 - std::sqrt(2.0)) / 2.0, 1e-4);
  const MetricSpec third = MetricSpec::katok(1.0 / 3.0);
  EXPECT_NEAR(rotation_number(third, off_equator(third, rng), 10), 1.0 / 3.0, 1e-4);
}

TEST(RotationNumber, IndependentOfTorusPoint) {
  const MetricSpec m = MetricSpec::katok(kIrr);
  std::vector<double> rs;
  for (int i = 0; i < 10; ++i) {
    // Same amplitude: same latitude-crossing heading at the equator, varied longitude.
    PhaseState s = unit_covector(m, Chart::ZPolar, 0.0, 0.6 * i, 0.7);
    rs.push_back(rotation_number(m, s, 6));
  }
  double mean = 0.0, var = 0.0;
  for (double r : rs) mean += r / rs.size();
  for (double r : rs) var += (r - mean) * (r - mean) / rs.size();
  EXPECT_LE(std::sqrt(var), 1e-4);
}

TEST(RotationNumber, RejectsEquatorialOrbit) {
  const MetricSpec m = MetricSpec::katok(0.3);
  EXPECT_THROW(rotation_number(m, {Chart::ZPolar, 0.0, 0.0, 0.0, 1.0 / 1.3}, 4), EquatorialOrbit);
}

TEST(Oscillation, SymmetricAboutEquator) {
  std::mt19937_64 rng(5);
  const MetricSpec m = MetricSpec::katok(kIrr);
  for (int i = 0; i < 3; ++i) {
    Trajectory tr = orbit(m, off_equator(m, rng), 40.0);
    auto ex = latitude_extrema(m, tr);
    double hi = -1.0, lo = 1.0;
    for (const auto& e : ex) hi = std::max(hi, e.theta), lo = std::min(lo, e.theta);
    EXPECT_NEAR(hi, -lo, 1e-6);
  }
}

TEST(Intersections, GreatCirclesMeetTwice) {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> g;
  for (int i = 0; i < 10; ++i) {
    Eigen::Vector3d a(g(rng), g(rng), g(rng)), b(g(rng), g(rng), g(rng));
    Eigen::Vector3d na = a.normalized(), nb = b.normalized();
    // Start each circle away from the common points +-(na x nb).
    Eigen::Vector3d xa = na.cross(nb).cross(na).normalized(), xb = nb.cross(na).cross(nb).normalized();
    EXPECT_EQ(count_intersections(great_circle(xa, na.cross(xa)), great_circle(xb, nb.cross(xb))), 2);
  }
}

TEST(Intersections, IdenticalImagesRejected) {
  Eigen::Vector3d x(1, 0, 0), u(0, 0.6, 0.8);
  EXPECT_THROW(count_intersections(great_circle(x, u), great_circle(-x, u)), IdenticalImages);
}

TEST(Intersections, KatokThirdGenericMeetsEquator) {
  std::mt19937_64 rng(7);
  const MetricSpec m = MetricSpec::katok(1.0 / 3.0);
  auto eq = detect_closure(orbit(m, {Chart::ZPolar, 0.0, 0.0, 0.0, 0.75}, 6.0), 1e-8);
  ASSERT_TRUE(eq);
  for (int i = 0; i < 3; ++i) {
    auto gen = detect_closure(orbit(m, off_equator(m, rng), 6.0 * kPi + 1.0), 1e-8);
    ASSERT_TRUE(gen);
    EXPECT_GE(count_intersections(*gen, *eq), 3);
  }
}

TEST(Reversibility, ReversibleCases) {
  std::mt19937_64 rng(8);
  const MetricSpec r = MetricSpec::round();
  auto rec = detect_closure(orbit(r, random_unit_state(r, rng), 8.0), 1e-8);
  ASSERT_TRUE(rec);
  EXPECT_LE(reversibility_defect(r, *rec), 1e-7);
  const MetricSpec k = MetricSpec::katok(1.0 / 3.0);
  auto eq = detect_closure(orbit(k, {Chart::ZPolar, 0.0, 0.0, 0.0, 0.75}, 6.0), 1e-8);
  ASSERT_TRUE(eq);
  EXPECT_LE(reversibility_defect(k, *eq), 1e-6);
}

TEST(Reversibility, KatokGenericOrbitIsNotReversible) {
  std::mt19937_64 rng(9);
  const MetricSpec k = MetricSpec::katok(1.0 / 3.0);
  auto gen = detect_closure(orbit(k, off_equator(k, rng), 6.0 * kPi + 1.0), 1e-8);
  ASSERT_TRUE(gen);
  EXPECT_GT(reversibility_defect(k, *gen), 1e-2);
}

TEST(EstimateLambda, KnownMetrics) {
  EXPECT_NEAR(estimate_lambda(MetricSpec::round()), 0.5, 1e-6);
  EXPECT_NEAR(estimate_lambda(MetricSpec::katok(0.3)), 0.35, 1e-6);
  EXPECT_NEAR(estimate_lambda(MetricSpec::katok(1.0 / 3.0)), 1.0 / 3.0, 1e-6);
  EXPECT_THROW(estimate_lambda(MetricSpec::perturbed({}), {}, Propagator::Oracle), NotConstantCurvature);
}

TEST(IntegralDrift, PerturbedEnergyConserved) {
  std::mt19937_64 rng(10);
  const MetricSpec m = MetricSpec::perturbed({});
  Trajectory tr = integrate(m, random_unit_state(m, rng), 200.0, {}, Propagator::Oracle);
  EXPECT_LE(integral_drift(tr).energy, 1e-8);
}

TEST(SeparationGrowth, IrrationalKatokIsSubexponential) {
  std::mt19937_64 rng(11);
  const MetricSpec m = MetricSpec::katok(kIrr);
  SeparationGrowth g = separation_growth(m, off_equator(m, rng), 150.0, 1e-8, {}, Propagator::Oracle);
  EXPECT_LE(g.rate, 1e-3);
  EXPECT_LT(g.final_separation, 1e-4);
}
