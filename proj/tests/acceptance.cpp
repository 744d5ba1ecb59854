// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fail.
// Seeds are fixed, so the printed values are reproducible.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "flagsphere/flagsphere.hpp"

using namespace flagsphere;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

const double kIrr = std::sqrt(2.0) - 1.0;

double ambient_gap(const PhaseState& a, const PhaseState& b) {
  const AmbientState x = to_ambient(a), y = to_ambient(b);
  return std::max((x.x - y.x).norm(), (x.w - y.w).norm());
}

Trajectory orbit(const MetricSpec& m, const PhaseState& s, double length) {
  IntegratorOptions o;
  o.sample_interval = 0.02;
  return integrate(m, s, length, o);
}

Outcome oracle_equivalence() {
  std::mt19937_64 rng(42);
  IntegratorOptions o;
  o.sample_interval = 0.05;
  double worst = 0.0;
  for (double a : {0.1, 0.3, 1.0 / 3.0, 0.7}) {
    const MetricSpec m = MetricSpec::katok(a);
    for (int i = 0; i < 20; ++i) {
      const PhaseState s = random_unit_state(m, rng);
      for (const auto& smp : integrate(m, s, 4.0 * kPi, o).samples)
        worst = std::max(worst, ambient_gap(smp.state, oracle_katok(a, s, smp.t)));
    }
  }
  return {worst <= 1e-6, fmt("sup error %.3g over 80 orbits (<= 1e-6)", worst)};
}

Outcome conjugate_points() {
  std::mt19937_64 rng(42);
  double worst = 0.0;
  int missing = 0;
  for (const MetricSpec& m : {MetricSpec::round(), MetricSpec::katok(0.3), MetricSpec::katok(1.0 / 3.0),
                              MetricSpec::katok(kIrr)}) {
    for (int i = 0; i < 10; ++i) {
      JacobiRecord r = variational_flow(m, random_unit_state(m, rng), kPi + 0.5);
      if (r.conjugate_times.empty()) {
        ++missing;
        continue;
      }
      worst = std::max(worst, std::abs(r.conjugate_times.front() - kPi));
    }
  }
  return {missing == 0 && worst <= 1e-4, fmt("max |t1 - pi| = %.3g on 40 orbits, %g missing (<= 1e-4)", worst, missing)};
}

Outcome rational_spectrum() {
  const MetricSpec m = MetricSpec::katok(1.0 / 3.0);
  std::vector<ClosedGeodesicRecord> exc;
  for (auto& r : find_closed_geodesics(m))
    if (r.exceptional) exc.push_back(r);
  if (exc.size() != 2) return {false, fmt("found %g exceptional geodesics, expected 2", exc.size())};
  std::sort(exc.begin(), exc.end(), [](const auto& a, const auto& b) { return a.length < b.length; });
  const double d1 = std::abs(exc[0].length - 1.5 * kPi), d2 = std::abs(exc[1].length - 3.0 * kPi);
  const double lat = std::max(exc[0].max_abs_latitude, exc[1].max_abs_latitude);
  const bool windings = std::abs(exc[0].winding) == 1 && exc[0].winding == -exc[1].winding;
  const double recip = std::abs(1.0 / exc[0].length + 1.0 / exc[1].length - 1.0 / kPi);
  const bool ok = d1 <= 1e-5 && d2 <= 1e-5 && lat <= 1e-6 && windings && recip <= 1e-6;
  return {ok, fmt("L1 - 3pi/2 = %.2g, L2 - 3pi = %.2g, max|theta| = %.2g", d1, d2, lat) +
                  fmt(", windings %+g/%+g, reciprocal defect %.2g", exc[0].winding, exc[1].winding, recip)};
}

Outcome common_period() {
  std::mt19937_64 rng(42);
  const MetricSpec m = MetricSpec::katok(1.0 / 3.0);
  double worst = 0.0, worst_len = 0.0;
  int closed = 0;
  for (int i = 0; i < 20; ++i) {
    const PhaseState s = random_unit_state(m, rng);
    worst = std::max(worst, phase_distance(flow_map(m, s, 6.0 * kPi), s));
    auto rec = detect_closure(orbit(m, s, 6.0 * kPi + 1.0), 1e-8);
    if (rec) {
      ++closed;
      worst_len = std::max(worst_len, std::abs(rec->length - 6.0 * kPi));
    }
  }
  const bool ok = closed == 20 && worst <= 1e-5 && worst_len <= 1e-5;
  return {ok, fmt("%g/20 detected at 6pi (max length error %.2g), return residual %.2g (<= 1e-5)", closed, worst_len,
                  worst)};
}

Outcome single_exceptional() {
  const MetricSpec m = MetricSpec::katok(0.5);
  int exceptional = 0;
  double d_exc = 0.0, d_eq = INFINITY;
  for (const auto& r : find_closed_geodesics(m)) {
    if (r.exceptional) ++exceptional, d_exc = std::max(d_exc, std::abs(r.length - 4.0 * kPi / 3.0));
    else if (r.on_equator) d_eq = std::abs(r.length - 4.0 * kPi);
  }
  const bool ok = exceptional == 1 && d_exc <= 1e-5 && d_eq <= 1e-5;
  return {ok, fmt("%g exceptional (|L - 4pi/3| = %.2g), second equatorial |L - 4pi| = %.2g", exceptional, d_exc, d_eq)};
}

Outcome irrational() {
  const MetricSpec m = MetricSpec::katok(kIrr);
  SearchOptions g;  // 24 base points x 16 headings
  g.horizon = 500.0;
  int off = 0, on = 0;
  for (const auto& r : find_closed_geodesics(m, g)) (r.on_equator ? on : off)++;
  std::mt19937_64 rng(42);
  const double target = (2.0 - std::sqrt(2.0)) / 2.0;
  double rot = 0.0, sym = 0.0;
  for (int i = 0; i < 10; ++i) {
    const PhaseState s = random_unit_state(m, rng);
    rot = std::max(rot, std::abs(rotation_number(m, s, 10) - target));
    double hi = -1.0, lo = 1.0;
    for (const auto& e : latitude_extrema(m, orbit(m, s, 40.0))) hi = std::max(hi, e.theta), lo = std::min(lo, e.theta);
    sym = std::max(sym, std::abs(hi + lo));
  }
  const bool ok = off == 0 && on == 2 && rot <= 1e-4 && sym <= 1e-6;
  return {ok, fmt("closures: %g equatorial, %g other; rotation error %.2g", on, off, rot) +
                  fmt("; max theta + min theta = %.2g", sym)};
}

Outcome intersections() {
  const MetricSpec m = MetricSpec::katok(1.0 / 3.0);
  auto eq = detect_closure(orbit(m, {Chart::ZPolar, 0.0, 0.0, 0.0, 0.75}, 6.0), 1e-8);
  if (!eq || !eq->exceptional) return {false, "equatorial exceptional geodesic not found"};
  std::mt19937_64 rng(42);
  int fewest = 1 << 20;
  for (int i = 0; i < 5; ++i) {
    auto gen = detect_closure(orbit(m, random_unit_state(m, rng), 6.0 * kPi + 1.0), 1e-8);
    if (!gen) return {false, "generic orbit did not close"};
    fewest = std::min(fewest, count_intersections(*gen, *eq));
  }
  const MetricSpec round = MetricSpec::round();
  auto a = detect_closure(orbit(round, random_unit_state(round, rng), 7.0), 1e-8);
  auto b = detect_closure(orbit(round, random_unit_state(round, rng), 7.0), 1e-8);
  if (!a || !b) return {false, "round great circle did not close"};
  const int rr = count_intersections(*a, *b);
  return {fewest >= 3 && rr == 2, fmt("fewest generic/equator intersections %g (>= 3); great circles meet %g times", fewest, rr)};
}

Outcome first_integrals() {
  std::mt19937_64 rng(42);
  double e = 0.0, p = 0.0;
  for (const MetricSpec& m : {MetricSpec::round(), MetricSpec::katok(0.3)}) {
    for (int i = 0; i < 5; ++i) {
      IntegralDrift d = integral_drift(integrate(m, random_unit_state(m, rng), 200.0));
      e = std::max(e, d.energy), p = std::max(p, d.momentum);
    }
  }
  return {e <= 1e-8 && p <= 1e-9, fmt("max |dH| = %.2g (<= 1e-8), max |dp_phi| = %.2g (<= 1e-9)", e, p)};
}

Outcome conjugacy_invariants_match() {
  double inv = 0.0, per = 0.0;
  std::vector<double> shortest;
  for (double alpha : {0.3, 1.0 / 3.0, 0.5}) {
    const MetricSpec m = MetricSpec::katok(alpha);
    const MeasuredInvariants mi = measure_invariants(m);
    auto [p1, p2] = conjugacy_invariants(m.lambda());
    inv = std::max({inv, std::abs(mi.shortest - p1), std::abs(mi.second - p2)});
    shortest.push_back(mi.shortest);
    const TorusModelSpec s = TorusModelSpec::from_lambda(m.lambda());
    auto t1 = model_minimal_period(s, {1, 0, 0, 0}, 4.0 * p2);
    auto t2 = model_minimal_period(s, {0, 0, 0, 1}, 4.0 * p2);
    if (!t1 || !t2) return {false, "model period not found"};
    per = std::max({per, std::abs(*t1 - p1), std::abs(*t2 - p2)});
  }
  // Katok(-0.3) has the same normalized lambda as Katok(0.3).
  const MeasuredInvariants twin = measure_invariants(MetricSpec::katok(-0.3));
  const bool verdicts = conjugacy_verdict(shortest[0], twin.shortest) == "conjugate" &&
                        conjugacy_verdict(shortest[0], shortest[1]) == "not conjugate" &&
                        conjugacy_verdict(shortest[1], shortest[2]) == "not conjugate";
  return {inv <= 1e-5 && per <= 1e-9 && verdicts,
          fmt("invariant error %.2g (<= 1e-5), model period error %.2g (<= 1e-9), verdicts ", inv, per) +
              (verdicts ? "ok" : "wrong")};
}

Outcome closing_deformation() {
  const MetricSpec base = MetricSpec::katok(0.3);
  const MetricSpec m = MetricSpec::chain(base, closing_increment(base));
  std::mt19937_64 rng(42);
  double worst = 0.0;
  int closed = 0;
  for (int i = 0; i < 20; ++i) {
    auto rec = detect_closure(orbit(m, random_unit_state(m, rng), 8.0), 1e-8);
    if (rec) ++closed, worst = std::max(worst, std::abs(rec->length - kTwoPi));
  }
  std::uniform_real_distribution<double> u(-0.45, 0.45), lat(-1.4, 1.4), lon(-kPi, kPi);
  std::normal_distribution<double> g;
  double law = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const double a = u(rng), b = u(rng);
    const PhaseState s{Chart::ZPolar, lat(rng), lon(rng), g(rng), g(rng)};
    // In ZPolar the wind pairing w(z x x) is just p_phi.
    const double chained = dual_norm(MetricSpec::chain(MetricSpec::katok(a), b), s);
    law = std::max({law, std::abs(chained - dual_norm(MetricSpec::katok(a), s) - b * s.p_phi),
                    std::abs(chained - dual_norm(MetricSpec::katok(a + b), s))});
  }
  return {closed == 20 && worst <= 1e-6 && law <= 1e-12,
          fmt("%g/20 closed, max |L - 2pi| = %.2g (<= 1e-6), chain law error %.2g (<= 1e-12)", closed, worst, law)};
}

Outcome counterexample() {
  const CounterexampleReport r = verify_counterexample({});
  std::string failed;
  for (const auto& e : r.entries)
    if (!e.pass) failed += " " + e.check;
  std::string detail = fmt("%g checks", r.entries.size());
  if (const CheckEntry* e = r.find("closed_geodesics")) detail += fmt(", pin error %.2g", e->value);
  if (const CheckEntry* e = r.find("separation")) detail += fmt(", separation %.4f", e->value);
  if (const CheckEntry* e = r.find("convexity")) detail += fmt(", min Hessian eigenvalue %.3g", e->value);
  detail += failed.empty() ? ", all pass" : ", failed:" + failed;
  return {r.all_pass(), detail};
}

Outcome entropy_proxy() {
  const MetricSpec m = MetricSpec::katok(kIrr);
  std::mt19937_64 rng(42);
  const SeparationGrowth gr = separation_growth(m, random_unit_state(m, rng), 300.0, 1e-8);
  return {gr.rate <= 1e-3, fmt("fitted exponential rate %.2g (<= 1e-3), polynomial exponent %.2f, final %.2g", gr.rate,
                               gr.exponent, gr.final_separation)};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"oracle equivalence", oracle_equivalence},
      {"first conjugate point at pi", conjugate_points},
      {"rational spectrum of Katok(1/3)", rational_spectrum},
      {"common period 6pi of Katok(1/3)", common_period},
      {"single exceptional geodesic of Katok(1/2)", single_exceptional},
      {"irrational Katok(sqrt2-1)", irrational},
      {"intersection counts", intersections},
      {"first integrals over length 200", first_integrals},
      {"conjugacy invariants", conjugacy_invariants_match},
      {"closing deformation", closing_deformation},
      {"counterexample", counterexample},
      {"entropy proxy", entropy_proxy},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failures += !o.pass;
    std::printf("%s %2zu %s: %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
