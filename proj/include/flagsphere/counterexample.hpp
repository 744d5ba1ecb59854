#pragma once

// End-to-end checks of the perturbed metric: the two closed geodesics near the
// parallels theta = -t0 (eastward) and theta = +t0 (westward), absence of
// other closures, convexity, conjugate points and curvature, and the
// non-reversibility of both closed geodesics.

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "flagsphere/analysis.hpp"
#include "flagsphere/flow.hpp"
#include "flagsphere/jacobi.hpp"
#include "flagsphere/metric.hpp"
#include "flagsphere/perturbation.hpp"

namespace flagsphere {

struct CheckEntry {
  std::string check;
  bool pass = false;
  double value = 0.0;
  double threshold = 0.0;
  std::string detail;
};

struct CounterexampleReport {
  CounterexampleParams params;
  std::vector<CheckEntry> entries;
  std::vector<ClosedGeodesicRecord> closed;  // eastward, westward

  bool all_pass() const {
    return !entries.empty() && std::all_of(entries.begin(), entries.end(), [](const CheckEntry& e) { return e.pass; });
  }
  const CheckEntry* find(const std::string& name) const {
    for (const auto& e : entries)
      if (e.check == name) return &e;
    return nullptr;
  }
};

struct CounterexampleOptions {
  std::uint64_t seed = 42;
  int random_orbits = 50;
  double horizon = 300.0;
  double floor = 1e-2;
  int grid_theta = 20;
  int grid_phi = 20;
  int grid_directions = 40;
  int jacobi_orbits = 20;
  double pin_tol = 1e-4;
  double closed_residual = 1e-6;
  double conjugate_window = 0.3;
  double k_low = 0.5;
  double k_high = 1.5;
  double reversibility_min = 1e-2;
  IntegratorOptions integrator{};
};

namespace detail {

// Launches due east (sign = +1) or west along the parallel theta0 and hands
// the orbit to the generic closure detector on the direct flow.
inline std::optional<ClosedGeodesicRecord> parallel_orbit(const MetricSpec& m, double theta0, int sign,
                                                          const CounterexampleOptions& o) {
  PhaseState s{Chart::ZPolar, theta0, 0.0, 0.0, static_cast<double>(sign)};
  s = normalize(m, s);
  const double a = m.zermelo_alpha();
  const double expected = kTwoPi / (1.0 + sign * a);
  IntegratorOptions io = o.integrator;
  io.sample_interval = 0.02;
  Trajectory tr = integrate(m, s, 1.5 * expected, io);
  ClosureOptions co;
  co.tol = 1e-9;
  co.integrator = o.integrator;
  return detect_closure(tr, co);
}

}  // namespace detail

inline CounterexampleReport verify_counterexample(const CounterexampleParams& prm,
                                                  const CounterexampleOptions& o = {}) {
  CounterexampleReport rep;
  rep.params = prm;
  if (auto v = prm.violation(); !v.empty()) {
    rep.entries.push_back({"parameters", false, 0.0, 0.0, v});
    return rep;
  }
  const MetricSpec m = MetricSpec::perturbed(prm);
  const double t0 = prm.t0;

  // (i) the two closed geodesics
  {
    auto east = detail::parallel_orbit(m, -t0, +1, o);
    auto west = detail::parallel_orbit(m, +t0, -1, o);
    const double pinned = parallel_latitude(t0, prm);
    CheckEntry e{"closed_geodesics", false, 0.0, o.pin_tol, ""};
    if (!east || !west) {
      e.detail = std::string("closure not detected for the ") + (!east ? "eastward" : "westward") + " parallel";
      rep.entries.push_back(e);
    } else {
      double pin = 0.0, model = 0.0;
      for (const auto& s : east->samples) {
        pin = std::max(pin, std::abs(z_latitude(s.state) + t0));
        model = std::max(model, std::abs(z_latitude(s.state) + pinned));
      }
      for (const auto& s : west->samples) {
        pin = std::max(pin, std::abs(z_latitude(s.state) - t0));
        model = std::max(model, std::abs(z_latitude(s.state) - pinned));
      }
      const double res = std::max(east->residual, west->residual);
      int crossings = -1;
      std::string note;
      try {
        crossings = count_intersections(*east, *west);
      } catch (const IdenticalImages&) {
        note = "identical images";
      }
      const double sep = curve_separation(*east, *west);
      e.value = pin;
      e.pass = pin <= o.pin_tol && res <= o.closed_residual && crossings == 0 && sep >= 2.0 * t0 - 1e-3;
      e.detail = "max |theta -+ theta*| " + std::to_string(model) + " with theta* = " + std::to_string(pinned) +
                 ", lengths " + std::to_string(east->length) + " / " + std::to_string(west->length) + ", residual " +
                 std::to_string(res) + ", crossings " + (note.empty() ? std::to_string(crossings) : note) +
                 ", separation " + std::to_string(sep);
      rep.entries.push_back(e);
      rep.entries.push_back({"closed_residual", res <= o.closed_residual, res, o.closed_residual, ""});
      rep.entries.push_back({"intersections", crossings == 0, static_cast<double>(crossings), 0.0, note});
      rep.entries.push_back({"separation", sep >= 2.0 * t0 - 1e-3, sep, 2.0 * t0 - 1e-3, ""});
      rep.closed = {std::move(*east), std::move(*west)};
    }
  }

  std::mt19937_64 rng(o.seed);

  // (ii) no other closures within the horizon
  {
    ClosureOptions co;
    co.floor = o.floor;
    co.propagator = Propagator::Oracle;
    co.integrator = o.integrator;
    IntegratorOptions io = o.integrator;
    io.sample_interval = 0.02;
    int closed = 0;
    for (int i = 0; i < o.random_orbits; ++i) {
      PhaseState s = random_unit_state(m, rng);
      Trajectory tr = integrate(m, s, o.horizon, io, Propagator::Oracle);
      if (detect_closure(tr, co)) ++closed;
    }
    rep.entries.push_back({"no_other_closures", closed == 0, static_cast<double>(closed), 0.0,
                           std::to_string(o.random_orbits) + " orbits, horizon " + std::to_string(o.horizon)});
  }

  // (iii) convexity on a grid of the unit cosphere bundle
  {
    double worst = std::numeric_limits<double>::infinity();
    for (int i = 0; i < o.grid_theta; ++i) {
      const double lat = -kPi / 2 + (i + 0.5) * kPi / o.grid_theta;
      for (int j = 0; j < o.grid_phi; ++j) {
        const double lon = kTwoPi * j / o.grid_phi;
        const Eigen::Vector3d x(std::cos(lat) * std::cos(lon), std::cos(lat) * std::sin(lon), std::sin(lat));
        const Chart c = std::abs(lat) <= 1.0 ? Chart::ZPolar : Chart::XPolar;
        const PhaseState at = from_ambient({x, Eigen::Vector3d::Zero()}, c);
        for (int k = 0; k < o.grid_directions; ++k) {
          PhaseState s = unit_covector(m, c, at.theta, at.phi, kTwoPi * k / o.grid_directions);
          worst = std::min(worst, fiber_hessian_min_eigen(m, s));
        }
      }
    }
    rep.entries.push_back({"convexity", worst > 0.0, worst, 0.0,
                           std::to_string(o.grid_theta) + "x" + std::to_string(o.grid_phi) + "x" +
                               std::to_string(o.grid_directions) + " grid"});
  }

  // (iv) conjugate times and curvature along random orbits
  {
    double worst_dt = 0.0, k_min = std::numeric_limits<double>::infinity(), k_max = -k_min;
    int missing = 0;
    std::size_t k_count = 0;
    IntegratorOptions io = o.integrator;
    io.sample_interval = 0.01;
    for (int i = 0; i < o.jacobi_orbits; ++i) {
      PhaseState s = random_unit_state(m, rng);
      JacobiRecord jr = variational_flow(m, s, kPi + o.conjugate_window + 0.2, io, Propagator::Oracle);
      if (jr.conjugate_times.empty()) {
        ++missing;
        continue;
      }
      worst_dt = std::max(worst_dt, std::abs(jr.conjugate_times.front() - kPi));
      k_count += jr.k_values.size();
      for (double k : jr.k_values) k_min = std::min(k_min, k), k_max = std::max(k_max, k);
    }
    rep.entries.push_back({"conjugate_times", missing == 0 && worst_dt <= o.conjugate_window, worst_dt,
                           o.conjugate_window, "max |t_c - pi|" + (missing ? ", missing on " + std::to_string(missing) : std::string())});
    rep.entries.push_back({"flag_curvature", k_count > 0 && k_min >= o.k_low && k_max <= o.k_high, k_max, o.k_high,
                           "K in [" + std::to_string(k_min) + ", " + std::to_string(k_max) + "]"});
  }

  // (v) neither closed geodesic is geodesically reversible
  if (rep.closed.size() == 2) {
    const double d0 = reversibility_defect(m, rep.closed[0], o.integrator);
    const double d1 = reversibility_defect(m, rep.closed[1], o.integrator);
    rep.entries.push_back({"non_reversible", std::min(d0, d1) > o.reversibility_min, std::min(d0, d1),
                           o.reversibility_min, "defects " + std::to_string(d0) + " / " + std::to_string(d1)});
  } else {
    rep.entries.push_back({"non_reversible", false, 0.0, o.reversibility_min, "closed geodesics missing"});
  }
  return rep;
}

}  // namespace flagsphere
