#pragma once

// Orthogonal normal form of the geodesic flow on SO(3) = RP^3: the torus
// action t -> diag(R(a t), R(b t)) / {+-Id} on unit 4-vectors, its minimal
// periods pi/a and pi/b, and the invariant-level conjugacy test.

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "flagsphere/analysis.hpp"
#include "flagsphere/chart.hpp"
#include "flagsphere/errors.hpp"
#include "flagsphere/metric.hpp"

namespace flagsphere {

struct TorusModelSpec {
  double a = 0.5;
  double b = 0.5;

  /// Normal form of a metric with normalized rotation angle lambda: the
  /// shortest period pi / a belongs to the shortest closed geodesic.
  static TorusModelSpec from_lambda(double lambda) {
    if (!(lambda > 0.0 && lambda <= 0.5)) throw PreconditionError("torus model: lambda must lie in (0, 1/2]");
    return {1.0 - lambda, lambda};
  }

  void validate() const {
    if (!(a >= b && b > 0.0 && std::abs(a + b - 1.0) <= 1e-12)) {
      throw InvalidParameters("torus model needs a >= b > 0 and a + b = 1");
    }
  }
  std::pair<double, double> minimal_periods() const { return {kPi / a, kPi / b}; }
};

inline Eigen::Vector4d model_flow(const TorusModelSpec& spec, double t, const Eigen::Vector4d& point) {
  if (!(std::abs(point.norm() - 1.0) <= 1e-9)) throw PreconditionError("model_flow: point must be a unit 4-vector");
  const double ca = std::cos(spec.a * t), sa = std::sin(spec.a * t);
  const double cb = std::cos(spec.b * t), sb = std::sin(spec.b * t);
  return {ca * point[0] - sa * point[1], sa * point[0] + ca * point[1], cb * point[2] - sb * point[3],
          sb * point[2] + cb * point[3]};
}

/// Distance between two points of RP^3 represented by unit 4-vectors.
inline double projective_distance(const Eigen::Vector4d& p, const Eigen::Vector4d& q) {
  return std::min((p - q).norm(), (p + q).norm());
}

/// First return time of a scalar recurrence distance d(t): coarse scan for a
/// local minimum below `coarse` after leaving the 2*coarse ball, then
/// golden-section refinement of d itself (V-shaped at a return, so the
/// minimizer is resolved to rounding level).
inline std::optional<double> first_return_time(const std::function<double(double)>& d, double t_max, double dt = 0.01,
                                               double coarse = 0.05, double tol = 1e-9) {
  bool departed = false;
  double prev2 = d(0.0), prev = d(dt);
  for (double t = 2.0 * dt; t <= t_max + 1e-12; t += dt) {
    const double cur = d(t);
    if (prev > 2.0 * coarse) departed = true;
    if (departed && prev < coarse && prev <= prev2 && prev <= cur) {
      double lo = t - 2.0 * dt, hi = t;
      const double g = 0.5 * (std::sqrt(5.0) - 1.0);
      double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
      double f1 = d(x1), f2 = d(x2);
      for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, t); ++it) {
        if (f1 <= f2) {
          hi = x2, x2 = x1, f2 = f1;
          x1 = hi - g * (hi - lo), f1 = d(x1);
        } else {
          lo = x1, x1 = x2, f1 = f2;
          x2 = lo + g * (hi - lo), f2 = d(x2);
        }
      }
      const double tm = 0.5 * (lo + hi);
      if (d(tm) <= tol) return tm;
    }
    prev2 = prev;
    prev = cur;
  }
  return std::nullopt;
}

/// Minimal period of the model orbit through `point` (mod +-), if below t_max.
inline std::optional<double> model_minimal_period(const TorusModelSpec& spec, const Eigen::Vector4d& point,
                                                  double t_max) {
  return first_return_time([&](double t) { return projective_distance(model_flow(spec, t, point), point); }, t_max);
}

inline std::pair<double, double> conjugacy_invariants(double lambda) {
  if (!(lambda > 0.0 && lambda <= 0.5)) throw PreconditionError("conjugacy_invariants: lambda must lie in (0, 1/2]");
  return {kPi / (1.0 - lambda), kPi / lambda};
}

/// Zermelo coefficient that closes all geodesics: lambda_alpha = lambda + alpha / 2 = 1/2.
inline double deform_to_closed(double lambda) {
  if (!(lambda > 0.0 && lambda <= 0.5)) throw PreconditionError("deform_to_closed: lambda must lie in (0, 1/2]");
  return 1.0 - 2.0 * lambda;
}

/// Chain increment that brings `m` to lambda_raw = 1/2, with the sign that
/// matches the metric's raw orientation.
inline double closing_increment(const MetricSpec& m) {
  const double a = deform_to_closed(m.lambda());
  return m.lambda_raw() > 0.5 ? -a : a;
}

struct MeasuredInvariants {
  double shortest = 0.0;
  double second = 0.0;
  double lambda = 0.0;  // 1 - pi / shortest
  std::size_t records = 0;
};

/// Two shortest distinct closed-geodesic lengths found by the search (the
/// second equals the first when only one length is found).
inline MeasuredInvariants measure_invariants(const MetricSpec& m, const SearchOptions& g = {}, double same = 1e-6) {
  auto recs = find_closed_geodesics(m, g);
  if (recs.empty()) throw NumericalBreakdown("measure_invariants: no closed geodesic found");
  MeasuredInvariants r;
  r.records = recs.size();
  r.shortest = recs.front().length;
  r.second = r.shortest;
  for (const auto& rec : recs)
    if (rec.length > r.shortest + same) {
      r.second = rec.length;
      break;
    }
  r.lambda = 1.0 - kPi / r.shortest;
  return r;
}

/// Invariant-level conjugacy: the flows are conjugate exactly when the
/// shortest closed geodesics have equal length.
inline std::string conjugacy_verdict(double shortest_a, double shortest_b, double tol = 1e-5) {
  return std::abs(shortest_a - shortest_b) <= tol ? "conjugate" : "not conjugate";
}

}  // namespace flagsphere
