#pragma once

// Transverse Jacobi fields and conjugate points.
//
// A vertical perturbation dp of the initial covector, tangent to the unit
// level, generates a Jacobi field J(t) vanishing at t = 0. Writing
// J = a v + y n with n the g_v-unit normal of the velocity v, the scalar
//   y = det(v, J) / sqrt(det A),   A = fiber Hessian of (1/2) F*^2,
// satisfies y'' + K y = 0 with K the flag curvature, so conjugate points are
// the zeros of y. (A = v v^T + n n^T, hence det(v, n) = sqrt(det A).)

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "flagsphere/chart.hpp"
#include "flagsphere/errors.hpp"
#include "flagsphere/flow.hpp"
#include "flagsphere/metric.hpp"
#include "flagsphere/rk.hpp"

namespace flagsphere {

struct JacobiRecord {
  std::vector<double> times;
  std::vector<double> y;
  std::vector<double> conjugate_times;
  std::vector<double> k_times;  // where |y| > kCurvatureFloor
  std::vector<double> k_values;
};

inline constexpr double kCurvatureFloor = 0.05;

namespace detail {

inline Eigen::Matrix2d fiber_hessian_any(const MetricSpec& m, const PhaseState& s) {
  if (m.is_zermelo()) return zermelo_fiber_hessian(m.zermelo_alpha(), s);
  return fiber_hessian(m, s);
}

// Scalar transverse displacement of the base variation dz at state s.
inline double transverse_scalar(const MetricSpec& m, const PhaseState& s, const Vec4& dz) {
  const Eigen::Matrix2d A = fiber_hessian_any(m, s);
  const double det = A.determinant();
  if (!(det > 0.0)) throw NumericalBreakdown("fiber Hessian is not positive definite along the orbit");
  const Velocity v = legendre_dual_velocity(m, s);
  return (v.v_theta * dz[1] - v.v_phi * dz[0]) / std::sqrt(det);
}

// Initial vertical perturbation with y'(0) = 1.
inline Vec4 initial_perturbation(const MetricSpec& m, const PhaseState& s) {
  const Eigen::Matrix2d A = fiber_hessian_any(m, s);
  const double det = A.determinant();
  if (!(det > 0.0)) throw NumericalBreakdown("fiber Hessian is not positive definite at the initial state");
  const Velocity v = legendre_dual_velocity(m, s);
  const double c = 1.0 / std::sqrt(det);
  return {0.0, 0.0, -v.v_phi * c, v.v_theta * c};
}

// Zeros of y after t = 0, refined by safeguarded secant on the evaluator.
inline std::vector<double> refine_zeros(const std::vector<double>& ts, const std::vector<double>& ys,
                                        const std::function<double(double)>& eval) {
  std::vector<double> zeros;
  for (std::size_t i = 2; i < ts.size(); ++i) {
    double a = ts[i - 1], b = ts[i], fa = ys[i - 1], fb = ys[i];
    if (fb == 0.0) {
      zeros.push_back(b);
      continue;
    }
    if (fa == 0.0 || (fa < 0.0) == (fb < 0.0)) continue;
    for (int it = 0; it < 100 && b - a > 1e-10; ++it) {
      double c = a - fa * (b - a) / (fb - fa);
      const double margin = 0.05 * (b - a);
      if (!(c > a + margin && c < b - margin)) c = 0.5 * (a + b);
      const double fc = eval(c);
      if (fc == 0.0) { a = b = c; break; }
      if ((fc < 0.0) == (fa < 0.0)) a = c, fa = fc; else b = c, fb = fc;
    }
    zeros.push_back(fa == fb ? 0.5 * (a + b) : a - fa * (b - a) / (fb - fa));
  }
  return zeros;
}

inline void fill_curvature(JacobiRecord& rec, double h) {
  const auto& y = rec.y;
  const auto& t = rec.times;
  for (std::size_t i = 2; i + 2 < y.size(); ++i) {
    if (std::abs(y[i]) <= kCurvatureFloor) continue;
    if (std::abs(t[i + 2] - t[i - 2] - 4.0 * h) > 1e-9) continue;  // off-grid endpoint
    const double ypp = (-y[i - 2] + 16.0 * y[i - 1] - 30.0 * y[i] + 16.0 * y[i + 1] - y[i + 2]) / (12.0 * h * h);
    rec.k_times.push_back(rec.times[i]);
    rec.k_values.push_back(-ypp / y[i]);
  }
}

}  // namespace detail

/// Tangent-linear integration along a Zermelo orbit (8-dimensional system).
inline JacobiRecord variational_flow_direct(const MetricSpec& m, const PhaseState& init, double horizon,
                                            const IntegratorOptions& opts = {}) {
  if (!m.is_zermelo()) throw PreconditionError("tangent-linear flow needs a closed-form Hamiltonian");
  opts.validate();
  require_normalized(m, init);
  const double alpha = m.zermelo_alpha();
  auto rhs = [alpha](Chart c, const VecN<8>& y) {
    Vec4 z{y[0], y[1], y[2], y[3]}, d{y[4], y[5], y[6], y[7]};
    auto [g, hv] = zermelo_hessian_vector(c, alpha, z, d);
    return VecN<8>{g[2], g[3], -g[0], -g[1], hv[2], hv[3], -hv[0], -hv[1]};
  };
  const Vec4 d0 = detail::initial_perturbation(m, init);
  VecN<8> y{};
  for (int i = 0; i < 4; ++i) y[i] = init.coords()[i], y[4 + i] = d0[i];
  Chart chart = init.chart;

  struct Stored {
    Chart chart;
    VecN<8> y;
  };
  std::vector<Stored> stored;
  JacobiRecord rec;
  detail::drive<8>(m, chart, y, horizon, opts, rhs, [&](double t, Chart c, const VecN<8>& yy, double) {
    if (!rec.times.empty() && t <= rec.times.back()) return;
    PhaseState s{c, yy[0], yy[1], yy[2], yy[3]};
    rec.times.push_back(t);
    rec.y.push_back(detail::transverse_scalar(m, s, {yy[4], yy[5], yy[6], yy[7]}));
    stored.push_back({c, yy});
  });
  auto eval = [&](double t) {
    std::size_t k = static_cast<std::size_t>(
        std::upper_bound(rec.times.begin(), rec.times.end(), t) - rec.times.begin());
    k = k == 0 ? 0 : k - 1;
    Chart c = stored[k].chart;
    VecN<8> yy = stored[k].y;
    IntegratorOptions o = opts;
    o.sample_interval = std::numeric_limits<double>::infinity();
    if (t > rec.times[k]) detail::drive<8>(m, c, yy, t - rec.times[k], o, rhs, [](double, Chart, const VecN<8>&, double) {});
    return detail::transverse_scalar(m, {c, yy[0], yy[1], yy[2], yy[3]}, {yy[4], yy[5], yy[6], yy[7]});
  };
  rec.conjugate_times = detail::refine_zeros(rec.times, rec.y, eval);
  detail::fill_curvature(rec, opts.sample_interval);
  return rec;
}

/// Jacobi field from central differences of neighbouring orbits of a flow map
/// (exact oracle or conjugated flow). The difference step is in covector units.
inline JacobiRecord variational_flow_difference(const MetricSpec& m, const PhaseState& init, double horizon,
                                                const IntegratorOptions& opts = {}, double eps = 1e-5) {
  opts.validate();
  require_normalized(m, init);
  const Vec4 d0 = detail::initial_perturbation(m, init);
  PhaseState plus = init, minus = init;
  plus.p_theta += eps * d0[2], plus.p_phi += eps * d0[3];
  minus.p_theta -= eps * d0[2], minus.p_phi -= eps * d0[3];
  auto eval = [&](double t) {
    PhaseState c = flow_map_oracle(m, init, t);
    Eigen::Vector4d dp = phase_difference(c, flow_map_oracle(m, plus, t));
    Eigen::Vector4d dm = phase_difference(c, flow_map_oracle(m, minus, t));
    Eigen::Vector4d d = (dp - dm) / (2.0 * eps);
    return detail::transverse_scalar(m, c, {d[0], d[1], d[2], d[3]});
  };
  JacobiRecord rec;
  const long n = static_cast<long>(std::floor(horizon / opts.sample_interval + 1e-9));
  for (long k = 0; k <= n; ++k) {
    const double t = k * opts.sample_interval;
    rec.times.push_back(t);
    rec.y.push_back(k == 0 ? 0.0 : eval(t));
  }
  rec.conjugate_times = detail::refine_zeros(rec.times, rec.y, eval);
  detail::fill_curvature(rec, opts.sample_interval);
  return rec;
}

inline JacobiRecord variational_flow(const MetricSpec& m, const PhaseState& init, double horizon,
                                     const IntegratorOptions& opts = {}, Propagator prop = Propagator::Direct) {
  if (prop == Propagator::Direct && m.is_zermelo()) return variational_flow_direct(m, init, horizon, opts);
  return variational_flow_difference(m, init, horizon, opts);
}

}  // namespace flagsphere
