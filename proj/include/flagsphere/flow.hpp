#pragma once

// Co-geodesic flow: Hamilton's equations of F* on the unit level, integrated
// chart-wise with adaptive Dormand-Prince steps, projective renormalization
// p -> p / F* after every accepted step, and a ZPolar/XPolar switch whenever
// |theta| exceeds the threshold. Also the closed-form Katok flow and the
// conjugated flow of the perturbed metric.

#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "flagsphere/chart.hpp"
#include "flagsphere/errors.hpp"
#include "flagsphere/metric.hpp"
#include "flagsphere/perturbation.hpp"
#include "flagsphere/rk.hpp"
#include "flagsphere/zermelo.hpp"

namespace flagsphere {

struct IntegratorOptions {
  double rel_tol = 1e-10;
  double abs_tol = 1e-12;
  double max_step = 0.05;
  double chart_switch_threshold = 1.0;
  double sample_interval = 0.01;

  void validate() const {
    if (!(rel_tol > 0 && abs_tol > 0 && max_step > 0 && chart_switch_threshold > 0 && sample_interval > 0)) {
      throw InvalidParameters("integrator options must be strictly positive");
    }
    if (!(chart_switch_threshold < kPi / 2 - 0.2)) {
      throw InvalidParameters("chart switch threshold must stay below pi/2 - 0.2");
    }
  }
};

/// How orbits are produced. Direct integrates Hamilton's equations of F*;
/// Oracle uses the closed-form Katok flow, or its conjugate by the
/// deformation map for the perturbed metric.
enum class Propagator { Direct, Oracle };

struct Sample {
  double t = 0.0;
  PhaseState state;
  double phi_unwrapped = 0.0;
};

struct IntegratorStats {
  long steps = 0;
  long rejected = 0;
  double max_energy_drift = 0.0;     // max |F* - 1| over the stored samples
  double max_step_correction = 0.0;  // max |F* - 1| before each renormalization
  int chart_switches = 0;
};

struct Trajectory {
  MetricSpec metric;
  std::vector<Sample> samples;
  IntegratorStats stats;

  double length() const { return samples.empty() ? 0.0 : samples.back().t; }
  const Sample& front() const { return samples.front(); }
  const Sample& back() const { return samples.back(); }
};

inline constexpr double kNormalizedTol = 1e-9;

inline void require_normalized(const MetricSpec& m, const PhaseState& s, double tol = kNormalizedTol) {
  const double h = dual_norm(m, s);
  if (!(std::abs(h - 1.0) <= tol)) {
    throw NotNormalized("initial state has F* = " + std::to_string(h) + ", expected 1");
  }
}

/// Longitude of the base point in the ZPolar chart.
inline double z_longitude(const PhaseState& s) {
  if (s.chart == Chart::ZPolar) return s.phi;
  Eigen::Vector3d x = base_point(s);
  return std::atan2(x.y(), x.x());
}

namespace detail {

inline PhaseState state_of(Chart c, const Vec4& z) { return {c, z[0], z[1], z[2], z[3]}; }

inline Vec4 hamiltonian_field(const MetricSpec& m, Chart c, const Vec4& z) {
  if (m.is_zermelo()) return zermelo_vector_field(c, m.zermelo_alpha(), z);
  Vec4 g = dual_gradient(m, state_of(c, z));
  return {g[2], g[3], -g[0], -g[1]};
}

/// Pushes the tangent vector dz at s forward through the change of chart.
inline Vec4 push_tangent(const PhaseState& s, const Vec4& dz, Chart to) {
  if (s.chart == to) return dz;
  using D = Dual<double, 1>;
  Vec4 z = s.coords();
  std::array<D, 4> zz;
  for (int i = 0; i < 4; ++i) zz[i] = D(z[i], {dz[i]});
  auto xw = to_ambient_t(s.chart, zz);
  auto out = from_ambient_t(to, xw[0], xw[1]);
  return {out[0].d[0], out[1].d[0], out[2].d[0], out[3].d[0]};
}

// Adaptive driver shared by the plain (N = 4) and variational (N = 8) flows.
// The first four components are the chart coordinates; the remainder is a
// tangent vector that is carried through chart changes.
template <std::size_t N, class Rhs, class Observer>
IntegratorStats drive(const MetricSpec& m, Chart& chart, VecN<N>& y, double t_end, const IntegratorOptions& opts,
                      Rhs&& rhs, Observer&& observe) {
  IntegratorStats st;
  const double dir = t_end < 0.0 ? -1.0 : 1.0;
  const double tau_end = std::abs(t_end);
  const double interval = opts.sample_interval;
  double tau = 0.0;
  double phi_hat = z_longitude(state_of(chart, {y[0], y[1], y[2], y[3]}));
  double h = std::min(opts.max_step, 0.01);
  long k = 0;

  auto signed_rhs = [&](const VecN<N>& yy) {
    VecN<N> f = rhs(chart, yy);
    if (dir < 0.0)
      for (auto& v : f) v = -v;
    return f;
  };
  auto switch_if_needed = [&]() {
    if (std::abs(y[0]) <= opts.chart_switch_threshold) return;
    PhaseState s = state_of(chart, {y[0], y[1], y[2], y[3]});
    const Chart to = other(chart);
    if constexpr (N == 8) {
      Vec4 d = push_tangent(s, {y[4], y[5], y[6], y[7]}, to);
      for (int i = 0; i < 4; ++i) y[4 + i] = d[i];
    }
    PhaseState t = to_chart(s, to);
    y[0] = t.theta, y[1] = t.phi, y[2] = t.p_theta, y[3] = t.p_phi;
    chart = to;
    ++st.chart_switches;
  };

  switch_if_needed();
  observe(0.0, chart, y, phi_hat);
  // Generous: a healthy run needs about 100 attempts per unit length.
  const double budget = 1e6 + 1e4 * tau_end;
  while (tau < tau_end) {
    if (st.steps + st.rejected > budget) throw ToleranceFailure("step budget exhausted; tolerances too tight?");
    double next_event = tau_end;
    if (std::isfinite(interval)) next_event = std::min(tau_end, (k + 1) * interval);
    if (tau_end - next_event < 1e-12 * std::max(1.0, tau_end)) next_event = tau_end;
    const double h_free = std::min(h, opts.max_step);
    const double h_try = std::min(h_free, next_event - tau);
    const bool reaches = h_try == next_event - tau;
    VecN<N> y_new;
    const double err = dopri5_step<N>(signed_rhs, y, h_try, y_new, opts.rel_tol, opts.abs_tol);
    if (err > 1.0) {
      ++st.rejected;
      h = next_step_size(h_try, err);
      if (h < 1e-14 * std::max(1.0, tau_end)) throw ToleranceFailure("step size underflow");
      continue;
    }
    ++st.steps;
    // Unwrapped ZPolar longitude.
    if (chart == Chart::ZPolar) {
      phi_hat += y_new[1] - y[1];
    } else {
      phi_hat += angle_diff(z_longitude(state_of(chart, {y_new[0], y_new[1], y_new[2], y_new[3]})),
                            z_longitude(state_of(chart, {y[0], y[1], y[2], y[3]})));
    }
    y = y_new;
    y[1] = wrap_angle(y[1]);
    // Projective renormalization onto the unit level.
    const double hval = dual_norm(m, state_of(chart, {y[0], y[1], y[2], y[3]}));
    if (!(hval > 0.0) || !std::isfinite(hval)) throw NumericalBreakdown("dual norm left the admissible range");
    st.max_step_correction = std::max(st.max_step_correction, std::abs(hval - 1.0));
    y[2] /= hval;
    y[3] /= hval;
    switch_if_needed();
    if (h_try == h_free) h = next_step_size(h_try, err);  // clipped steps keep the proposal
    if (reaches) {
      tau = next_event;
      ++k;
      observe(dir * tau, chart, y, phi_hat);
    } else {
      tau += h_try;
    }
  }
  return st;
}

}  // namespace detail

/// Integrates the co-geodesic flow for the given arc length, sampling at the
/// option's interval (and at the endpoint).
inline Trajectory integrate_direct(const MetricSpec& m, const PhaseState& init, double length,
                                   const IntegratorOptions& opts = {}) {
  opts.validate();
  if (!(length > 0.0)) throw PreconditionError("integrate: length must be positive");
  require_normalized(m, init);
  Trajectory tr{m, {}, {}};
  tr.samples.reserve(static_cast<std::size_t>(length / opts.sample_interval) + 2);
  Chart chart = init.chart;
  VecN<4> y = init.coords();
  tr.stats = detail::drive<4>(
      m, chart, y, length, opts, [&](Chart c, const VecN<4>& z) { return detail::hamiltonian_field(m, c, z); },
      [&](double t, Chart c, const VecN<4>& z, double phi_hat) {
        if (!tr.samples.empty() && t <= tr.samples.back().t) return;
        tr.samples.push_back({t, PhaseState::from(c, z), phi_hat});
      });
  for (const auto& s : tr.samples) {
    tr.stats.max_energy_drift = std::max(tr.stats.max_energy_drift, std::abs(dual_norm(m, s.state) - 1.0));
  }
  return tr;
}

/// Endpoint of the direct flow after parameter time t (negative t integrates backwards).
inline PhaseState flow_map_direct(const MetricSpec& m, const PhaseState& init, double t,
                                  const IntegratorOptions& opts = {}) {
  if (t == 0.0) return init;
  IntegratorOptions o = opts;
  o.sample_interval = std::numeric_limits<double>::infinity();
  Chart chart = init.chart;
  VecN<4> y = init.coords();
  PhaseState out = init;
  detail::drive<4>(
      m, chart, y, t, o, [&](Chart c, const VecN<4>& z) { return detail::hamiltonian_field(m, c, z); },
      [&](double, Chart c, const VecN<4>& z, double) { out = PhaseState::from(c, z); });
  return out;
}

/// Exact flow of F*_alpha = F*_round + alpha xi(X): the round co-geodesic flow
/// followed by rotation through the angle alpha t about the z-axis.
inline PhaseState oracle_katok(double alpha, const PhaseState& init, double t) {
  if (!(std::abs(alpha) < 1.0)) throw InadmissibleAlpha("oracle_katok requires |alpha| < 1");
  const double h = zermelo_hamiltonian(init.chart, alpha, init.coords());
  if (!(std::abs(h - 1.0) <= 1e-8)) throw NotNormalized("oracle_katok: initial state is not on the unit level");
  AmbientState a = to_ambient(init);
  const double r = a.w.norm();
  const Eigen::Vector3d u = a.w / r;
  const double ct = std::cos(t), st = std::sin(t);
  Eigen::Vector3d x = a.x * ct + u * st;
  Eigen::Vector3d w = r * (u * ct - a.x * st);
  const Eigen::Matrix3d rot = Eigen::AngleAxisd(alpha * t, Eigen::Vector3d::UnitZ()).toRotationMatrix();
  return best_chart({rot * x, rot * w});
}

/// Flow of the perturbed metric by conjugation: Phi_{-t0} o (Katok flow) o Phi_{t0}.
inline PhaseState conjugated_flow(const CounterexampleParams& prm, const PhaseState& init, double t) {
  PhaseState a = deformation_map(init, prm.t0, prm);
  PhaseState b = oracle_katok(prm.base_alpha, a, t);
  return deformation_map(b, -prm.t0, prm);
}

/// Closed-form (or conjugated closed-form) flow of a metric, when one exists.
inline PhaseState flow_map_oracle(const MetricSpec& m, const PhaseState& init, double t) {
  if (m.is_zermelo()) return oracle_katok(m.zermelo_alpha(), init, t);
  if (m.kind() == MetricSpec::Kind::Perturbed) return conjugated_flow(m.params(), init, t);
  throw PreconditionError("no closed-form flow for " + m.to_string());
}

inline PhaseState flow_map(const MetricSpec& m, const PhaseState& init, double t, const IntegratorOptions& opts = {},
                           Propagator prop = Propagator::Direct) {
  if (prop == Propagator::Oracle) return flow_map_oracle(m, init, t);
  return flow_map_direct(m, init, t, opts);
}

/// Samples the oracle flow on the option's sampling grid.
inline Trajectory integrate_oracle(const MetricSpec& m, const PhaseState& init, double length,
                                   const IntegratorOptions& opts = {}) {
  opts.validate();
  if (!(length > 0.0)) throw PreconditionError("integrate: length must be positive");
  require_normalized(m, init);
  Trajectory tr{m, {}, {}};
  const long n = static_cast<long>(std::floor(length / opts.sample_interval + 1e-9));
  tr.samples.reserve(static_cast<std::size_t>(n) + 2);
  double phi_hat = z_longitude(init);
  double prev_lon = phi_hat;
  // The perturbed orbit is the deformed image of one Katok orbit; deform the
  // initial state once.
  std::optional<PhaseState> lifted;
  if (m.kind() == MetricSpec::Kind::Perturbed) lifted = deformation_map(init, m.params().t0, m.params());
  auto push = [&](double t) {
    PhaseState s = init;
    if (t != 0.0) {
      s = lifted ? deformation_map(oracle_katok(m.params().base_alpha, *lifted, t), -m.params().t0, m.params())
                 : flow_map_oracle(m, init, t);
    }
    const double lon = z_longitude(s);
    phi_hat += angle_diff(lon, prev_lon);
    prev_lon = lon;
    tr.samples.push_back({t, s, phi_hat});
  };
  for (long k = 0; k <= n; ++k) push(k * opts.sample_interval);
  if (length - tr.samples.back().t > 1e-12 * std::max(1.0, length)) push(length);
  for (const auto& s : tr.samples) {
    tr.stats.max_energy_drift = std::max(tr.stats.max_energy_drift, std::abs(dual_norm(m, s.state) - 1.0));
  }
  return tr;
}

inline Trajectory integrate(const MetricSpec& m, const PhaseState& init, double length,
                            const IntegratorOptions& opts = {}, Propagator prop = Propagator::Direct) {
  if (prop == Propagator::Oracle) return integrate_oracle(m, init, length, opts);
  return integrate_direct(m, init, length, opts);
}

/// Angular distance between two points of the unit sphere.
inline double sphere_distance(const Eigen::Vector3d& a, const Eigen::Vector3d& b) {
  return std::atan2(a.cross(b).norm(), a.dot(b));
}

struct PsiResult {
  double theta = 0.0;  // ZPolar coordinates of the centroid endpoint
  double phi = 0.0;
  double max_spread = 0.0;
};

/// Endpoints of `directions` unit geodesics of length pi from one base point.
inline PsiResult psi_map(const MetricSpec& m, double theta, double phi, int directions,
                         const IntegratorOptions& opts = {}, Propagator prop = Propagator::Direct) {
  if (directions < 3) throw PreconditionError("psi_map needs at least 3 directions");
  const Chart chart = std::abs(theta) <= 1.0 ? Chart::ZPolar : Chart::XPolar;
  PhaseState base{Chart::ZPolar, theta, phi, 0.0, 1.0};
  AmbientState amb = to_ambient(base);
  PhaseState local = from_ambient(amb, chart);
  std::vector<Eigen::Vector3d> ends;
  ends.reserve(directions);
  for (int i = 0; i < directions; ++i) {
    const double ang = kTwoPi * i / directions;
    PhaseState s = unit_covector(m, chart, local.theta, local.phi, ang);
    ends.push_back(base_point(flow_map(m, s, kPi, opts, prop)));
  }
  Eigen::Vector3d c = Eigen::Vector3d::Zero();
  for (const auto& e : ends) c += e;
  c.normalize();
  PsiResult r;
  r.theta = std::asin(std::clamp(c.z(), -1.0, 1.0));
  r.phi = wrap_angle(std::atan2(c.y(), c.x()));
  for (std::size_t i = 0; i < ends.size(); ++i)
    for (std::size_t j = i + 1; j < ends.size(); ++j) r.max_spread = std::max(r.max_spread, sphere_distance(ends[i], ends[j]));
  return r;
}

/// Uniformly distributed base point and covector direction on the unit level.
inline PhaseState random_unit_state(const MetricSpec& m, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> angle(0.0, kTwoPi);
  Eigen::Vector3d x(gauss(rng), gauss(rng), gauss(rng));
  x.normalize();
  const Chart chart = std::abs(x.z()) <= std::sin(1.0) ? Chart::ZPolar : Chart::XPolar;
  PhaseState p = from_ambient({x, Eigen::Vector3d::Zero()}, chart);
  return unit_covector(m, chart, p.theta, p.phi, angle(rng));
}

}  // namespace flagsphere
