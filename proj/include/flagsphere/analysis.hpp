#pragma once

// Observables extracted from orbits: closed geodesics (recurrence scan plus
// Newton refinement), winding and rotation numbers, intersection counts,
// reversibility defects, first-integral drift, lambda from the return map,
// and a separation-growth proxy for entropy.

#include <algorithm>
#include <array>
#include <cstdint>
#include <cmath>
#include <limits>
#include <optional>
#include <unordered_map>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "flagsphere/chart.hpp"
#include "flagsphere/errors.hpp"
#include "flagsphere/flow.hpp"
#include "flagsphere/metric.hpp"
#include "flagsphere/spectrum.hpp"

namespace flagsphere {

struct ClosedGeodesicRecord {
  double length = 0.0;
  int winding = 0;
  double residual = 0.0;
  bool exceptional = false;
  bool on_equator = false;
  double max_abs_latitude = 0.0;
  PhaseState init;
  std::vector<Sample> samples;  // one period, including both endpoints

  std::vector<Eigen::Vector3d> polyline() const {
    std::vector<Eigen::Vector3d> out;
    out.reserve(samples.size());
    for (const auto& s : samples) out.push_back(base_point(s.state));
    return out;
  }
};

struct ClosureOptions {
  double coarse = 0.05;         // recurrence threshold of the scan
  double floor = 1e-2;          // period-only residual required before the full solve
  double tol = 1e-8;
  double jacobian_step = 1e-7;
  int max_iterations = 25;
  double max_shift = 0.05;      // refined state must stay this close to the start
  double polyline_interval = 0.01;
  Propagator propagator = Propagator::Direct;
  IntegratorOptions integrator{};
};

inline constexpr double kOnEquatorTol = 1e-6;
inline constexpr double kWindingSlack = 0.05;

/// Shorter than the common period (always true when lambda is irrational).
inline bool is_exceptional_length(const MetricSpec& m, double length) {
  const auto cp = spectrum(m.lambda()).common_period();
  return !cp || length < *cp - 1e-6;
}

namespace detail {

inline Eigen::Vector4d return_residual(const MetricSpec& m, const PhaseState& z, double T, const ClosureOptions& o) {
  return phase_difference(z, flow_map(m, z, T, o.integrator, o.propagator));
}

inline PhaseState shifted(const MetricSpec& m, const PhaseState& z, const Eigen::Vector4d& dz) {
  PhaseState s{z.chart, z.theta + dz[0], wrap_angle(z.phi + dz[1]), z.p_theta + dz[2], z.p_phi + dz[3]};
  return normalize(m, s);
}

// Period-only Gauss-Newton from a sample near the return.
inline std::pair<double, double> refine_period(const MetricSpec& m, const PhaseState& x0, const Sample& near,
                                               const ClosureOptions& o) {
  double s = 0.0;
  auto r = [&](double ds) {
    return phase_difference(x0, flow_map(m, near.state, ds, o.integrator, o.propagator));
  };
  Eigen::Vector4d rs = r(s);
  constexpr double h = 1e-6;
  for (int it = 0; it < 8; ++it) {
    const Eigen::Vector4d d = (r(s + h) - r(s - h)) / (2.0 * h);
    const double dd = d.squaredNorm();
    if (!(dd > 0.0)) break;
    const double step = -rs.dot(d) / dd;
    const double s_new = s + std::clamp(step, -0.1, 0.1);
    const Eigen::Vector4d r_new = r(s_new);
    if (r_new.norm() >= rs.norm()) break;
    s = s_new;
    rs = r_new;
    if (std::abs(step) < 1e-12) break;
  }
  return {near.t + s, rs.norm()};
}

// Damped min-norm Newton on (state, period) for Phi_T(z) = z on the unit level.
inline std::optional<std::pair<PhaseState, double>> refine_orbit(const MetricSpec& m, const PhaseState& x0, double T,
                                                                 const ClosureOptions& o) {
  PhaseState z = x0;
  Eigen::Vector4d r = return_residual(m, z, T, o);
  for (int it = 0; it < o.max_iterations && r.norm() > o.tol; ++it) {
    Eigen::Matrix<double, 4, 5> J;
    for (int i = 0; i < 4; ++i) {
      Eigen::Vector4d e = Eigen::Vector4d::Zero();
      e[i] = o.jacobian_step;
      PhaseState zi = shifted(m, z, e);
      // Residuals compare in z's chart so the columns are consistent.
      Eigen::Vector4d ri = phase_difference(z, flow_map(m, zi, T, o.integrator, o.propagator)) - phase_difference(z, zi);
      J.col(i) = (ri - r) / o.jacobian_step;
    }
    J.col(4) = (return_residual(m, z, T + o.jacobian_step, o) - r) / o.jacobian_step;
    Eigen::JacobiSVD<Eigen::Matrix<double, 4, 5>> svd(J, Eigen::ComputeFullU | Eigen::ComputeFullV);
    svd.setThreshold(1e-7);
    const Eigen::Matrix<double, 5, 1> delta = -svd.solve(r);
    bool improved = false;
    for (double damp = 1.0; damp >= 1.0 / 64; damp *= 0.5) {
      const Eigen::Vector4d dz = damp * delta.head<4>();
      PhaseState zn = shifted(m, z, dz);
      const double Tn = T + damp * delta[4];
      if (!(Tn > 0.0)) continue;
      Eigen::Vector4d rn = return_residual(m, zn, Tn, o);
      if (rn.norm() < r.norm()) {
        z = zn, T = Tn, r = rn;
        improved = true;
        break;
      }
    }
    if (!improved) break;
    if (phase_distance(x0, z) > o.max_shift) return std::nullopt;
  }
  if (!(r.norm() <= o.tol)) return std::nullopt;
  return std::make_pair(z, T);
}

}  // namespace detail

/// Winding sign convention: phi-hat advance measured in the orientation for
/// which the rotation angle is the normalized one (lambda_raw <= 1/2), so the
/// orientation of phi is flipped when lambda_raw > 1/2.
inline int winding_from_advance(const MetricSpec& m, double phi_advance, bool* ok = nullptr) {
  const double turns = phi_advance / kTwoPi;
  const double n = std::round(turns);
  if (ok) *ok = std::abs(turns - n) <= kWindingSlack;
  const int w = static_cast<int>(n);
  return m.lambda_raw() > 0.5 ? -w : w;
}

/// Builds a record for a refined periodic orbit. Returns nothing when the
/// winding is not close to an integer.
inline std::optional<ClosedGeodesicRecord> make_record(const MetricSpec& m, const PhaseState& z, double T,
                                                       const ClosureOptions& o) {
  IntegratorOptions io = o.integrator;
  io.sample_interval = o.polyline_interval;
  Trajectory tr = integrate(m, z, T, io, o.propagator);
  ClosedGeodesicRecord rec;
  rec.length = T;
  bool ok = false;
  rec.winding = winding_from_advance(m, tr.back().phi_unwrapped - tr.front().phi_unwrapped, &ok);
  if (!ok) return std::nullopt;
  rec.residual = phase_distance(z, tr.back().state);
  rec.exceptional = is_exceptional_length(m, T);
  for (const auto& s : tr.samples) rec.max_abs_latitude = std::max(rec.max_abs_latitude, std::abs(z_latitude(s.state)));
  rec.on_equator = rec.max_abs_latitude <= kOnEquatorTol;
  rec.init = z;
  rec.samples = std::move(tr.samples);
  return rec;
}

/// Smallest refined period of the orbit starting at the trajectory's first sample.
inline std::optional<ClosedGeodesicRecord> detect_closure(const Trajectory& traj, const ClosureOptions& o = {}) {
  const auto& smp = traj.samples;
  if (smp.size() < 3) return std::nullopt;
  const MetricSpec& m = traj.metric;
  const PhaseState x0 = smp.front().state;
  std::vector<double> d(smp.size());
  for (std::size_t k = 0; k < smp.size(); ++k) d[k] = phase_distance(x0, smp[k].state);
  bool departed = false;
  for (std::size_t k = 1; k < smp.size(); ++k) {
    if (d[k] > 2.0 * o.coarse) departed = true;
    const bool rising = k + 1 < smp.size() && d[k] > d[k + 1];
    if (!departed || !(d[k] < o.coarse) || d[k] > d[k - 1] || rising) continue;
    auto [T, res] = detail::refine_period(m, x0, smp[k], o);
    if (!(res < o.floor)) continue;
    auto sol = detail::refine_orbit(m, x0, T, o);
    if (!sol) continue;
    auto rec = make_record(m, sol->first, sol->second, o);
    if (rec) return rec;
  }
  return std::nullopt;
}

inline std::optional<ClosedGeodesicRecord> detect_closure(const Trajectory& traj, double tol) {
  ClosureOptions o;
  o.tol = tol;
  return detect_closure(traj, o);
}

// ---------------------------------------------------------------------------
// Closed-geodesic search

struct SearchOptions {
  std::vector<double> latitudes{-0.8, -0.25, 0.0, 0.5};
  int longitudes = 6;
  int headings = 16;
  double horizon = 0.0;  // 0: eight common periods, or 500 when lambda is irrational
  double scan_interval = 0.02;
  double dedup = 1e-4;
  ClosureOptions closure{};
};

inline double default_horizon(const MetricSpec& m) {
  const auto cp = spectrum(m.lambda()).common_period();
  return cp ? 8.0 * *cp : 500.0;
}

/// Unit covectors of the search grid (heading 0 = east).
inline std::vector<PhaseState> search_seeds(const MetricSpec& m, const SearchOptions& g) {
  std::vector<PhaseState> seeds;
  for (double lat : g.latitudes)
    for (int i = 0; i < g.longitudes; ++i)
      for (int j = 0; j < g.headings; ++j)
        seeds.push_back(unit_covector(m, Chart::ZPolar, lat, kTwoPi * i / g.longitudes, kTwoPi * j / g.headings));
  return seeds;
}

namespace detail {

template <int D>
double point_segment_distance(const Eigen::Matrix<double, D, 1>& p, const Eigen::Matrix<double, D, 1>& a,
                              const Eigen::Matrix<double, D, 1>& b) {
  const Eigen::Matrix<double, D, 1> ab = b - a;
  const double l2 = ab.squaredNorm();
  const double s = l2 > 0.0 ? std::clamp((p - a).dot(ab) / l2, 0.0, 1.0) : 0.0;
  return (p - (a + s * ab)).norm();
}

inline std::vector<Eigen::Matrix<double, 6, 1>> phase_polyline(const ClosedGeodesicRecord& r) {
  std::vector<Eigen::Matrix<double, 6, 1>> out;
  out.reserve(r.samples.size());
  for (const auto& s : r.samples) out.push_back(ambient6(s.state));
  return out;
}

}  // namespace detail

/// Phase-space polyline of a record, indexed by a coarse grid on the base
/// point so that point-to-curve queries only visit nearby segments.
struct OrbitFootprint {
  static constexpr double kCell = 0.05;  // longer than any sampled segment

  double length = 0.0;
  std::vector<Eigen::Matrix<double, 6, 1>> points;
  std::unordered_map<std::int64_t, std::vector<std::uint32_t>> cells;

  explicit OrbitFootprint(const ClosedGeodesicRecord& r) : length(r.length), points(detail::phase_polyline(r)) {
    for (std::size_t i = 0; i + 1 < points.size(); ++i) cells[key(cell_of(points[i]))].push_back(static_cast<std::uint32_t>(i));
  }

  static std::array<std::int64_t, 3> cell_of(const Eigen::Matrix<double, 6, 1>& p) {
    return {static_cast<std::int64_t>(std::floor(p[0] / kCell)), static_cast<std::int64_t>(std::floor(p[1] / kCell)),
            static_cast<std::int64_t>(std::floor(p[2] / kCell))};
  }
  static std::int64_t key(const std::array<std::int64_t, 3>& c) { return ((c[0] + 64) * 256 + (c[1] + 64)) * 256 + (c[2] + 64); }

  double distance_to(const Eigen::Matrix<double, 6, 1>& p) const {
    double best = std::numeric_limits<double>::infinity();
    const auto c = cell_of(p);
    for (int i = -1; i <= 1; ++i)
      for (int j = -1; j <= 1; ++j)
        for (int k = -1; k <= 1; ++k) {
          auto it = cells.find(key({c[0] + i, c[1] + j, c[2] + k}));
          if (it == cells.end()) continue;
          for (auto s : it->second) best = std::min(best, detail::point_segment_distance<6>(p, points[s], points[s + 1]));
        }
    return best;
  }

  bool covers(const OrbitFootprint& o, double tol) const {
    for (const auto& p : o.points)
      if (distance_to(p) >= tol) return false;
    return true;
  }

  bool same_as(const OrbitFootprint& o, double tol) const {
    if (std::abs(length - o.length) > tol) return false;
    return covers(o, tol) && o.covers(*this, tol);
  }
};

/// Same orbit: lengths agree and the phase-space Hausdorff distance is below tol.
inline bool same_orbit(const ClosedGeodesicRecord& a, const ClosedGeodesicRecord& b, double tol = 1e-4) {
  return OrbitFootprint(a).same_as(OrbitFootprint(b), tol);
}

inline std::vector<ClosedGeodesicRecord> find_closed_geodesics(const MetricSpec& m, const SearchOptions& g = {}) {
  const double horizon = g.horizon > 0.0 ? g.horizon : default_horizon(m);
  IntegratorOptions io = g.closure.integrator;
  io.sample_interval = g.scan_interval;
  std::vector<ClosedGeodesicRecord> found;
  std::vector<OrbitFootprint> prints;
  for (const PhaseState& seed : search_seeds(m, g)) {
    Trajectory tr = integrate(m, seed, horizon, io, g.closure.propagator);
    auto rec = detect_closure(tr, g.closure);
    if (!rec) continue;
    OrbitFootprint fp(*rec);
    bool dup = false;
    for (const auto& f : prints)
      if (f.same_as(fp, g.dedup)) {
        dup = true;
        break;
      }
    if (dup) continue;
    prints.push_back(std::move(fp));
    found.push_back(std::move(*rec));
  }
  std::stable_sort(found.begin(), found.end(),
                   [](const ClosedGeodesicRecord& a, const ClosedGeodesicRecord& b) { return a.length < b.length; });
  return found;
}

// ---------------------------------------------------------------------------
// Rotation number

struct Extremum {
  double t = 0.0;
  double theta = 0.0;  // z-latitude at the extremum
  double phi_hat = 0.0;
};

namespace detail {

// Vertex of the parabola through (-h, a), (0, b), (h, c): offset and value.
inline std::pair<double, double> parabola_vertex(double a, double b, double c, double h) {
  const double den = a - 2.0 * b + c;
  if (den == 0.0) return {0.0, b};
  const double u = 0.5 * (a - c) / den;
  return {u * h, b - 0.25 * (a - c) * u};
}

inline double quadratic_at(double a, double b, double c, double u) {
  return b + 0.5 * (c - a) * u + 0.5 * (a - 2.0 * b + c) * u * u;
}

}  // namespace detail

/// Successive extrema of the z-latitude along an orbit, refined on a fine
/// three-point stencil around each coarse vertex.
inline std::vector<Extremum> latitude_extrema(const MetricSpec& m, const Trajectory& tr,
                                              const IntegratorOptions& opts = {},
                                              Propagator prop = Propagator::Direct) {
  std::vector<Extremum> out;
  const auto& s = tr.samples;
  for (std::size_t i = 1; i + 1 < s.size(); ++i) {
    const double a = z_latitude(s[i - 1].state), b = z_latitude(s[i].state), c = z_latitude(s[i + 1].state);
    const bool is_max = b > a && b >= c, is_min = b < a && b <= c;
    if (!is_max && !is_min) continue;
    const double h = s[i].t - s[i - 1].t;
    if (std::abs(s[i + 1].t - s[i].t - h) > 1e-9) continue;
    auto [dt, v] = detail::parabola_vertex(a, b, c, h);
    // Fine stencil centred on the coarse vertex.
    constexpr double hf = 1e-3;
    PhaseState mid = flow_map(m, s[i].state, dt, opts, prop);
    const double fa = z_latitude(flow_map(m, mid, -hf, opts, prop));
    const double fb = z_latitude(mid);
    const double fc = z_latitude(flow_map(m, mid, hf, opts, prop));
    auto [dt2, v2] = detail::parabola_vertex(fa, fb, fc, hf);
    const double t_ext = s[i].t + dt + dt2;
    const double u = (t_ext - s[i].t) / h;
    const double ph = detail::quadratic_at(s[i - 1].phi_unwrapped, s[i].phi_unwrapped, s[i + 1].phi_unwrapped, u);
    (void)v;
    out.push_back({t_ext, v2, ph});
  }
  return out;
}

/// Mean phi-hat advance between successive latitude extrema over 2 pi,
/// normalized into (0, 1/2].
inline double rotation_number(const MetricSpec& m, const PhaseState& init, int half_oscillations,
                              const IntegratorOptions& opts = {}, Propagator prop = Propagator::Direct) {
  if (half_oscillations < 1) throw PreconditionError("rotation_number: need at least one half oscillation");
  double length = (half_oscillations + 2) * 1.5 * kPi;
  for (int attempt = 0; attempt < 4; ++attempt, length *= 2.0) {
    Trajectory tr = integrate(m, init, length, opts, prop);
    double amp = 0.0;
    for (const auto& s : tr.samples) amp = std::max(amp, std::abs(z_latitude(s.state)));
    if (amp < kOnEquatorTol) throw EquatorialOrbit("rotation_number: orbit stays on the equator");
    auto ex = latitude_extrema(m, tr, opts, prop);
    if (static_cast<int>(ex.size()) < half_oscillations + 1) continue;
    const double adv = (ex[half_oscillations].phi_hat - ex[0].phi_hat) / half_oscillations;
    double x = std::abs(adv) / kTwoPi;
    x -= std::floor(x);
    return std::min(x, 1.0 - x);
  }
  throw NumericalBreakdown("rotation_number: too few latitude extrema");
}

// ---------------------------------------------------------------------------
// Intersections and reversibility

namespace detail {

inline bool on_arc(const Eigen::Vector3d& a, const Eigen::Vector3d& b, const Eigen::Vector3d& n, const Eigen::Vector3d& x) {
  constexpr double eps = 1e-14;
  return a.cross(x).dot(n) >= -eps && x.cross(b).dot(n) >= -eps && x.dot(a + b) > 0.0;
}

/// Great-circle distance from p to the short arc ab.
inline double point_arc_distance(const Eigen::Vector3d& p, const Eigen::Vector3d& a, const Eigen::Vector3d& b) {
  Eigen::Vector3d n = a.cross(b);
  const double nn = n.norm();
  const double ends = std::min(sphere_distance(p, a), sphere_distance(p, b));
  if (nn < 1e-15) return ends;
  n /= nn;
  Eigen::Vector3d q = p - p.dot(n) * n;
  if (q.norm() < 1e-15) return ends;
  q.normalize();
  if (!on_arc(a, b, n, q)) return ends;
  return std::asin(std::clamp(std::abs(p.dot(n)), 0.0, 1.0));
}

inline double point_curve_distance(const Eigen::Vector3d& p, const std::vector<Eigen::Vector3d>& pl) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < pl.size(); ++i) best = std::min(best, point_arc_distance(p, pl[i], pl[i + 1]));
  return best;
}

inline bool images_within(const std::vector<Eigen::Vector3d>& a, const std::vector<Eigen::Vector3d>& b, double cut) {
  for (const auto& p : a)
    if (point_curve_distance(p, b) >= cut) return false;
  return true;
}

}  // namespace detail

inline constexpr double kIdenticalImageTol = 1e-6;
inline constexpr double kCrossingMerge = 1e-3;

/// Transversal crossings of the two base curves.
inline int count_intersections(const ClosedGeodesicRecord& a, const ClosedGeodesicRecord& b) {
  const auto pa = a.polyline(), pb = b.polyline();
  if (pa.size() < 2 || pb.size() < 2) throw PreconditionError("count_intersections: polylines are too short");
  if (detail::images_within(pa, pb, kIdenticalImageTol) && detail::images_within(pb, pa, kIdenticalImageTol)) {
    throw IdenticalImages("count_intersections: the two curves have the same image");
  }
  std::vector<Eigen::Vector3d> hits;
  for (std::size_t i = 0; i + 1 < pa.size(); ++i) {
    const Eigen::Vector3d& A = pa[i];
    const Eigen::Vector3d& B = pa[i + 1];
    const Eigen::Vector3d n1 = A.cross(B);
    const double reach1 = sphere_distance(A, B);
    for (std::size_t j = 0; j + 1 < pb.size(); ++j) {
      const Eigen::Vector3d& C = pb[j];
      const Eigen::Vector3d& D = pb[j + 1];
      if (sphere_distance(A, C) > reach1 + sphere_distance(C, D) + 1e-12) continue;
      const Eigen::Vector3d n2 = C.cross(D);
      Eigen::Vector3d L = n1.cross(n2);
      if (L.norm() < 1e-18) continue;  // collinear pieces are not transversal
      L.normalize();
      for (const Eigen::Vector3d& X : {L, Eigen::Vector3d(-L)}) {
        if (detail::on_arc(A, B, n1, X) && detail::on_arc(C, D, n2, X)) hits.push_back(X);
      }
    }
  }
  std::vector<Eigen::Vector3d> merged;
  for (const auto& h : hits) {
    bool near = false;
    for (const auto& m : merged)
      if (sphere_distance(h, m) < kCrossingMerge) near = true;
    if (!near) merged.push_back(h);
  }
  return static_cast<int>(merged.size());
}

/// Minimum spherical distance between two base curves.
inline double curve_separation(const ClosedGeodesicRecord& a, const ClosedGeodesicRecord& b) {
  const auto pa = a.polyline(), pb = b.polyline();
  double best = std::numeric_limits<double>::infinity();
  for (const auto& p : pa) best = std::min(best, detail::point_curve_distance(p, pb));
  return best;
}

/// Launches the geodesic with the reversed tangent at the record's first
/// point and returns its maximal distance from the record's image over one
/// record length.
inline double reversibility_defect(const MetricSpec& m, const ClosedGeodesicRecord& rec,
                                   const IntegratorOptions& opts = {}, Propagator prop = Propagator::Direct) {
  if (rec.samples.empty()) throw PreconditionError("reversibility_defect: empty record");
  const PhaseState& s = rec.samples.front().state;
  const Velocity v = legendre_dual_velocity(m, s);
  PhaseState r = covector_for_velocity(m, s.chart, s.theta, s.phi, {-v.v_theta, -v.v_phi});
  r = normalize(m, r);
  IntegratorOptions io = opts;
  io.sample_interval = 0.01;
  Trajectory tr = integrate(m, r, rec.length, io, prop);
  const auto pl = rec.polyline();
  double worst = 0.0;
  for (const auto& smp : tr.samples) worst = std::max(worst, detail::point_curve_distance(base_point(smp.state), pl));
  return worst;
}

// ---------------------------------------------------------------------------
// First integrals, lambda, separation growth

struct IntegralDrift {
  double energy = 0.0;    // max |F* - F*(start)|
  double momentum = 0.0;  // max |p_phi - p_phi(start)|, ZPolar p_phi
};

inline IntegralDrift integral_drift(const Trajectory& tr) {
  IntegralDrift d;
  if (tr.samples.empty()) return d;
  const double h0 = dual_norm(tr.metric, tr.front().state);
  const double k0 = killing_pairing(to_ambient(tr.front().state));
  for (const auto& s : tr.samples) {
    d.energy = std::max(d.energy, std::abs(dual_norm(tr.metric, s.state) - h0));
    d.momentum = std::max(d.momentum, std::abs(killing_pairing(to_ambient(s.state)) - k0));
  }
  return d;
}

inline constexpr double kPsiSpreadTol = 1e-5;

/// Reads 2 pi lambda_raw off the return map at three equatorial points.
inline double estimate_lambda(const MetricSpec& m, const IntegratorOptions& opts = {},
                              Propagator prop = Propagator::Direct, int directions = 8) {
  double sum = 0.0;
  for (int i = 0; i < 3; ++i) {
    const double phi0 = kTwoPi * i / 3.0;
    PsiResult r = psi_map(m, 0.0, phi0, directions, opts, prop);
    if (r.max_spread > kPsiSpreadTol) {
      throw NotConstantCurvature("geodesics from one point do not refocus at distance pi (spread " +
                                 std::to_string(r.max_spread) + ")");
    }
    sum += wrap_angle(r.phi - phi0) / kTwoPi;
  }
  const double raw = sum / 3.0;
  return std::min(raw, 1.0 - raw);
}

struct SeparationGrowth {
  double rate = 0.0;      // exponential coefficient r in log d = a + b log t + r t
  double exponent = 0.0;  // polynomial exponent b
  double initial = 0.0;
  double final_separation = 0.0;
};

/// Fits the envelope of the separation of two nearby orbits. An exponential
/// rate near zero is consistent with zero entropy, not a proof of it.
inline SeparationGrowth separation_growth(const MetricSpec& m, const PhaseState& init, double horizon = 300.0,
                                          double delta = 1e-8, const IntegratorOptions& opts = {},
                                          Propagator prop = Propagator::Direct) {
  PhaseState nb = init;
  nb.theta += delta / std::sqrt(2.0);
  nb.p_theta += delta / std::sqrt(2.0);
  nb = normalize(m, nb);
  IntegratorOptions io = opts;
  io.sample_interval = 0.5;
  Trajectory a = integrate(m, init, horizon, io, prop);
  Trajectory b = integrate(m, nb, horizon, io, prop);
  SeparationGrowth g;
  g.initial = phase_distance(init, nb);
  std::vector<double> ts, ls;
  double env = 0.0;
  const std::size_t n = std::min(a.samples.size(), b.samples.size());
  for (std::size_t k = 0; k < n; ++k) {
    env = std::max(env, phase_distance(a.samples[k].state, b.samples[k].state));
    const double t = a.samples[k].t;
    if (t >= 1.0) ts.push_back(t), ls.push_back(std::log(env));
  }
  g.final_separation = env;
  if (ts.size() < 3) throw PreconditionError("separation_growth: horizon too short");
  Eigen::MatrixXd A(ts.size(), 3);
  Eigen::VectorXd y(ts.size());
  for (std::size_t i = 0; i < ts.size(); ++i) {
    A(i, 0) = 1.0, A(i, 1) = std::log(ts[i]), A(i, 2) = ts[i];
    y(i) = ls[i];
  }
  const Eigen::Vector3d c = A.colPivHouseholderQr().solve(y);
  g.exponent = c(1);
  g.rate = c(2);
  return g;
}

}  // namespace flagsphere
