#pragma once

// Coordinate charts on the unit sphere and on its cotangent bundle.
//
// ZPolar: latitude theta in [-pi/2, pi/2], longitude phi, poles on the z-axis,
//   x = (cos t cos f, cos t sin f, sin t).
// XPolar: the same chart with the poles moved to the x-axis,
//   x = (sin t, cos t cos f, cos t sin f).
//
// Covectors are carried through the ambient space by the round metric: the
// covector p_theta dtheta + p_phi dphi is represented by the tangent vector
// w = p_theta e_theta + p_phi e_phi / cos^2(theta), so that p_i = w . e_i.

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/Dense>

#include "flagsphere/dual.hpp"
#include "flagsphere/errors.hpp"

namespace flagsphere {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

enum class Chart { ZPolar, XPolar };

inline Chart other(Chart c) { return c == Chart::ZPolar ? Chart::XPolar : Chart::ZPolar; }
inline std::string to_string(Chart c) { return c == Chart::ZPolar ? "z" : "x"; }

/// Wraps an angle into [0, 2 pi).
inline double wrap_angle(double a) {
  double r = std::fmod(a, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  if (r >= kTwoPi) r -= kTwoPi;
  return r;
}

/// Signed difference a - b on the circle, in (-pi, pi].
inline double angle_diff(double a, double b) {
  double d = std::remainder(a - b, kTwoPi);
  if (d <= -kPi) d += kTwoPi;
  return d;
}

/// A point of T*S^2 in an explicit chart.
struct PhaseState {
  Chart chart = Chart::ZPolar;
  double theta = 0.0;
  double phi = 0.0;
  double p_theta = 0.0;
  double p_phi = 0.0;

  std::array<double, 4> coords() const { return {theta, phi, p_theta, p_phi}; }
  static PhaseState from(Chart c, const std::array<double, 4>& z) {
    return {c, z[0], wrap_angle(z[1]), z[2], z[3]};
  }
};

/// Ambient representation: unit position x and covector-as-vector w (w . x = 0).
struct AmbientState {
  Eigen::Vector3d x;
  Eigen::Vector3d w;
};

inline constexpr double kPoleCos = 1e-9;

namespace detail {

template <typename T>
using Vec3T = std::array<T, 3>;

template <typename T>
Vec3T<T> position_t(Chart c, const T& th, const T& ph) {
  using std::cos;
  using std::sin;
  T ct = cos(th), st = sin(th), cp = cos(ph), sp = sin(ph);
  if (c == Chart::ZPolar) return {ct * cp, ct * sp, st};
  return {st, ct * cp, ct * sp};
}

template <typename T>
Vec3T<T> e_theta_t(Chart c, const T& th, const T& ph) {
  using std::cos;
  using std::sin;
  T ct = cos(th), st = sin(th), cp = cos(ph), sp = sin(ph);
  if (c == Chart::ZPolar) return {-st * cp, -st * sp, ct};
  return {ct, -st * cp, -st * sp};
}

template <typename T>
Vec3T<T> e_phi_t(Chart c, const T& th, const T& ph) {
  using std::cos;
  using std::sin;
  T ct = cos(th), cp = cos(ph), sp = sin(ph);
  if (c == Chart::ZPolar) return {-ct * sp, ct * cp, T(0.0)};
  return {T(0.0), -ct * sp, ct * cp};
}

template <typename T>
T dot3(const Vec3T<T>& a, const Vec3T<T>& b) {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

/// Base point and coordinate frame (x, e_theta, e_phi) from one set of sines
/// and cosines.
template <typename T>
std::array<Vec3T<T>, 3> frame_t(Chart c, const T& th, const T& ph) {
  using std::cos;
  using std::sin;
  T ct = cos(th), st = sin(th), cp = cos(ph), sp = sin(ph);
  if (c == Chart::ZPolar) {
    return {Vec3T<T>{ct * cp, ct * sp, st}, Vec3T<T>{-st * cp, -st * sp, ct}, Vec3T<T>{-ct * sp, ct * cp, T(0.0)}};
  }
  return {Vec3T<T>{st, ct * cp, ct * sp}, Vec3T<T>{ct, -st * cp, -st * sp}, Vec3T<T>{T(0.0), -ct * sp, ct * cp}};
}

/// Chart -> ambient (x, w), generic in the scalar type.
template <typename T>
std::array<Vec3T<T>, 2> to_ambient_t(Chart c, const std::array<T, 4>& z) {
  auto f = frame_t(c, z[0], z[1]);
  const auto& et = f[1];
  const auto& ep = f[2];
  // |e_phi| = cos(theta); recover cos^2 from the frame instead of another cosine.
  T c2 = ep[0] * ep[0] + ep[1] * ep[1] + ep[2] * ep[2];
  T k = z[3] / c2;
  Vec3T<T> w{z[2] * et[0] + k * ep[0], z[2] * et[1] + k * ep[1], z[2] * et[2] + k * ep[2]};
  return {f[0], w};
}

/// Ambient -> chart coordinates (phi not wrapped), generic in the scalar type.
template <typename T>
std::array<T, 4> from_ambient_t(Chart c, const Vec3T<T>& x, const Vec3T<T>& w) {
  using std::asin;
  using std::atan2;
  T th, ph;
  if (c == Chart::ZPolar) {
    double zz = value(x[2]);
    th = (zz >= 1.0) ? T(kPi / 2) : (zz <= -1.0 ? T(-kPi / 2) : asin(x[2]));
    ph = atan2(x[1], x[0]);
  } else {
    double xx = value(x[0]);
    th = (xx >= 1.0) ? T(kPi / 2) : (xx <= -1.0 ? T(-kPi / 2) : asin(x[0]));
    ph = atan2(x[2], x[1]);
  }
  auto et = e_theta_t(c, th, ph);
  auto ep = e_phi_t(c, th, ph);
  return {th, ph, dot3(w, et), dot3(w, ep)};
}

}  // namespace detail

inline Eigen::Vector3d base_point(Chart c, double theta, double phi) {
  auto p = detail::position_t(c, theta, phi);
  return {p[0], p[1], p[2]};
}

inline Eigen::Vector3d base_point(const PhaseState& s) { return base_point(s.chart, s.theta, s.phi); }

inline void require_off_pole(const PhaseState& s) {
  if (std::cos(s.theta) < kPoleCos) {
    throw PoleSingularity("state sits on a pole of the " + to_string(s.chart) + "-chart");
  }
}

inline AmbientState to_ambient(const PhaseState& s) {
  require_off_pole(s);
  auto xw = detail::to_ambient_t(s.chart, s.coords());
  return {{xw[0][0], xw[0][1], xw[0][2]}, {xw[1][0], xw[1][1], xw[1][2]}};
}

inline PhaseState from_ambient(const AmbientState& a, Chart c) {
  detail::Vec3T<double> x{a.x[0], a.x[1], a.x[2]}, w{a.w[0], a.w[1], a.w[2]};
  return PhaseState::from(c, detail::from_ambient_t(c, x, w));
}

inline PhaseState to_chart(const PhaseState& s, Chart c) {
  if (s.chart == c) return s;
  return from_ambient(to_ambient(s), c);
}

/// Latitude of the state's base point in the ZPolar chart.
inline double z_latitude(const PhaseState& s) {
  if (s.chart == Chart::ZPolar) return s.theta;
  double z = std::cos(s.theta) * std::sin(s.phi);
  return std::asin(std::clamp(z, -1.0, 1.0));
}

/// ZPolar unless the point is within 1 rad latitude of a z-pole.
inline PhaseState best_chart(const AmbientState& a) {
  static const double kLimit = std::sin(1.0);
  return from_ambient(a, std::abs(a.x[2]) <= kLimit ? Chart::ZPolar : Chart::XPolar);
}

/// Switch charts once |theta| exceeds the threshold.
inline PhaseState maybe_switch(const PhaseState& s, double threshold) {
  if (std::abs(s.theta) <= threshold) return s;
  return to_chart(s, other(s.chart));
}

/// Pairing of the covector with the Killing field d/dphi of the ZPolar chart.
inline double killing_pairing(const AmbientState& a) {
  // d/dphi at x is z_hat cross x = (-x_y, x_x, 0).
  return -a.w[0] * a.x[1] + a.w[1] * a.x[0];
}

/// Chart-wise Euclidean distance on (theta, phi mod 2 pi, p_theta, p_phi); b is
/// expressed in a's chart first.
inline double phase_distance(const PhaseState& a, const PhaseState& b) {
  PhaseState bb = b.chart == a.chart ? b : from_ambient(to_ambient(b), a.chart);
  double dt = a.theta - bb.theta;
  double dp = angle_diff(a.phi, bb.phi);
  double da = a.p_theta - bb.p_theta;
  double db = a.p_phi - bb.p_phi;
  return std::sqrt(dt * dt + dp * dp + da * da + db * db);
}

/// Chart difference b - a as a 4-vector in a's chart (phi component wrapped).
inline Eigen::Vector4d phase_difference(const PhaseState& a, const PhaseState& b) {
  PhaseState bb = b.chart == a.chart ? b : from_ambient(to_ambient(b), a.chart);
  return {bb.theta - a.theta, angle_diff(bb.phi, a.phi), bb.p_theta - a.p_theta, bb.p_phi - a.p_phi};
}

/// Six-dimensional ambient point (x, w), chart free.
inline Eigen::Matrix<double, 6, 1> ambient6(const PhaseState& s) {
  AmbientState a = to_ambient(s);
  Eigen::Matrix<double, 6, 1> r;
  r << a.x, a.w;
  return r;
}

}  // namespace flagsphere
