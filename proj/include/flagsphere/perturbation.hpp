#pragma once

// Hamiltonian perturbation of a Katok metric that moves its two equatorial
// closed orbits apart: the eastward one to the parallel theta = -theta*(t0),
// the westward one to theta = +theta*(t0), with theta* = t0 - O(t0^3).
//
// In ambient terms, with x the base point, w the covector, w_z = w . z_hat
// (the pairing with the gradient of the height), k = xi(d/dphi) and |w| the
// round co-norm,
//   H = c * w_z * k / sqrt(k^2 + w_p^2 w_z^2 + eps^2 |w|^2),  c = sqrt(1 + eps^2).
// H is smooth on T*S^2 minus the zero section, homogeneous of degree 1, and
// invariant under rotations about the z-axis. Near the equatorial orbits it is
// sign(p_phi) p_theta to first order, so its flow Phi_t slides them along
// theta without changing the covector. Homogeneity makes Phi_t commute with
// scaling, so F*_base o Phi_t0 is itself the perturbed dual norm.
//
// A product of cutoffs in theta, p_theta / p_phi and the energy would localize
// H, but a cutoff narrow enough to matter has derivatives so large that at
// t0 = 0.05 the perturbed norm is no longer convex, and even wide cutoffs
// push the flag curvature far outside [0.5, 1.5]. The global H avoids both.

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include "flagsphere/chart.hpp"
#include "flagsphere/dual.hpp"
#include "flagsphere/errors.hpp"
#include "flagsphere/zermelo.hpp"

namespace flagsphere {

struct CounterexampleParams {
  double base_alpha = std::sqrt(2.0) - 1.0;
  double t0 = 0.05;
  double w_p = 1.0;       // heading width: H saturates once |w_z| exceeds |k| / w_p
  double pole_eps = 1.0;  // keeps H smooth where k and w_z vanish together (the poles)

  static constexpr double kMaxT0 = 0.25;

  /// Empty string when valid, otherwise the first violated constraint.
  std::string violation() const {
    std::ostringstream os;
    if (!(std::abs(base_alpha) < 1.0)) os << "base_alpha must satisfy |alpha| < 1";
    else if (!(w_p > 0.0 && pole_eps > 0.0)) os << "w_p and pole_eps must be positive";
    else if (!(t0 >= 0.0 && t0 <= kMaxT0)) os << "t0 = " << t0 << " must lie in [0, " << kMaxT0 << "]";
    return os.str();
  }
  void validate() const {
    if (auto v = violation(); !v.empty()) throw InvalidParameters(v);
  }
  bool operator==(const CounterexampleParams&) const = default;
};

namespace detail {

template <typename T>
T mollifier_f(const T& s) {
  using std::exp;
  return exp(-1.0 / s);
}

template <typename T>
T abs_t(const T& u) {
  return value(u) < 0.0 ? -u : u;
}

}  // namespace detail

/// Smooth step sigma(s) = f(s) / (f(s) + f(1 - s)), f(s) = exp(-1/s) for s > 0.
template <typename T>
T smooth_step(const T& s) {
  double sv = value(s);
  if (sv <= 0.0) return T(0.0);
  if (sv >= 1.0) return T(1.0);
  T a = detail::mollifier_f(s);
  T b = detail::mollifier_f(1.0 - s);
  return a / (a + b);
}

/// C-infinity cutoff: 1 for |u| <= plateau, 0 for |u| >= 1, monotone between.
template <typename T>
T bump(const T& u, double plateau) {
  double au = std::abs(value(u));
  if (au <= plateau) return T(1.0);
  if (au >= 1.0) return T(0.0);
  return smooth_step((1.0 - detail::abs_t(u)) / (1.0 - plateau));
}

inline double bump(double u, double plateau) { return bump<double>(u, plateau); }

/// H at chart coordinates z, generic in the scalar type.
template <typename T>
T perturbation_hamiltonian_t(Chart chart, const std::array<T, 4>& z, const CounterexampleParams& prm) {
  using std::sqrt;
  if (value(z[2]) == 0.0 && value(z[3]) == 0.0) return T(0.0);
  auto xw = detail::to_ambient_t(chart, z);
  const auto& x = xw[0];
  const auto& w = xw[1];
  T wz = w[2];
  T k = x[0] * w[1] - x[1] * w[0];
  T n2 = w[0] * w[0] + w[1] * w[1] + w[2] * w[2];
  const double e2 = prm.pole_eps * prm.pole_eps;
  return std::sqrt(1.0 + e2) * wz * k / sqrt(k * k + prm.w_p * prm.w_p * wz * wz + e2 * n2);
}

inline double perturbation_hamiltonian(const PhaseState& state, const CounterexampleParams& prm) {
  return perturbation_hamiltonian_t<double>(state.chart, state.coords(), prm);
}

/// Hamiltonian vector field of H in the given chart.
inline Vec4 perturbation_vector_field(Chart chart, const Vec4& z, const CounterexampleParams& prm) {
  using D = Dual<double, 4>;
  std::array<D, 4> zz;
  for (int i = 0; i < 4; ++i) zz[i] = D::variable(z[i], i);
  D h = perturbation_hamiltonian_t(chart, zz, prm);
  return {h.d[2], h.d[3], -h.d[0], -h.d[1]};
}

/// Speed of the equatorial orbits along theta under Phi_t when they sit on the
/// parallel theta: d theta / dt = sign(p_phi) * this.
inline double parallel_drift(double theta, const CounterexampleParams& prm) {
  const double e2 = prm.pole_eps * prm.pole_eps, c2 = std::cos(theta) * std::cos(theta);
  return std::sqrt(1.0 + e2) * c2 / std::sqrt(c2 + e2);
}

/// Latitude theta*(t) reached by the equatorial orbits under Phi_t (t >= 0).
inline double parallel_latitude(double t, const CounterexampleParams& prm) {
  const int n = std::max(16, static_cast<int>(std::ceil(std::abs(t) * 4096)));
  const double h = t / n;
  double th = 0.0;
  for (int i = 0; i < n; ++i) {
    const double k1 = parallel_drift(th, prm), k2 = parallel_drift(th + 0.5 * h * k1, prm);
    const double k3 = parallel_drift(th + 0.5 * h * k2, prm), k4 = parallel_drift(th + h * k3, prm);
    th += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return th;
}

namespace detail {

// Fixed-step classical RK4. A fixed step sequence keeps the discrete flow a
// smooth function of its input, which the finite-difference derivatives of the
// perturbed norm rely on; it also commutes exactly with scaling of p.
inline constexpr double kDeformationStep = 1.0 / 256.0;

inline Vec4 deform_coords(Chart chart, const Vec4& z0, double t, const CounterexampleParams& prm) {
  if (t == 0.0) return z0;
  const int n = std::max(8, static_cast<int>(std::ceil(std::abs(t) / kDeformationStep)));
  const double h = t / n;
  Vec4 z = z0;
  auto axpy = [](const Vec4& a, double c, const Vec4& b) {
    return Vec4{a[0] + c * b[0], a[1] + c * b[1], a[2] + c * b[2], a[3] + c * b[3]};
  };
  for (int i = 0; i < n; ++i) {
    Vec4 k1 = perturbation_vector_field(chart, z, prm);
    Vec4 k2 = perturbation_vector_field(chart, axpy(z, 0.5 * h, k1), prm);
    Vec4 k3 = perturbation_vector_field(chart, axpy(z, 0.5 * h, k2), prm);
    Vec4 k4 = perturbation_vector_field(chart, axpy(z, h, k3), prm);
    for (int j = 0; j < 4; ++j) z[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
  }
  return z;
}

}  // namespace detail

/// Phi_t, the time-t flow of H, computed in the state's chart (switched first
/// if the state sits beyond 1 rad of latitude in it). |t| stays small, so the
/// path never approaches the chart's poles.
inline PhaseState deformation_map(const PhaseState& state, double t, const CounterexampleParams& prm) {
  if (t == 0.0) return state;
  PhaseState s = maybe_switch(state, 1.0);
  return PhaseState::from(s.chart, detail::deform_coords(s.chart, s.coords(), t, prm));
}

namespace detail {

// G(z) = F*_base(Phi_t0(z)).
inline double deformed_base_norm(Chart chart, const Vec4& z, const CounterexampleParams& prm) {
  return zermelo_hamiltonian(chart, prm.base_alpha, deform_coords(chart, z, prm.t0, prm));
}

inline Vec4 scaled(const Vec4& z, double r) { return {z[0], z[1], z[2] / r, z[3] / r}; }

// Solves G(z / r) = 1 for r > 0; G(z / r) is decreasing in r.
inline double solve_perturbed_norm(Chart chart, const Vec4& z, const CounterexampleParams& prm) {
  auto g = [&](double r) { return deformed_base_norm(chart, scaled(z, r), prm) - 1.0; };
  double r = deformed_base_norm(chart, z, prm);
  if (!(r > 0.0) || !std::isfinite(r)) throw RootBracketFailure("deformed base norm is not positive");
  double gr = g(r);
  if (std::abs(gr) <= 1e-14) return r;  // G is homogeneous up to rounding
  double lo = r, hi = r, glo = gr, ghi = gr;
  for (int k = 0; k < 60 && !(glo > 0.0 && ghi < 0.0); ++k) {
    if (glo <= 0.0) glo = g(lo /= 1.25);
    if (ghi >= 0.0) ghi = g(hi *= 1.25);
  }
  if (!(glo > 0.0 && ghi < 0.0)) throw RootBracketFailure("could not bracket the perturbed norm");
  // Fixed-point step r <- r * G(z / r) is exact for homogeneous G; fall back
  // to bisection whenever it leaves the bracket.
  for (int it = 0; it < 200; ++it) {
    double cand = r * (1.0 + gr);
    if (!(cand > lo && cand < hi)) cand = 0.5 * (lo + hi);
    double gc = g(cand);
    if (gc > 0.0) lo = cand; else hi = cand;
    const double step = std::abs(cand - r);
    r = cand;
    gr = gc;
    if (gc == 0.0 || step <= 1e-15 * r || (hi - lo) <= 1e-15 * r) return r;
  }
  return r;
}

}  // namespace detail

/// Dual norm of the perturbed metric: the r > 0 with F*_base(Phi_t0(p / r)) = 1.
inline double perturbed_dual_norm(const PhaseState& state, const CounterexampleParams& prm) {
  if (state.p_theta == 0.0 && state.p_phi == 0.0) throw PreconditionError("perturbed_dual_norm: zero covector");
  if (prm.t0 == 0.0) return zermelo_hamiltonian(state.chart, prm.base_alpha, state.coords());
  PhaseState s = maybe_switch(state, 1.0);
  return detail::solve_perturbed_norm(s.chart, s.coords(), prm);
}

}  // namespace flagsphere
