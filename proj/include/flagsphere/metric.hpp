#pragma once

// Dual Finsler norms on T*S^2: round, Katok (Zermelo deformation of the round
// metric by the rotation field d/dphi), chains of further deformations, and
// the localized perturbation. Also the Legendre transform in both directions
// and the fiber-convexity certificate.

#include <array>
#include <cmath>
#include <memory>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>

#include <Eigen/Dense>

#include "flagsphere/chart.hpp"
#include "flagsphere/dual.hpp"
#include "flagsphere/errors.hpp"
#include "flagsphere/perturbation.hpp"
#include "flagsphere/zermelo.hpp"

namespace flagsphere {

class MetricSpec {
 public:
  enum class Kind { Round, Katok, Chain, Perturbed };

  static MetricSpec round() { return MetricSpec(Kind::Round); }

  static MetricSpec katok(double alpha) {
    if (!(std::abs(alpha) < 1.0)) {
      throw InadmissibleAlpha("Katok parameter must satisfy |alpha| < 1, got " + fmt(alpha));
    }
    MetricSpec m(Kind::Katok);
    m.alpha_ = alpha;
    return m;
  }

  /// Further Zermelo deformation of `base` by beta * d/dphi.
  static MetricSpec chain(const MetricSpec& base, double beta) {
    const double total = base.zermelo_alpha() + beta;
    if (!(std::abs(total) < 1.0)) {
      throw InadmissibleAlpha("chained deformation leaves the admissible range: total alpha " + fmt(total));
    }
    MetricSpec m(Kind::Chain);
    m.alpha_ = beta;
    m.base_ = std::make_shared<const MetricSpec>(base);
    return m;
  }

  static MetricSpec perturbed(const CounterexampleParams& params) {
    params.validate();
    MetricSpec m(Kind::Perturbed);
    m.params_ = params;
    return m;
  }

  Kind kind() const { return kind_; }
  /// Own deformation parameter (Katok alpha, or the chain increment beta).
  double alpha() const { return alpha_; }
  const MetricSpec& base() const { return *base_; }
  const CounterexampleParams& params() const { return params_; }

  /// Total coefficient of xi(X) relative to the round co-metric; for a
  /// perturbed base this is the coefficient of its Katok background.
  double zermelo_alpha() const {
    switch (kind_) {
      case Kind::Round: return 0.0;
      case Kind::Katok: return alpha_;
      case Kind::Chain: return base_->zermelo_alpha() + alpha_;
      case Kind::Perturbed: return params_.base_alpha;
    }
    return 0.0;
  }

  /// True when the metric is exactly a Zermelo deformation of the round sphere.
  bool is_zermelo() const {
    if (kind_ == Kind::Perturbed) return false;
    if (kind_ == Kind::Chain) return base_->is_zermelo();
    return true;
  }

  /// The perturbed metric at the root of a chain, if any.
  const MetricSpec* perturbed_root() const {
    if (kind_ == Kind::Perturbed) return this;
    if (kind_ == Kind::Chain) return base_->perturbed_root();
    return nullptr;
  }

  /// Deformation coefficients stacked on top of the root metric.
  double chain_increment() const {
    if (kind_ == Kind::Chain) return base_->chain_increment() + alpha_;
    return 0.0;
  }

  double lambda_raw() const { return 0.5 * (1.0 + zermelo_alpha()); }
  double lambda() const {
    const double r = lambda_raw();
    return std::min(r, 1.0 - r);
  }

  std::string to_string() const {
    std::ostringstream os;
    os.precision(17);
    switch (kind_) {
      case Kind::Round: os << "round"; break;
      case Kind::Katok: os << "katok:alpha=" << alpha_; break;
      case Kind::Chain: os << "chain(" << base_->to_string() << "):beta=" << alpha_; break;
      case Kind::Perturbed:
        os << "perturbed:t0=" << params_.t0 << ",base_alpha=" << params_.base_alpha;
        break;
    }
    return os.str();
  }

  friend bool operator==(const MetricSpec& a, const MetricSpec& b) {
    if (a.kind_ != b.kind_ || a.alpha_ != b.alpha_ || !(a.params_ == b.params_)) return false;
    if (a.kind_ == Kind::Chain) return *a.base_ == *b.base_;
    return true;
  }

 private:
  explicit MetricSpec(Kind k) : kind_(k) {}
  static std::string fmt(double x) {
    std::ostringstream os;
    os.precision(17);
    os << x;
    return os.str();
  }

  Kind kind_;
  double alpha_ = 0.0;
  std::shared_ptr<const MetricSpec> base_;
  CounterexampleParams params_;
};

/// Round co-norm sqrt(p_theta^2 + p_phi^2 / cos^2 theta).
inline double round_dual_norm(const PhaseState& s) {
  require_off_pole(s);
  return round_conorm_t<double>(s.coords());
}

/// F*(xi) + alpha * xi(X) for a Zermelo-type base.
inline double zermelo_dual(const MetricSpec& base, double alpha, const PhaseState& s);

/// Dual norm F* of any metric variant at the state.
inline double dual_norm(const MetricSpec& m, const PhaseState& s) {
  require_off_pole(s);
  if (m.is_zermelo()) return zermelo_hamiltonian(s.chart, m.zermelo_alpha(), s.coords());
  const MetricSpec* root = m.perturbed_root();
  double h = perturbed_dual_norm(s, root->params());
  const double inc = m.chain_increment();
  if (inc != 0.0) h += inc * killing_pairing_t<double>(s.chart, s.coords());
  return h;
}

inline double zermelo_dual(const MetricSpec& base, double alpha, const PhaseState& s) {
  if (!(std::abs(base.zermelo_alpha() + alpha) < 1.0)) {
    throw InadmissibleAlpha("zermelo_dual: alpha outside the admissible range of the base");
  }
  require_off_pole(s);
  return dual_norm(base, s) + alpha * killing_pairing_t<double>(s.chart, s.coords());
}

/// Finite-difference step for metrics without closed-form derivatives.
inline constexpr double kGradientStep = 1e-5;

/// dF*/dz in the state's chart coordinates (theta, phi, p_theta, p_phi).
inline Vec4 dual_gradient(const MetricSpec& m, const PhaseState& s) {
  if (m.is_zermelo()) return zermelo_gradient(s.chart, m.zermelo_alpha(), s.coords());
  Vec4 z = s.coords(), g{};
  for (int i = 0; i < 4; ++i) {
    Vec4 zp = z, zm = z;
    zp[i] += kGradientStep;
    zm[i] -= kGradientStep;
    g[i] = (dual_norm(m, PhaseState::from(s.chart, zp)) - dual_norm(m, PhaseState::from(s.chart, zm))) /
           (2.0 * kGradientStep);
  }
  return g;
}

/// Tangent vector components (v_theta, v_phi) in the state's chart.
struct Velocity {
  double v_theta = 0.0;
  double v_phi = 0.0;
};

/// Fiber gradient of (1/2) F*^2, i.e. the velocity dual to the covector.
inline Velocity legendre_dual_velocity(const MetricSpec& m, const PhaseState& s) {
  if (s.p_theta == 0.0 && s.p_phi == 0.0) throw PreconditionError("legendre_dual_velocity: zero covector");
  const double h = dual_norm(m, s);
  Vec4 g = dual_gradient(m, s);
  return {h * g[2], h * g[3]};
}

/// Forward Legendre map of a Katok metric: velocity -> covector.
inline std::array<double, 2> zermelo_covector(double alpha, Chart chart, double theta, double phi,
                                              const Velocity& v);

/// Forward Finsler norm of a Katok metric, from the navigation quadratic
///   F^2 (1 - |W|^2) + 2 F h(v, W) - h(v, v) = 0,  W = alpha d/dphi.
inline double katok_primal_norm(double alpha, double theta, double phi, const Velocity& v,
                                Chart chart = Chart::ZPolar) {
  const double c = std::cos(theta);
  if (c < kPoleCos) throw PoleSingularity("katok_primal_norm at a chart pole");
  // Wind components in the chart: d/dphi of the ZPolar chart.
  double w_theta = 0.0, w_phi = alpha;
  if (chart == Chart::XPolar) {
    // z_hat x x expressed on (e_theta, e_phi / cos theta) of the XPolar chart.
    Eigen::Vector3d x = base_point(chart, theta, phi);
    Eigen::Vector3d wind = alpha * Eigen::Vector3d(-x.y(), x.x(), 0.0);
    auto et = detail::e_theta_t<double>(chart, theta, phi);
    auto ep = detail::e_phi_t<double>(chart, theta, phi);
    w_theta = wind.dot(Eigen::Vector3d(et[0], et[1], et[2]));
    w_phi = wind.dot(Eigen::Vector3d(ep[0], ep[1], ep[2])) / (c * c);
  }
  const double c2 = c * c;
  const double ww = w_theta * w_theta + c2 * w_phi * w_phi;
  const double vw = v.v_theta * w_theta + c2 * v.v_phi * w_phi;
  const double vv = v.v_theta * v.v_theta + c2 * v.v_phi * v.v_phi;
  const double a = 1.0 - ww;
  if (!(a > 0.0)) throw DegenerateWind("wind is not shorter than 1 in the round metric");
  if (vv == 0.0) return 0.0;
  return (-vw + std::sqrt(vw * vw + a * vv)) / a;
}

inline std::array<double, 2> zermelo_covector(double alpha, Chart chart, double theta, double phi,
                                              const Velocity& v) {
  const double f = katok_primal_norm(alpha, theta, phi, v, chart);
  if (f == 0.0) return {0.0, 0.0};
  // Unit velocity u = W + n with |n|_round = 1; the dual covector is n^flat / (1 + alpha n^flat(X)).
  Eigen::Vector3d x = base_point(chart, theta, phi);
  auto et = detail::e_theta_t<double>(chart, theta, phi);
  auto ep = detail::e_phi_t<double>(chart, theta, phi);
  Eigen::Vector3d e_t(et[0], et[1], et[2]), e_p(ep[0], ep[1], ep[2]);
  Eigen::Vector3d u = (v.v_theta * e_t + v.v_phi * e_p) / f;
  Eigen::Vector3d killing(-x.y(), x.x(), 0.0);
  Eigen::Vector3d n = u - alpha * killing;
  const double scale = f / (1.0 + alpha * n.dot(killing));
  return {scale * n.dot(e_t), scale * n.dot(e_p)};
}

namespace detail {

inline double half_square(const MetricSpec& m, Chart chart, double theta, double phi, double a, double b) {
  PhaseState s{chart, theta, phi, a, b};
  if (a == 0.0 && b == 0.0) return 0.0;
  const double h = dual_norm(m, s);
  return 0.5 * h * h;
}

}  // namespace detail

/// Inverse Legendre map: the covector whose dual velocity is v, scaled so that
/// F*(covector) = F(v). Closed form for Zermelo metrics, otherwise a 1-D root
/// solve on the covector direction (strict convexity makes the direction map
/// monotone).
inline PhaseState covector_for_velocity(const MetricSpec& m, Chart chart, double theta, double phi,
                                        const Velocity& v) {
  if (m.is_zermelo()) {
    auto p = zermelo_covector(m.zermelo_alpha(), chart, theta, phi, v);
    return {chart, theta, wrap_angle(phi), p[0], p[1]};
  }
  const double c = std::cos(theta);
  if (c < kPoleCos) throw PoleSingularity("covector_for_velocity at a chart pole");
  // Work with orthonormal components so that angles are metric-meaningful.
  auto vel_angle = [&](double beta) {
    PhaseState s{chart, theta, phi, std::cos(beta), std::sin(beta) * c};
    Velocity u = legendre_dual_velocity(m, s);
    return std::atan2(u.v_phi * c, u.v_theta);
  };
  const double target = std::atan2(v.v_phi * c, v.v_theta);
  auto miss = [&](double beta) { return angle_diff(vel_angle(beta), target); };
  // Seed from the nearest of a coarse set of directions, then secant with bracketing.
  constexpr int kScan = 72;
  double best = 0.0, best_err = 1e9;
  for (int i = 0; i < kScan; ++i) {
    double beta = kTwoPi * i / kScan;
    double e = std::abs(miss(beta));
    if (e < best_err) best_err = e, best = beta;
  }
  double lo = best - kTwoPi / kScan, hi = best + kTwoPi / kScan;
  double flo = miss(lo), fhi = miss(hi);
  if (!(flo <= 0.0 && fhi >= 0.0)) throw RootBracketFailure("covector_for_velocity: direction not bracketed");
  for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
    double mid = (flo != fhi) ? lo - flo * (hi - lo) / (fhi - flo) : 0.5 * (lo + hi);
    if (!(mid > lo && mid < hi) || it % 3 == 2) mid = 0.5 * (lo + hi);
    double fm = miss(mid);
    if (fm == 0.0) { lo = hi = mid; break; }
    if (fm < 0.0) lo = mid, flo = fm; else hi = mid, fhi = fm;
  }
  const double beta = 0.5 * (lo + hi);
  PhaseState s{chart, theta, wrap_angle(phi), std::cos(beta), std::sin(beta) * c};
  // Scale: the dual velocity of a unit covector is a unit vector, so p = F(v) p_unit.
  const double h = dual_norm(m, s);
  s.p_theta /= h;
  s.p_phi /= h;
  Velocity u = legendre_dual_velocity(m, s);
  const double un = std::hypot(u.v_theta, u.v_phi * c);
  const double vn = std::hypot(v.v_theta, v.v_phi * c);
  s.p_theta *= vn / un;
  s.p_phi *= vn / un;
  return s;
}

/// Closed-form fiber Hessian of (1/2) F*^2 for Zermelo metrics.
inline Eigen::Matrix2d zermelo_fiber_hessian(double alpha, const PhaseState& s) {
  using Inner = Dual<double, 2>;
  using Outer = Dual<Inner, 2>;
  std::array<Outer, 4> z;
  z[0] = Outer(Inner(s.theta), {});
  z[1] = Outer(Inner(s.phi), {});
  for (int i = 0; i < 2; ++i) {
    Inner zi = Inner::variable(i == 0 ? s.p_theta : s.p_phi, i);
    z[2 + i] = Outer::variable(zi, i);
  }
  Outer h = zermelo_hamiltonian_t(s.chart, alpha, z);
  Outer e = 0.5 * h * h;
  Eigen::Matrix2d H;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) H(i, j) = e.d[i].d[j];
  return H;
}

/// Fiber Hessian of (1/2) F*^2 by central differences at the unit-level
/// representative of the state's ray.
inline Eigen::Matrix2d fiber_hessian(const MetricSpec& m, const PhaseState& state, double h = 1e-4) {
  if (state.p_theta == 0.0 && state.p_phi == 0.0) throw PreconditionError("fiber_hessian: zero covector");
  require_off_pole(state);
  const double n = dual_norm(m, state);
  if (!(n > 0.0)) throw NumericalBreakdown("fiber_hessian: state outside the admissible cone");
  const double a = state.p_theta / n, b = state.p_phi / n;
  auto f = [&](double da, double db) {
    PhaseState s{state.chart, state.theta, state.phi, a + da, b + db};
    const double v = dual_norm(m, s);
    if (!(v > 0.0)) throw NumericalBreakdown("fiber_hessian: stencil left the admissible cone");
    return 0.5 * v * v;
  };
  const double f0 = f(0, 0);
  Eigen::Matrix2d H;
  H(0, 0) = (f(h, 0) - 2.0 * f0 + f(-h, 0)) / (h * h);
  H(1, 1) = (f(0, h) - 2.0 * f0 + f(0, -h)) / (h * h);
  H(0, 1) = H(1, 0) = (f(h, h) - f(h, -h) - f(-h, h) + f(-h, -h)) / (4.0 * h * h);
  return H;
}

inline double fiber_hessian_min_eigen(const MetricSpec& m, const PhaseState& state, double h = 1e-4) {
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(fiber_hessian(m, state, h), Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

/// Rescales the covector onto the unit level of the metric.
inline PhaseState normalize(const MetricSpec& m, PhaseState s) {
  const double h = dual_norm(m, s);
  if (!(h > 0.0)) throw NotNormalized("cannot normalize a covector with non-positive dual norm");
  s.p_theta /= h;
  s.p_phi /= h;
  return s;
}

/// Unit covector at (theta, phi) whose velocity heads in compass direction
/// `heading` (0 = east, pi/2 = north), measured in the round metric.
inline PhaseState unit_state_with_heading(const MetricSpec& m, Chart chart, double theta, double phi,
                                          double heading) {
  const double c = std::cos(theta);
  if (c < kPoleCos) throw PoleSingularity("unit_state_with_heading at a chart pole");
  Velocity v{std::sin(heading), std::cos(heading) / c};
  PhaseState s = covector_for_velocity(m, chart, theta, phi, v);
  return normalize(m, s);
}

/// Unit covector at (theta, phi) whose round-metric direction is `angle`
/// (0 = p along e_phi, i.e. eastward for the round metric).
inline PhaseState unit_covector(const MetricSpec& m, Chart chart, double theta, double phi, double angle) {
  const double c = std::cos(theta);
  PhaseState s{chart, theta, wrap_angle(phi), std::sin(angle), std::cos(angle) * c};
  return normalize(m, s);
}

}  // namespace flagsphere
