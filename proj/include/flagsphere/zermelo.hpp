#pragma once

// Dual norms of Zermelo deformations of the round sphere by the rotational
// Killing field X = d/dphi (ZPolar chart):
//
//   H(xi) = |xi|_round + alpha * xi(X).
//
// alpha = 0 is the round co-metric, |alpha| < 1 the Katok family.

#include <array>
#include <cmath>
#include <utility>

#include "flagsphere/chart.hpp"
#include "flagsphere/dual.hpp"

namespace flagsphere {

using Vec4 = std::array<double, 4>;

template <typename T>
T round_conorm_t(const std::array<T, 4>& z) {
  using std::cos;
  using std::sqrt;
  T c = cos(z[0]);
  return sqrt(z[2] * z[2] + z[3] * z[3] / (c * c));
}

/// xi(X) in chart coordinates.
template <typename T>
T killing_pairing_t(Chart chart, const std::array<T, 4>& z) {
  using std::cos;
  using std::sin;
  using std::tan;
  if (chart == Chart::ZPolar) return z[3];
  return -z[2] * cos(z[1]) - z[3] * tan(z[0]) * sin(z[1]);
}

template <typename T>
T zermelo_hamiltonian_t(Chart chart, double alpha, const std::array<T, 4>& z) {
  T h = round_conorm_t(z);
  if (alpha != 0.0) h = h + alpha * killing_pairing_t(chart, z);
  return h;
}

inline double zermelo_hamiltonian(Chart chart, double alpha, const Vec4& z) {
  return zermelo_hamiltonian_t<double>(chart, alpha, z);
}

/// dH/dz, closed form.
inline Vec4 zermelo_gradient(Chart chart, double alpha, const Vec4& z) {
  const double c = std::cos(z[0]), s = std::sin(z[0]);
  const double a = z[2], b = z[3];
  const double c2 = c * c;
  const double r = std::sqrt(a * a + b * b / c2);
  Vec4 g{b * b * s / (c2 * c * r), 0.0, a / r, b / (c2 * r)};
  if (alpha != 0.0) {
    if (chart == Chart::ZPolar) {
      g[3] += alpha;
    } else {
      const double cp = std::cos(z[1]), sp = std::sin(z[1]), tn = s / c;
      g[0] += -alpha * b * sp / c2;
      g[1] += alpha * (a * sp - b * tn * cp);
      g[2] += -alpha * cp;
      g[3] += -alpha * tn * sp;
    }
  }
  return g;
}

/// Hamilton's equations (theta', phi', p_theta', p_phi').
inline Vec4 zermelo_vector_field(Chart chart, double alpha, const Vec4& z) {
  Vec4 g = zermelo_gradient(chart, alpha, z);
  return {g[2], g[3], -g[0], -g[1]};
}

/// Hessian-vector product of H along dz, via nested forward differentiation.
/// Returns (grad H, Hess H . dz).
inline std::pair<Vec4, Vec4> zermelo_hessian_vector(Chart chart, double alpha, const Vec4& z, const Vec4& dz) {
  using Inner = Dual<double, 1>;
  using Outer = Dual<Inner, 4>;
  std::array<Outer, 4> zz;
  for (int i = 0; i < 4; ++i) {
    Inner zi(z[i], {dz[i]});
    zz[i] = Outer(zi, {});
    zz[i].d[i] = Inner(1.0);
  }
  Outer h = zermelo_hamiltonian_t(chart, alpha, zz);
  Vec4 g, hv;
  for (int i = 0; i < 4; ++i) {
    g[i] = h.d[i].v;
    hv[i] = h.d[i].d[0];
  }
  return {g, hv};
}

}  // namespace flagsphere
