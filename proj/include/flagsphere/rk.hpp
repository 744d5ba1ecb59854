#pragma once

// Dormand-Prince 5(4) step with the usual PI-free step-size controller.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <utility>

namespace flagsphere {

template <std::size_t N>
using VecN = std::array<double, N>;

namespace detail {

template <std::size_t N>
VecN<N> lincomb(const VecN<N>& y, double h, std::initializer_list<std::pair<double, const VecN<N>*>> terms) {
  VecN<N> r = y;
  for (const auto& [c, k] : terms) {
    if (c == 0.0) continue;
    for (std::size_t i = 0; i < N; ++i) r[i] += h * c * (*k)[i];
  }
  return r;
}

}  // namespace detail

/// One Dormand-Prince step of size h from y. Writes the 5th-order solution to
/// y_out and returns the scaled error norm (accept when <= 1).
template <std::size_t N, class F>
double dopri5_step(F&& f, const VecN<N>& y, double h, VecN<N>& y_out, double rtol, double atol) {
  const VecN<N> k1 = f(y);
  const VecN<N> k2 = f(detail::lincomb<N>(y, h, {{1.0 / 5, &k1}}));
  const VecN<N> k3 = f(detail::lincomb<N>(y, h, {{3.0 / 40, &k1}, {9.0 / 40, &k2}}));
  const VecN<N> k4 = f(detail::lincomb<N>(y, h, {{44.0 / 45, &k1}, {-56.0 / 15, &k2}, {32.0 / 9, &k3}}));
  const VecN<N> k5 = f(detail::lincomb<N>(
      y, h, {{19372.0 / 6561, &k1}, {-25360.0 / 2187, &k2}, {64448.0 / 6561, &k3}, {-212.0 / 729, &k4}}));
  const VecN<N> k6 = f(detail::lincomb<N>(y, h,
                                          {{9017.0 / 3168, &k1},
                                           {-355.0 / 33, &k2},
                                           {46732.0 / 5247, &k3},
                                           {49.0 / 176, &k4},
                                           {-5103.0 / 18656, &k5}}));
  y_out = detail::lincomb<N>(y, h,
                             {{35.0 / 384, &k1},
                              {500.0 / 1113, &k3},
                              {125.0 / 192, &k4},
                              {-2187.0 / 6784, &k5},
                              {11.0 / 84, &k6}});
  const VecN<N> k7 = f(y_out);
  constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                   e6 = 22.0 / 525, e7 = -1.0 / 40;
  double err = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    const double ei = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
    const double sc = atol + rtol * std::max(std::abs(y[i]), std::abs(y_out[i]));
    err = std::max(err, std::abs(ei) / sc);
  }
  return std::isfinite(err) ? err : 1e300;
}

/// Next step size after a step of size h with error norm err.
inline double next_step_size(double h, double err) {
  if (err == 0.0) return h * 5.0;
  const double fac = 0.9 * std::pow(err, -0.2);
  return h * std::clamp(fac, 0.2, 5.0);
}

}  // namespace flagsphere
