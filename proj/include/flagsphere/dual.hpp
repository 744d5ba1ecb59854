#pragma once

// Forward-mode dual numbers with N tangent directions. Nesting
// Dual<Dual<double, 1>, N> yields Hessian-vector products.

#include <array>
#include <cmath>

namespace flagsphere {

template <typename T, int N>
struct Dual {
  T v{};
  std::array<T, N> d{};

  Dual() = default;
  Dual(double c) : v(c) {}  // NOLINT: implicit lift of constants
  Dual(T value, const std::array<T, N>& grad) : v(value), d(grad) {}

  static Dual variable(T value, int index) {
    Dual r(value, {});
    r.d[index] = T(1.0);
    return r;
  }

  Dual& operator+=(const Dual& o) { return *this = *this + o; }
  Dual& operator-=(const Dual& o) { return *this = *this - o; }
  Dual& operator*=(const Dual& o) { return *this = *this * o; }
  Dual& operator/=(const Dual& o) { return *this = *this / o; }

  friend Dual operator-(const Dual& a) {
    Dual r;
    r.v = -a.v;
    for (int i = 0; i < N; ++i) r.d[i] = -a.d[i];
    return r;
  }
  friend Dual operator+(const Dual& a, const Dual& b) {
    Dual r;
    r.v = a.v + b.v;
    for (int i = 0; i < N; ++i) r.d[i] = a.d[i] + b.d[i];
    return r;
  }
  friend Dual operator-(const Dual& a, const Dual& b) {
    Dual r;
    r.v = a.v - b.v;
    for (int i = 0; i < N; ++i) r.d[i] = a.d[i] - b.d[i];
    return r;
  }
  friend Dual operator*(const Dual& a, const Dual& b) {
    Dual r;
    r.v = a.v * b.v;
    for (int i = 0; i < N; ++i) r.d[i] = a.d[i] * b.v + a.v * b.d[i];
    return r;
  }
  friend Dual operator/(const Dual& a, const Dual& b) {
    Dual r;
    r.v = a.v / b.v;
    for (int i = 0; i < N; ++i) r.d[i] = (a.d[i] - r.v * b.d[i]) / b.v;
    return r;
  }
  friend Dual operator+(const Dual& a, double b) { return a + Dual(b); }
  friend Dual operator+(double a, const Dual& b) { return Dual(a) + b; }
  friend Dual operator-(const Dual& a, double b) { return a - Dual(b); }
  friend Dual operator-(double a, const Dual& b) { return Dual(a) - b; }
  friend Dual operator*(const Dual& a, double b) {
    Dual r;
    r.v = a.v * b;
    for (int i = 0; i < N; ++i) r.d[i] = a.d[i] * b;
    return r;
  }
  friend Dual operator*(double a, const Dual& b) { return b * a; }
  friend Dual operator/(const Dual& a, double b) { return a * (1.0 / b); }
  friend Dual operator/(double a, const Dual& b) { return Dual(a) / b; }
};

inline double value(double x) { return x; }
template <typename T, int N>
double value(const Dual<T, N>& x) {
  return value(x.v);
}

namespace detail {
// Chain rule: f(x) with f'(x) = df.
template <typename T, int N>
Dual<T, N> chain(const Dual<T, N>& x, T f, T df) {
  Dual<T, N> r;
  r.v = f;
  for (int i = 0; i < N; ++i) r.d[i] = x.d[i] * df;
  return r;
}
}  // namespace detail

template <typename T, int N>
Dual<T, N> sqrt(const Dual<T, N>& x) {
  using std::sqrt;
  T s = sqrt(x.v);
  return detail::chain(x, s, T(0.5) / s);
}
template <typename T, int N>
Dual<T, N> sin(const Dual<T, N>& x) {
  using std::cos;
  using std::sin;
  return detail::chain(x, sin(x.v), cos(x.v));
}
template <typename T, int N>
Dual<T, N> cos(const Dual<T, N>& x) {
  using std::cos;
  using std::sin;
  return detail::chain(x, cos(x.v), -sin(x.v));
}
template <typename T, int N>
Dual<T, N> tan(const Dual<T, N>& x) {
  using std::cos;
  using std::tan;
  T c = cos(x.v);
  return detail::chain(x, tan(x.v), T(1.0) / (c * c));
}
template <typename T, int N>
Dual<T, N> exp(const Dual<T, N>& x) {
  using std::exp;
  T e = exp(x.v);
  return detail::chain(x, e, e);
}
template <typename T, int N>
Dual<T, N> asin(const Dual<T, N>& x) {
  using std::asin;
  using std::sqrt;
  return detail::chain(x, asin(x.v), T(1.0) / sqrt(T(1.0) - x.v * x.v));
}
template <typename T, int N>
Dual<T, N> atan2(const Dual<T, N>& y, const Dual<T, N>& x) {
  using std::atan2;
  Dual<T, N> r;
  r.v = atan2(y.v, x.v);
  T den = x.v * x.v + y.v * y.v;
  for (int i = 0; i < N; ++i) r.d[i] = (x.v * y.d[i] - y.v * x.d[i]) / den;
  return r;
}

}  // namespace flagsphere
