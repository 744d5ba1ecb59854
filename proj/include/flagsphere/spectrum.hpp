#pragma once

// Analytic length spectrum of a constant-curvature metric with rotation
// angle lambda: the two exceptional lengths, mu, and (for rational lambda)
// the common period of all geodesics.

#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>

#include "flagsphere/chart.hpp"
#include "flagsphere/errors.hpp"

namespace flagsphere {

struct RationalLambda {
  std::int64_t p = 0;  // lambda = p / (2q), gcd(p, q) = 1
  std::int64_t q = 0;
};

struct SpectrumReport {
  double lambda = 0.0;
  double mu = 0.0;
  std::optional<RationalLambda> rational;
  double l_short = 0.0;
  double l_long = 0.0;
  double reciprocal_sum = 0.0;

  std::optional<double> common_period() const {
    if (!rational) return std::nullopt;
    return kTwoPi * static_cast<double>(rational->q);
  }
};

// 1e-12 lets the convergents of 1 - sqrt(2)/2 with q near 1e6 pass as
// rational, so the default is tighter.
inline constexpr double kRationalTol = 1e-14;
inline constexpr std::int64_t kRationalCap = 1'000'000;

/// Smallest-denominator p/(2q) within tol of lambda, with q <= cap.
inline std::optional<RationalLambda> rational_lambda(double lambda, double tol = kRationalTol,
                                                     std::int64_t cap = kRationalCap) {
  const double x = 2.0 * lambda;
  // Continued-fraction convergents h/k of x.
  std::int64_t h0 = 0, h1 = 1, k0 = 1, k1 = 0;
  double r = x;
  for (int it = 0; it < 64; ++it) {
    const double a = std::floor(r);
    if (a > 1e12) break;
    const auto ai = static_cast<std::int64_t>(a);
    const std::int64_t h2 = ai * h1 + h0, k2 = ai * k1 + k0;
    if (k2 > cap) break;
    h0 = h1, h1 = h2, k0 = k1, k1 = k2;
    if (std::abs(static_cast<double>(h1) / static_cast<double>(k1) - x) <= 2.0 * tol) {
      const std::int64_t g = std::gcd(h1, k1);
      return RationalLambda{h1 / g, k1 / g};
    }
    const double frac = r - a;
    if (frac <= 0.0) break;
    r = 1.0 / frac;
  }
  return std::nullopt;
}

inline SpectrumReport spectrum(double lambda) {
  if (!(lambda > 0.0 && lambda <= 0.5)) throw PreconditionError("spectrum: lambda must lie in (0, 1/2]");
  SpectrumReport r;
  r.lambda = lambda;
  r.mu = 1.0 / (2.0 * (1.0 - lambda));
  r.rational = rational_lambda(lambda);
  r.l_short = kPi / (1.0 - lambda);
  r.l_long = kPi / lambda;
  r.reciprocal_sum = (1.0 - lambda) / kPi + lambda / kPi;
  return r;
}

}  // namespace flagsphere
