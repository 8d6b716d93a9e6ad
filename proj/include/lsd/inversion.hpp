#pragma once

// Scalar root finding used by the implicit schemes and the quadratic LSD
// updates.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>

#include "lsd/error.hpp"

namespace lsd {

/// Positive root of A v^2 - B v - C = 0 for A > 0, C >= 0, evaluated without
/// cancellation: (B + sqrt(B^2 + 4AC)) / (2A) when B >= 0, otherwise
/// 2C / (sqrt(B^2 + 4AC) - B).
inline double positive_quadratic_root(double A, double B, double C) {
  const double disc = std::sqrt(B * B + 4.0 * A * C);
  if (B >= 0.0) return (B + disc) / (2.0 * A);
  return 2.0 * C / (disc - B);
}

enum class Monotonicity { increasing, decreasing };

/// A strictly monotone map on the open interval (lo, hi); hi may be +inf.
struct MonotoneSpec {
  std::function<double(double)> g;
  std::function<double(double)> dg;  // optional derivative, enables Newton steps
  double lo = 0.0;
  double hi = std::numeric_limits<double>::infinity();
  Monotonicity direction = Monotonicity::increasing;
  std::optional<double> seed;  // interior starting point
};

inline constexpr int kMaxBracketExpansions = 60;

namespace detail {

inline double interior_seed(const MonotoneSpec& s) {
  if (s.seed && *s.seed > s.lo && *s.seed < s.hi) return *s.seed;
  if (std::isinf(s.hi)) return s.lo >= 0.0 ? s.lo + 1.0 : std::max(s.lo + 1.0, 0.0);
  return s.lo + (s.hi - s.lo) / 2.0;
}

inline double checked(double v, double x) {
  if (!std::isfinite(v)) {
    throw NumericError("non-finite value of inverted map at x = " + std::to_string(x));
  }
  return v;
}

}  // namespace detail

/// Solves G(x) = u on (lo, hi). Brackets by geometric expansion from the
/// seed, then runs Newton steps safeguarded by bisection. Returns x with
/// |G(x) - u| <= tol * max(1, |u|), or the better end of a bracket that has
/// shrunk to adjacent doubles.
inline double invert_monotone(const MonotoneSpec& spec, double u, double tol = 1e-12,
                              int max_iter = 100) {
  if (!std::isfinite(u)) throw NumericError("inversion target is not finite");
  if (!(spec.lo < spec.hi)) throw ConfigError("empty inversion interval");
  const double sign = spec.direction == Monotonicity::increasing ? 1.0 : -1.0;
  // f is increasing in x for either direction.
  auto f = [&](double x) { return sign * (detail::checked(spec.g(x), x) - u); };
  const double target = tol * std::max(1.0, std::abs(u));

  const double x0 = detail::interior_seed(spec);
  double a = x0, b = x0;
  double fa = f(a);
  if (std::abs(fa) <= target) return x0;
  double fb = fa;

  int expansions = 0;
  while (fb < 0.0) {
    if (++expansions > kMaxBracketExpansions) {
      throw InversionError("no upper bracket found", a, b);
    }
    a = b;
    fa = fb;
    b = std::isinf(spec.hi) ? (b > 0.0 ? 2.0 * b : b + 1.0) : spec.hi - (spec.hi - b) / 2.0;
    fb = f(b);
  }
  expansions = 0;
  while (fa > 0.0) {
    if (++expansions > kMaxBracketExpansions) {
      throw InversionError("no lower bracket found", a, b);
    }
    b = a;
    fb = fa;
    a = spec.lo + (a - spec.lo) / 2.0;
    fa = f(a);
  }
  // Now fa <= 0 <= fb.
#ifndef NDEBUG
  {
    double prev = fa;
    for (int i = 1; i <= 16; ++i) {
      const double x = a + (b - a) * i / 16.0;
      const double fx = f(x);
      if (fx < prev) throw ConfigError("inverted map is not monotone on its bracket");
      prev = fx;
    }
  }
#endif

  double x = std::clamp(x0, a, b);
  double fx = x == a ? fa : (x == b ? fb : f(x));
  for (int it = 0; it < max_iter; ++it) {
    if (std::abs(fx) <= target) return x;
    if (fx < 0.0) {
      a = x;
      fa = fx;
    } else {
      b = x;
      fb = fx;
    }
    if (std::nextafter(a, b) >= b) {
      return std::abs(fa) <= std::abs(fb) ? a : b;
    }
    double next = std::numeric_limits<double>::quiet_NaN();
    if (spec.dg) {
      const double slope = sign * spec.dg(x);
      if (slope > 0.0 && std::isfinite(slope)) next = x - fx / slope;
    }
    if (!(next > a && next < b)) {
      // Geometric midpoint on wide positive brackets, arithmetic otherwise.
      next = (a > 0.0 && b > 4.0 * a) ? std::sqrt(a) * std::sqrt(b) : a + (b - a) / 2.0;
    }
    x = next;
    fx = f(x);
  }
  if (std::abs(fx) <= target) return x;
  throw InversionError("inversion did not converge in " + std::to_string(max_iter) +
                           " iterations",
                       a, b);
}

}  // namespace lsd
