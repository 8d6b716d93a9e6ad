#pragma once

// Closed-form solutions of the per-step auxiliary ODEs.

#include <cmath>

#include "lsd/error.hpp"

namespace lsd {

/// y_t = A + int_0^t (B y^(-l) + C y) ds, evaluated over `dt`.
struct BernoulliCoeffs {
  double A = 0;
  double B = 0;
  double C = 0;
  double l = 1;
  double dt = 0;
};

inline constexpr double kBernoulliLinearSwitch = 1e-12;

/// Returns r = y_dt^(1+l). With k = (1+l) C dt:
///   r = (B/C) expm1(k) + A^(1+l) e^k      for |k| >= 1e-12
///   r = (1+l) B dt + A^(1+l)              otherwise.
inline double bernoulli_solution(const BernoulliCoeffs& c) {
  if (!(c.l > 0.0)) throw DomainError("Bernoulli power l must be positive");
  if (!(c.dt >= 0.0)) throw DomainError("Bernoulli elapsed time must be non-negative");
  const double p = 1.0 + c.l;
  if (c.A < 0.0 && p != std::floor(p)) {
    throw DomainError("negative initial value with a fractional Bernoulli power");
  }
  const double ap = p == 2.0 ? c.A * c.A : std::pow(c.A, p);
  const double k = p * c.C * c.dt;
  if (std::abs(k) < kBernoulliLinearSwitch) return p * c.B * c.dt + ap;
  return c.B / c.C * std::expm1(k) + ap * std::exp(k);
}

/// |cos(y_dt / 2)| for dy = rate cot(y/2) dt started at y = A.
inline double wf_cosine_solution(double A, double rate, double dt) {
  return std::abs(std::cos(A / 2.0)) * std::exp(-rate * dt / 2.0);
}

}  // namespace lsd
