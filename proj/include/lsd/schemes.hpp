#pragma once

// One-step maps for every scheme, plus a Stepper that binds a scheme to its
// parameters and drives it through a common state type.
//
// LSD variants step the Lamperti-transformed state. Companion schemes step
// a "working coordinate" that is the original state x except where the
// scheme is naturally posed elsewhere:
//
//   CIR NS              sqrt(x)
//   CEV IMPLICIT        x^(1-q)
//   WF IMPLICIT         2 asin(sqrt(x))
//   HESTON32 IMPLICIT   x^(-1/2)
//   AIT IMPLICIT(_DRIFT) x^(1-rho)
//
// to_working() and from_working() convert between the two.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>

#include "lsd/closedform.hpp"
#include "lsd/error.hpp"
#include "lsd/inversion.hpp"
#include "lsd/models.hpp"

namespace lsd {

enum class Variant {
  lsd1,
  lsd2,
  lsd3,
  lsd4,
  sd_theta,
  alf,
  ns,
  exact_ou,
  implicit,
  implicit_drift,
  sd,
  sd_alt,
  biss,
  hyb,
  sd_exp,
};

inline std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::lsd1: return "LSD1";
    case Variant::lsd2: return "LSD2";
    case Variant::lsd3: return "LSD3";
    case Variant::lsd4: return "LSD4";
    case Variant::sd_theta: return "SD_THETA";
    case Variant::alf: return "ALF";
    case Variant::ns: return "NS";
    case Variant::exact_ou: return "EXACT_OU";
    case Variant::implicit: return "IMPLICIT";
    case Variant::implicit_drift: return "IMPLICIT_DRIFT";
    case Variant::sd: return "SD";
    case Variant::sd_alt: return "SD_ALT";
    case Variant::biss: return "BISS";
    case Variant::hyb: return "HYB";
    case Variant::sd_exp: return "SD_EXP";
  }
  return "?";
}

inline std::optional<Variant> parse_variant(std::string_view name) {
  for (int i = 0; i <= static_cast<int>(Variant::sd_exp); ++i) {
    const auto v = static_cast<Variant>(i);
    if (to_string(v) == name) return v;
  }
  return std::nullopt;
}

inline std::span<const Variant> variants_of(Model m) {
  using V = Variant;
  static constexpr std::array cir{V::lsd1, V::lsd2, V::lsd3, V::sd_theta,
                                  V::alf,  V::ns,   V::exact_ou};
  static constexpr std::array cev{V::lsd1, V::lsd2, V::lsd3, V::sd_theta, V::implicit};
  static constexpr std::array wf{V::lsd1, V::lsd2,   V::lsd3, V::lsd4,    V::sd,
                                 V::sd_alt, V::biss, V::hyb,  V::implicit};
  static constexpr std::array heston{V::lsd1, V::lsd2, V::sd_exp, V::implicit};
  static constexpr std::array ait{V::lsd1, V::lsd2, V::implicit, V::implicit_drift};
  switch (m) {
    case Model::cir: return cir;
    case Model::cev: return cev;
    case Model::wf: return wf;
    case Model::heston32: return heston;
    case Model::ait: return ait;
  }
  return {};
}

inline bool is_lamperti(Variant v) {
  return v == Variant::lsd1 || v == Variant::lsd2 || v == Variant::lsd3 ||
         v == Variant::lsd4;
}

struct SchemeId {
  Model model = Model::cir;
  Variant variant = Variant::lsd1;

  friend bool operator==(const SchemeId&, const SchemeId&) = default;
};

inline bool is_valid(SchemeId id) {
  const auto vs = variants_of(id.model);
  return std::find(vs.begin(), vs.end(), id.variant) != vs.end();
}

inline std::string to_string(SchemeId id) {
  return std::string(to_string(id.model)) + ":" + std::string(to_string(id.variant));
}

/// Sign of the b tan(x/2) term in the Wright-Fisher implicit map.
enum class WfImplicitSign {
  printed,    // G(x) = x - a cot(x/2) dt - b tan(x/2) dt
  corrected,  // G(x) = x - a cot(x/2) dt + b tan(x/2) dt, consistent with the drift
};

struct SchemeOptions {
  double theta = 1.0;  // implicitness level of SD_THETA
  WfImplicitSign wf_implicit_sign = WfImplicitSign::printed;
  double ou_split = 0.5;  // EXACT_OU initial split x1^2 = m x0

  friend bool operator==(const SchemeOptions&, const SchemeOptions&) = default;
};

/// State carried between steps. `value` is the Lamperti state for LSD
/// variants and the working coordinate otherwise; `imag` is non-zero only
/// after a complex continuation. Flags describe the most recent step.
struct StepState {
  double value = 0.0;
  double imag = 0.0;
  double x1 = 0.0;  // EXACT_OU components
  double x2 = 0.0;
  bool non_real = false;
  bool clamped = false;

  std::complex<double> as_complex() const { return {value, imag}; }
  bool is_real() const { return imag == 0.0; }
};

namespace detail {

using cplx = std::complex<double>;

inline void require_step(double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw DomainError("step size must be positive");
}

inline void require_lamperti_positive(double y) {
  if (!(y > 0.0) || !std::isfinite(y)) {
    throw DomainError("Lamperti state must be positive, got " + std::to_string(y));
  }
}

inline void require_variant(Model m, Variant v) {
  if (!is_valid({m, v})) {
    throw ConfigError("scheme " + std::string(to_string(v)) + " is not defined for model " +
                      std::string(to_string(m)));
  }
}

// Real arithmetic whenever the operand is a non-negative real, so real paths
// match the real-valued formulas bit for bit.
inline cplx sqrt_c(cplx z) {
  if (z.imag() == 0.0 && z.real() >= 0.0) return {std::sqrt(z.real()), 0.0};
  return std::sqrt(z);
}

inline cplx pow_c(cplx z, double e) {
  if (z.imag() == 0.0 && z.real() >= 0.0) return {std::pow(z.real(), e), 0.0};
  return std::pow(z, e);
}

inline bool negative_radicand(cplx z) { return z.imag() == 0.0 && z.real() < 0.0; }

inline StepState from_complex(cplx z, bool negative_rad) {
  StepState s;
  s.value = z.real();
  s.imag = z.imag();
  s.non_real = negative_rad || z.imag() != 0.0;
  return s;
}

/// Maps any real angle to [0, pi] keeping sin^2(y/2) unchanged.
inline double fold_angle(double y) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double r = std::fmod(std::abs(y), two_pi);
  if (r > std::numbers::pi) r = two_pi - r;
  return r;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// CIR

inline double cir_lsd_step(Variant v, const CirParams& p, double y, double dW, double dt) {
  detail::require_step(dt);
  detail::require_lamperti_positive(y);
  switch (v) {
    case Variant::lsd1: {
      const double A = dW + (1.0 - p.b * dt) * y;
      return std::sqrt(A * A + 2.0 * p.a * dt);
    }
    case Variant::lsd2: {
      const double A = dW + y;
      const double k = -2.0 * p.b * dt;
      return std::sqrt(p.a / p.b * -std::expm1(k) + A * A * std::exp(k));
    }
    case Variant::lsd3:
      return positive_quadratic_root(1.0 + p.b * dt, dW + y, p.a * dt);
    default:
      throw ConfigError("not a CIR LSD variant: " + std::string(to_string(v)));
  }
}

/// SD_THETA and ALF step x; NS steps sqrt(x). Negative radicands continue in
/// the complex plane and raise `non_real`.
inline StepState cir_companion_step(Variant v, const CirParams& p, const StepState& s,
                                    double dW, double dt, double theta = 1.0) {
  using detail::cplx;
  detail::require_step(dt);
  const cplx x = s.as_complex();
  switch (v) {
    case Variant::sd_theta: {
      if (!(theta >= 0.0 && theta <= 1.0)) throw ConfigError("theta must lie in [0, 1]");
      const double D = 1.0 + p.k2 * theta * dt;
      const cplx rad =
          x * (1.0 - p.k2 * dt / D) + dt / D * (p.k1 - p.k3 * p.k3 / (4.0 * D));
      const cplx root = detail::sqrt_c(rad) + p.k3 / (2.0 * D) * dW;
      return detail::from_complex(root * root, detail::negative_radicand(rad));
    }
    case Variant::alf: {
      const double kd = 1.0 + p.k2 * dt;
      const cplx rad = 4.0 * (x + (p.k1 - p.k3 * p.k3 / 2.0) * dt) * kd +
                       p.k3 * p.k3 * dW * dW;
      const cplx root = (detail::sqrt_c(rad) + p.k3 * dW) / (2.0 * kd);
      return detail::from_complex(root * root, detail::negative_radicand(rad));
    }
    case Variant::ns: {
      const cplx w = x + p.k3 * dW / 2.0;
      const cplx rad = w * w + (p.k1 - p.k3 * p.k3 / 4.0) * dt;
      const cplx next = (detail::sqrt_c(rad) + w) / (2.0 + p.k2 * dt);
      return detail::from_complex(next, detail::negative_radicand(rad));
    }
    default:
      throw ConfigError("not a CIR companion variant: " + std::string(to_string(v)));
  }
}

struct OuState {
  double x1 = 0.0;
  double x2 = 0.0;
  double x = 0.0;  // x1^2 + x2^2
};

inline void require_dimension_two(const CirParams& p) {
  if (std::abs(p.dimension() - 2.0) > 1e-12) {
    throw ConfigError("squared-OU construction needs 4 k1 / k3^2 = 2, got " +
                      std::to_string(p.dimension()));
  }
}

/// x_j' = e^(-k2 dt/2) x_j + (k3/k2)(1 - e^(-k2 dt/2)) dW_j and x' = x1'^2 + x2'^2.
inline OuState cir_exact_ou_step(const CirParams& p, const OuState& s, double dW1,
                                 double dW2, double dt) {
  detail::require_step(dt);
  require_dimension_two(p);
  const double decay = std::exp(-p.k2 * dt / 2.0);
  const double gain = p.k3 / p.k2 * -std::expm1(-p.k2 * dt / 2.0);
  OuState out;
  out.x1 = decay * s.x1 + gain * dW1;
  out.x2 = decay * s.x2 + gain * dW2;
  out.x = out.x1 * out.x1 + out.x2 * out.x2;
  return out;
}

// ---------------------------------------------------------------------------
// CEV

inline double cev_lsd_step(Variant v, const CevParams& p, double y, double dW, double dt) {
  detail::require_step(dt);
  detail::require_lamperti_positive(y);
  const double one_q = 1.0 - p.q;
  switch (v) {
    case Variant::lsd1: {
      const double damp = 1.0 + p.b * dt / (y * y);
      const double phi = (y + dW) / damp;
      const double k = -2.0 * p.c / damp * dt;
      const double level = p.a / (p.c * std::pow(y, (2.0 * p.q - 1.0) / one_q));
      return std::sqrt(phi * phi * std::exp(k) + level * -std::expm1(k));
    }
    case Variant::lsd2: {
      const double phi = dW + y - p.b / y * dt;
      const double c0 = p.a * dt * std::pow(y, (1.0 - 2.0 * p.q) / one_q);
      return positive_quadratic_root(1.0 + p.c * dt, phi, c0);
    }
    case Variant::lsd3: {
      const double phi = dW + y + (p.a * std::pow(y, -p.q / one_q) - p.b / y) * dt;
      return positive_quadratic_root(1.0 + p.c * dt, phi, dt);
    }
    default:
      throw ConfigError("not a CEV LSD variant: " + std::string(to_string(v)));
  }
}

/// Implicit map on v = x^(1-q):
/// G(v) = v - (1-q)(k1 v^(-q/(1-q)) - k2 v - q k3^2 v^(-1) / 2) dt.
inline MonotoneSpec cev_implicit_map(const CevParams& p, double dt) {
  const double one_q = 1.0 - p.q;
  const double e = -p.q / one_q;
  MonotoneSpec spec;
  spec.g = [=](double v) {
    return v - one_q * (p.k1 * std::pow(v, e) - p.k2 * v - p.q * p.k3 * p.k3 / (2.0 * v)) * dt;
  };
  spec.dg = [=](double v) {
    return 1.0 - one_q * (p.k1 * e * std::pow(v, e - 1.0) - p.k2 +
                          p.q * p.k3 * p.k3 / (2.0 * v * v)) * dt;
  };
  return spec;
}

/// SD_THETA steps x with complex continuation; IMPLICIT steps v = x^(1-q).
inline StepState cev_companion_step(Variant v, const CevParams& p, const StepState& s,
                                    double dW, double dt, double theta = 1.0) {
  using detail::cplx;
  detail::require_step(dt);
  switch (v) {
    case Variant::sd_theta: {
      if (!(theta >= 0.0 && theta <= 1.0)) throw ConfigError("theta must lie in [0, 1]");
      const cplx x = s.as_complex();
      const double D = 1.0 + p.k2 * theta * dt;
      const cplx rad = x * (1.0 - p.k2 * dt / D) + p.k1 * dt / D -
                       p.k3 * p.k3 * dt / (4.0 * D * D) * detail::pow_c(x, 2.0 * p.q - 1.0);
      const cplx root =
          detail::sqrt_c(rad) + p.k3 / (2.0 * D) * detail::pow_c(x, p.q - 0.5) * dW;
      return detail::from_complex(root * root, detail::negative_radicand(rad));
    }
    case Variant::implicit: {
      if (!(s.value > 0.0)) throw DomainError("CEV implicit state must be positive");
      auto spec = cev_implicit_map(p, dt);
      spec.seed = s.value;
      StepState out;
      out.value = invert_monotone(spec, s.value + p.k3 * (1.0 - p.q) * dW);
      return out;
    }
    default:
      throw ConfigError("not a CEV companion variant: " + std::string(to_string(v)));
  }
}

// ---------------------------------------------------------------------------
// Wright-Fisher

inline constexpr double kWfDenominatorGuard = 1e-12;

/// Returns the next Lamperti angle in [0, pi].
inline double wf_lsd_step(Variant v, const WfParams& p, double y, double dW, double dt) {
  detail::require_step(dt);
  if (!(y > 0.0 && y < std::numbers::pi)) {
    throw DomainError("Wright-Fisher Lamperti state must lie in (0, pi), got " +
                      std::to_string(y));
  }
  const double tn = std::tan(y / 2.0);
  const double ct = 1.0 / tn;
  const double noise = p.k3 * dW;
  switch (v) {
    case Variant::lsd1: {
      const double damp = 1.0 + p.b / y * tn * dt;
      const double phi = (noise + y) / damp;
      const double c = wf_cosine_solution(phi, p.a / damp, dt);
      return 2.0 * std::acos(std::min(1.0, c));
    }
    case Variant::lsd2: {
      const double den = 1.0 - p.a / y * ct * dt + p.b / y * tn * dt;
      if (std::abs(den) < kWfDenominatorGuard) {
        throw StepSizeError("LSD2 denominator vanishes; use a smaller step");
      }
      return detail::fold_angle((noise + y) / den);
    }
    case Variant::lsd3:
      return detail::fold_angle((noise + y + p.a * ct * dt) / (1.0 + p.b / y * tn * dt));
    case Variant::lsd4: {
      const double phi = noise + y - dt / y + (p.a * ct - p.b * tn) * dt;
      return detail::fold_angle(positive_quadratic_root(1.0, phi, dt));
    }
    default:
      throw ConfigError("not a Wright-Fisher LSD variant: " + std::string(to_string(v)));
  }
}

/// Implicit map on the angle y. With the `printed` sign it is increasing only up to
/// the zero of its derivative, so its interval stops there.
inline MonotoneSpec wf_implicit_map(const WfParams& p, double dt, WfImplicitSign sign) {
  const double s = sign == WfImplicitSign::printed ? -1.0 : 1.0;
  MonotoneSpec spec;
  spec.g = [=](double x) {
    const double t = std::tan(x / 2.0);
    return x - p.a / t * dt + s * p.b * t * dt;
  };
  spec.dg = [=](double x) {
    const double sn = std::sin(x / 2.0);
    const double cs = std::cos(x / 2.0);
    return 1.0 + p.a / (2.0 * sn * sn) * dt + s * p.b / (2.0 * cs * cs) * dt;
  };
  spec.lo = 0.0;
  spec.hi = std::numbers::pi;
  if (sign == WfImplicitSign::printed) {
    MonotoneSpec slope;
    slope.g = spec.dg;
    slope.lo = 0.0;
    slope.hi = std::numbers::pi;
    slope.direction = Monotonicity::decreasing;
    spec.hi = invert_monotone(slope, 0.0, 1e-14);
  }
  return spec;
}

inline StepState wf_companion_step(Variant v, const WfParams& p, const StepState& s,
                                   double dW, double dt,
                                   WfImplicitSign sign = WfImplicitSign::printed) {
  detail::require_step(dt);
  StepState out;
  const double x = s.value;
  switch (v) {
    case Variant::sd:
    case Variant::sd_alt: {
      const double inner = v == Variant::sd
                               ? x + (p.a + x * p.beta) * dt
                               : (x * (1.0 + p.beta * dt) + p.a * dt) /
                                     (1.0 + (p.a + p.beta) * dt);
      const double angle = wf_angle(inner, out.clamped) / 2.0;
      const double sn = std::sin(p.k3 / 2.0 * dW + angle);
      out.value = sn * sn;
      return out;
    }
    case Variant::biss: {
      const double eps = std::min({p.k1 * dt, (p.k2 - p.k1) * dt, 1.0 - p.k1 * dt,
                                   1.0 - (p.k2 - p.k1) * dt});
      if (!(eps > 0.0)) throw StepSizeError("BISS needs a positive epsilon; use a smaller step");
      double control;
      if (x < eps || x > 1.0 - eps) {
        control = p.k3 * std::sqrt((1.0 - eps) / eps);
      } else if (x < 0.5) {
        control = p.k3 * std::sqrt((1.0 - x) / x);
      } else {
        control = p.k3 * std::sqrt(x / (1.0 - x));
      }
      double var = x * (1.0 - x);
      if (var < 0.0) {
        var = 0.0;
        out.clamped = true;
      }
      out.value = x + (p.k1 - p.k2 * x) * dt +
                  p.k3 * std::sqrt(var) * dW / (1.0 + control * std::abs(dW)) *
                      (1.0 - p.k2 * dt);
      return out;
    }
    case Variant::hyb: {
      if (!wf_hyb_admissible(p)) {
        throw ConfigError("HYB requires k1/k2 in (k3^2/(4 k2), 1 - k3^2/(4 k2))");
      }
      const double angle = wf_angle(x, out.clamped) / 2.0;
      const double sn = std::sin(p.k3 / 2.0 * dW + angle);
      out.value = p.a / p.beta * std::expm1(p.beta * dt) + std::exp(p.beta * dt) * sn * sn;
      return out;
    }
    case Variant::implicit: {
      auto spec = wf_implicit_map(p, dt, sign);
      if (s.value > spec.lo && s.value < spec.hi) spec.seed = s.value;
      out.value = invert_monotone(spec, s.value + p.k3 * dW);
      return out;
    }
    default:
      throw ConfigError("not a Wright-Fisher companion variant: " +
                        std::string(to_string(v)));
  }
}

// ---------------------------------------------------------------------------
// Heston 3/2

inline double heston_lsd_step(Variant v, const Heston32Params& p, double y, double dW,
                              double dt) {
  detail::require_step(dt);
  detail::require_lamperti_positive(y);
  switch (v) {
    case Variant::lsd1: {
      const double A = dW + (1.0 - p.k1 * dt / 2.0) * y;
      return std::sqrt(A * A + p.c_star * dt);
    }
    case Variant::lsd2: {
      const double A = dW + y;
      const double k = -p.k1 * dt;
      return std::sqrt(A * A * std::exp(k) + p.c_star * -std::expm1(k) / p.k1);
    }
    default:
      throw ConfigError("not a Heston LSD variant: " + std::string(to_string(v)));
  }
}

/// Implicit map on w = x^(-1/2): G(w) = (1 + k1 dt/2) w - c_impl dt / w.
inline MonotoneSpec heston_implicit_map(const Heston32Params& p, double dt) {
  MonotoneSpec spec;
  const double lead = 1.0 + p.k1 * dt / 2.0;
  spec.g = [=](double w) { return lead * w - p.c_impl * dt / w; };
  spec.dg = [=](double w) { return lead + p.c_impl * dt / (w * w); };
  return spec;
}

/// SD_EXP steps x; IMPLICIT steps w = x^(-1/2) through the closed-form root
/// of G(w) = w_n - (k3/2) dW.
inline StepState heston_companion_step(Variant v, const Heston32Params& p,
                                       const StepState& s, double dW, double dt) {
  detail::require_step(dt);
  StepState out;
  switch (v) {
    case Variant::sd_exp: {
      const double x = s.value;
      if (!(x > 0.0)) throw DomainError("Heston SD state must be positive");
      out.value = x * std::exp((p.k1 - p.k2 * x - p.k3 * p.k3 * x / 2.0) * dt +
                               p.k3 * std::sqrt(x) * dW);
      return out;
    }
    case Variant::implicit: {
      const double u = s.value - p.k3 / 2.0 * dW;
      out.value = positive_quadratic_root(1.0 + p.k1 * dt / 2.0, u, p.c_impl * dt);
      return out;
    }
    default:
      throw ConfigError("not a Heston companion variant: " + std::string(to_string(v)));
  }
}

// ---------------------------------------------------------------------------
// Ait-Sahalia

inline double ait_lsd_step(Variant v, const AitParams& p, double y, double dW, double dt) {
  detail::require_step(dt);
  detail::require_lamperti_positive(y);
  const double phi = -p.K3 * dW + y + p.K0 * std::pow(y, p.e2) * dt;
  const double c2 = (p.K2 * pow0(y, p.e3) + p.K4) * dt;
  switch (v) {
    case Variant::lsd1: {
      const double c1 = 1.0 + p.Km1 * std::pow(y, p.e4) * dt + p.K1 * dt;
      return positive_quadratic_root(c1, phi, c2);
    }
    case Variant::lsd2: {
      const double phi_hat = phi - p.Km1 * std::pow(y, p.e1) * dt;
      return positive_quadratic_root(1.0 + p.K1 * dt, phi_hat, c2);
    }
    default:
      throw ConfigError("not an Ait-Sahalia LSD variant: " + std::string(to_string(v)));
  }
}

/// Implicit map on z = x^(1-rho). IMPLICIT uses
///   G(z) = z + (1 + Km1 z^e1 - K0 z^e2 + K1 z - K2 z^e5 + K4 / z) dt,
/// IMPLICIT_DRIFT the backward-Euler map of the Lamperti drift
///   G(z) = z + (Km1 z^e1 - K0 z^e2 + K1 z - K2 z^e5 - K4 / z) dt.
inline MonotoneSpec ait_implicit_map(const AitParams& p, double dt, Variant v) {
  if (v != Variant::implicit && v != Variant::implicit_drift) {
    throw ConfigError("not an Ait-Sahalia implicit variant");
  }
  const double one = v == Variant::implicit ? 1.0 : 0.0;
  const double k4 = v == Variant::implicit ? p.K4 : -p.K4;
  MonotoneSpec spec;
  spec.g = [=](double z) {
    return z + (one + p.Km1 * std::pow(z, p.e1) - p.K0 * std::pow(z, p.e2) + p.K1 * z -
                p.K2 * pow0(z, p.e5) + k4 / z) *
                   dt;
  };
  spec.dg = [=](double z) {
    const double t5 = p.e5 == 0.0 ? 0.0 : p.e5 * p.K2 * std::pow(z, p.e5 - 1.0);
    return 1.0 + (p.e1 * p.Km1 * std::pow(z, p.e1 - 1.0) -
                  p.e2 * p.K0 * std::pow(z, p.e2 - 1.0) + p.K1 - t5 - k4 / (z * z)) *
                     dt;
  };
  return spec;
}

inline StepState ait_companion_step(Variant v, const AitParams& p, const StepState& s,
                                    double dW, double dt) {
  detail::require_step(dt);
  if (!(s.value > 0.0)) throw DomainError("Ait-Sahalia implicit state must be positive");
  auto spec = ait_implicit_map(p, dt, v);
  spec.seed = s.value;
  StepState out;
  out.value = invert_monotone(spec, s.value - p.K3 * dW);
  return out;
}

// ---------------------------------------------------------------------------
// Stepper

/// A scheme bound to its parameters and options.
class Stepper {
 public:
  Stepper(SchemeId id, ModelParams params, SchemeOptions options = {})
      : id_(id), params_(std::move(params)), options_(options) {
    if (model_of(params_) != id_.model) {
      throw ConfigError("scheme " + to_string(id_) + " does not match model " +
                        std::string(to_string(model_of(params_))));
    }
    detail::require_variant(id_.model, id_.variant);
    if (id_.variant == Variant::exact_ou) {
      require_dimension_two(std::get<CirParams>(params_));
      if (!(options_.ou_split > 0.0 && options_.ou_split < 1.0)) {
        throw ConfigError("EXACT_OU split m must lie in (0, 1)");
      }
    }
    if (id_.variant == Variant::hyb && !wf_hyb_admissible(std::get<WfParams>(params_))) {
      throw ConfigError("HYB requires k1/k2 in (k3^2/(4 k2), 1 - k3^2/(4 k2))");
    }
    if (!(options_.theta >= 0.0 && options_.theta <= 1.0)) {
      throw ConfigError("theta must lie in [0, 1]");
    }
  }

  const SchemeId& id() const noexcept { return id_; }
  const ModelParams& params() const noexcept { return params_; }
  const SchemeOptions& options() const noexcept { return options_; }
  std::size_t drivers() const noexcept { return id_.variant == Variant::exact_ou ? 2 : 1; }

  /// Initial state for original-space start x0.
  StepState initial_state(double x0) const {
    require_in_domain(x0);
    StepState s;
    if (id_.variant == Variant::exact_ou) {
      s.x1 = std::sqrt(options_.ou_split * x0);
      s.x2 = std::sqrt((1.0 - options_.ou_split) * x0);
      s.value = x0;
      return s;
    }
    s.value = to_working(x0);
    return s;
  }

  /// Original-space coordinate -> the scheme's stepping coordinate.
  double to_working(double x) const {
    if (is_lamperti(id_.variant)) return lamperti_forward(params_, x);
    switch (id_.model) {
      case Model::cir:
        return id_.variant == Variant::ns ? std::sqrt(x) : x;
      case Model::cev:
        return id_.variant == Variant::implicit
                   ? std::pow(x, 1.0 - std::get<CevParams>(params_).q)
                   : x;
      case Model::wf:
        return id_.variant == Variant::implicit ? 2.0 * std::asin(std::sqrt(x)) : x;
      case Model::heston32:
        return id_.variant == Variant::implicit ? 1.0 / std::sqrt(x) : x;
      case Model::ait:
        return std::pow(x, 1.0 - std::get<AitParams>(params_).rho);
    }
    return x;
  }

  /// Real part of the original-space value represented by `s`.
  double observe(const StepState& s) const {
    const double w = s.value;
    if (id_.variant == Variant::exact_ou) return s.x1 * s.x1 + s.x2 * s.x2;
    if (is_lamperti(id_.variant)) {
      return std::visit([w](const auto& p) { return lamperti_image(p, w); }, params_);
    }
    switch (id_.model) {
      case Model::cir:
        if (id_.variant == Variant::ns) return w * w - s.imag * s.imag;
        return w;
      case Model::cev:
        if (id_.variant == Variant::implicit) {
          return std::pow(w, 1.0 / (1.0 - std::get<CevParams>(params_).q));
        }
        return w;
      case Model::wf:
        if (id_.variant == Variant::implicit) {
          const double sn = std::sin(w / 2.0);
          return sn * sn;
        }
        return w;
      case Model::heston32:
        return id_.variant == Variant::implicit ? 1.0 / (w * w) : w;
      case Model::ait:
        return std::pow(w, 1.0 / (1.0 - std::get<AitParams>(params_).rho));
    }
    return w;
  }

  /// Advances `s` by one step; `dW2` feeds the second driver of EXACT_OU.
  void step(StepState& s, double dW, double dt, double dW2 = 0.0) const {
    const Variant v = id_.variant;
    if (v == Variant::exact_ou) {
      const auto next = cir_exact_ou_step(std::get<CirParams>(params_),
                                          {s.x1, s.x2, s.value}, dW, dW2, dt);
      s.x1 = next.x1;
      s.x2 = next.x2;
      s.value = next.x;
      s.non_real = s.clamped = false;
      return;
    }
    if (is_lamperti(v)) {
      const double y = s.value;
      switch (id_.model) {
        case Model::cir: s.value = cir_lsd_step(v, std::get<CirParams>(params_), y, dW, dt); break;
        case Model::cev: s.value = cev_lsd_step(v, std::get<CevParams>(params_), y, dW, dt); break;
        case Model::wf: s.value = wf_lsd_step(v, std::get<WfParams>(params_), y, dW, dt); break;
        case Model::heston32:
          s.value = heston_lsd_step(v, std::get<Heston32Params>(params_), y, dW, dt);
          break;
        case Model::ait: s.value = ait_lsd_step(v, std::get<AitParams>(params_), y, dW, dt); break;
      }
      s.non_real = s.clamped = false;
      return;
    }
    switch (id_.model) {
      case Model::cir:
        s = cir_companion_step(v, std::get<CirParams>(params_), s, dW, dt, options_.theta);
        break;
      case Model::cev:
        s = cev_companion_step(v, std::get<CevParams>(params_), s, dW, dt, options_.theta);
        break;
      case Model::wf:
        s = wf_companion_step(v, std::get<WfParams>(params_), s, dW, dt,
                              options_.wf_implicit_sign);
        break;
      case Model::heston32:
        s = heston_companion_step(v, std::get<Heston32Params>(params_), s, dW, dt);
        break;
      case Model::ait:
        s = ait_companion_step(v, std::get<AitParams>(params_), s, dW, dt);
        break;
    }
  }

 private:
  // Inverse Lamperti map without domain checks; WF angles arrive in [0, pi].
  static double lamperti_image(const CirParams& p, double z) { return p.k3 * p.k3 * z * z / 4.0; }
  static double lamperti_image(const CevParams& p, double z) {
    return std::pow(p.k3 * (1.0 - p.q) * z, 1.0 / (1.0 - p.q));
  }
  static double lamperti_image(const WfParams&, double z) {
    const double sn = std::sin(z / 2.0);
    return sn * sn;
  }
  static double lamperti_image(const Heston32Params& p, double z) {
    return 4.0 / (p.k3 * p.k3 * z * z);
  }
  static double lamperti_image(const AitParams& p, double z) {
    return std::pow(z, 1.0 / (1.0 - p.rho));
  }

  void require_in_domain(double x0) const {
    const bool ok = id_.model == Model::wf ? (x0 > 0.0 && x0 < 1.0)
                                           : (x0 > 0.0 && std::isfinite(x0));
    if (!ok) {
      throw DomainError("initial state " + std::to_string(x0) + " outside the domain of " +
                        std::string(to_string(id_.model)));
    }
  }

  SchemeId id_;
  ModelParams params_;
  SchemeOptions options_;
};

}  // namespace lsd
