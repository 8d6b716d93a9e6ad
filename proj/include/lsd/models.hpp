#pragma once

// Parameter containers for the five scalar models, their Lamperti
// transforms, and informational domain conditions.
//
//   CIR      dx = (k1 - k2 x) dt + k3 sqrt(x) dW          z = (2/k3) sqrt(x)
//   CEV      dx = (k1 - k2 x) dt + k3 x^q dW              z = x^(1-q) / (k3 (1-q))
//   WF       dx = (k1 - k2 x) dt + k3 sqrt(x(1-x)) dW     z = 2 asin(sqrt(x))
//   Heston   dx = (k1 x - k2 x^2) dt + k3 x^(3/2) dW      z = (2/k3) x^(-1/2)
//   Ait      dx = (km1/x - k0 + k1 x - k2 x^r) dt + k3 x^rho dW   z = x^(1-rho)

#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include "lsd/error.hpp"

namespace lsd {

enum class Model { cir, cev, wf, heston32, ait };

inline std::string_view to_string(Model m) {
  switch (m) {
    case Model::cir: return "cir";
    case Model::cev: return "cev";
    case Model::wf: return "wf";
    case Model::heston32: return "heston32";
    case Model::ait: return "ait";
  }
  return "?";
}

inline std::optional<Model> parse_model(std::string_view name) {
  if (name == "cir") return Model::cir;
  if (name == "cev") return Model::cev;
  if (name == "wf") return Model::wf;
  if (name == "heston32") return Model::heston32;
  if (name == "ait") return Model::ait;
  return std::nullopt;
}

namespace detail {

inline void require_positive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw ConfigError(std::string("parameter ") + name + " must be positive and finite");
  }
}

}  // namespace detail

struct CirParams {
  double k1 = 0, k2 = 0, k3 = 0;
  double a = 0;  // 2 k1 / k3^2
  double b = 0;  // k2/2 + k3^2/8

  CirParams() = default;
  CirParams(double k1_, double k2_, double k3_) : k1(k1_), k2(k2_), k3(k3_) {
    detail::require_positive(k1, "k1");
    detail::require_positive(k2, "k2");
    detail::require_positive(k3, "k3");
    a = 2.0 * k1 / (k3 * k3);
    b = k2 / 2.0 + k3 * k3 / 8.0;
  }

  /// Dimension of the associated squared-Bessel process, 4 k1 / k3^2.
  double dimension() const { return 4.0 * k1 / (k3 * k3); }

  friend bool operator==(const CirParams&, const CirParams&) = default;
};

struct CevParams {
  double k1 = 0, k2 = 0, k3 = 0, q = 0;
  double a = 0, b = 0, c = 0;

  CevParams() = default;
  CevParams(double k1_, double k2_, double k3_, double q_)
      : k1(k1_), k2(k2_), k3(k3_), q(q_) {
    detail::require_positive(k1, "k1");
    detail::require_positive(k2, "k2");
    detail::require_positive(k3, "k3");
    if (!(q > 0.5 && q < 1.0)) throw ConfigError("CEV exponent q must lie in (1/2, 1)");
    a = k1 * std::pow(k3, (1.0 - 2.0 * q) / (1.0 - q)) *
        std::pow(1.0 - q, -q / (1.0 - q));
    b = q / (2.0 - 2.0 * q);
    c = k2 * (1.0 - q);
  }

  friend bool operator==(const CevParams&, const CevParams&) = default;
};

struct WfParams {
  double k1 = 0, k2 = 0, k3 = 0;
  double a = 0;     // k1 - k3^2/4
  double b = 0;     // k2 - k1 - k3^2/4
  double beta = 0;  // k3^2/2 - k2

  WfParams() = default;
  WfParams(double k1_, double k2_, double k3_) : k1(k1_), k2(k2_), k3(k3_) {
    detail::require_positive(k1, "k1");
    detail::require_positive(k2, "k2");
    detail::require_positive(k3, "k3");
    a = k1 - k3 * k3 / 4.0;
    b = k2 - k1 - k3 * k3 / 4.0;
    beta = k3 * k3 / 2.0 - k2;
    if (!(a > 0.0 && b > 0.0)) {
      throw ConfigError("Wright-Fisher parameters need k1 > k3^2/4 and k2 - k1 > k3^2/4");
    }
  }

  friend bool operator==(const WfParams&, const WfParams&) = default;
};

struct Heston32Params {
  double k1 = 0, k2 = 0, k3 = 0;
  double c_star = 0;  // 4 k2 / k3^2 + 6, the Lamperti-space constant
  double c_impl = 0;  // k2/2 + 3 k3^2 / 8, the x^(-1/2)-space constant

  Heston32Params() = default;
  Heston32Params(double k1_, double k2_, double k3_) : k1(k1_), k2(k2_), k3(k3_) {
    detail::require_positive(k1, "k1");
    detail::require_positive(k2, "k2");
    detail::require_positive(k3, "k3");
    c_star = 4.0 * k2 / (k3 * k3) + 6.0;
    c_impl = k2 / 2.0 + 3.0 * k3 * k3 / 8.0;
  }

  friend bool operator==(const Heston32Params&, const Heston32Params&) = default;
};

struct AitParams {
  double km1 = 0, k0 = 0, k1 = 0, k2 = 0, k3 = 0, r = 0, rho = 0;
  // K_i = k_i (rho - 1), K4 = rho (rho - 1) k3^2 / 2
  double Km1 = 0, K0 = 0, K1 = 0, K2 = 0, K3 = 0, K4 = 0;
  double e1 = 0;  // (rho + 1) / (rho - 1)
  double e2 = 0;  // rho / (rho - 1)
  double e3 = 0;  // (2 rho - r - 1) / (rho - 1)
  double e4 = 0;  // 2 / (rho - 1)
  double e5 = 0;  // (rho - r) / (rho - 1)

  AitParams() = default;
  AitParams(double km1_, double k0_, double k1_, double k2_, double k3_, double r_,
            double rho_)
      : km1(km1_), k0(k0_), k1(k1_), k2(k2_), k3(k3_), r(r_), rho(rho_) {
    detail::require_positive(km1, "km1");
    detail::require_positive(k0, "k0");
    detail::require_positive(k1, "k1");
    detail::require_positive(k2, "k2");
    detail::require_positive(k3, "k3");
    if (!(r > 1.0) || !std::isfinite(r)) throw ConfigError("exponent r must exceed 1");
    if (!(rho > 1.0) || !std::isfinite(rho)) throw ConfigError("exponent rho must exceed 1");
    const double s = rho - 1.0;
    Km1 = km1 * s;
    K0 = k0 * s;
    K1 = k1 * s;
    K2 = k2 * s;
    K3 = k3 * s;
    K4 = rho * s * k3 * k3 / 2.0;
    e1 = (rho + 1.0) / s;
    e2 = rho / s;
    e3 = (2.0 * rho - r - 1.0) / s;
    e4 = 2.0 / s;
    e5 = (rho - r) / s;
  }

  friend bool operator==(const AitParams&, const AitParams&) = default;
};

using ModelParams = std::variant<CirParams, CevParams, WfParams, Heston32Params, AitParams>;

inline Model model_of(const CirParams&) { return Model::cir; }
inline Model model_of(const CevParams&) { return Model::cev; }
inline Model model_of(const WfParams&) { return Model::wf; }
inline Model model_of(const Heston32Params&) { return Model::heston32; }
inline Model model_of(const AitParams&) { return Model::ait; }
inline Model model_of(const ModelParams& p) {
  return std::visit([](const auto& q) { return model_of(q); }, p);
}

/// x^e with the convention x^0 = 1 (including x = 0).
inline double pow0(double x, double e) { return e == 0.0 ? 1.0 : std::pow(x, e); }

// ---------------------------------------------------------------------------
// Lamperti transforms

namespace detail {

inline void require_open_positive(double x) {
  if (!(x > 0.0) || !std::isfinite(x)) {
    throw DomainError("state must lie in (0, inf), got " + std::to_string(x));
  }
}

}  // namespace detail

inline double lamperti_forward(const CirParams& p, double x) {
  detail::require_open_positive(x);
  return 2.0 / p.k3 * std::sqrt(x);
}
inline double lamperti_forward(const CevParams& p, double x) {
  detail::require_open_positive(x);
  return std::pow(x, 1.0 - p.q) / (p.k3 * (1.0 - p.q));
}
inline double lamperti_forward(const WfParams&, double x) {
  if (!(x > 0.0 && x < 1.0)) {
    throw DomainError("Wright-Fisher state must lie in (0, 1), got " + std::to_string(x));
  }
  return 2.0 * std::asin(std::sqrt(x));
}
inline double lamperti_forward(const Heston32Params& p, double x) {
  detail::require_open_positive(x);
  return 2.0 / (p.k3 * std::sqrt(x));
}
inline double lamperti_forward(const AitParams& p, double x) {
  detail::require_open_positive(x);
  return std::pow(x, 1.0 - p.rho);
}

inline double lamperti_inverse(const CirParams& p, double z) {
  detail::require_open_positive(z);
  return p.k3 * p.k3 * z * z / 4.0;
}
inline double lamperti_inverse(const CevParams& p, double z) {
  detail::require_open_positive(z);
  return std::pow(p.k3 * (1.0 - p.q) * z, 1.0 / (1.0 - p.q));
}
inline double lamperti_inverse(const WfParams&, double z) {
  if (!(z > 0.0 && z < std::numbers::pi)) {
    throw DomainError("Wright-Fisher Lamperti state must lie in (0, pi), got " +
                      std::to_string(z));
  }
  const double s = std::sin(z / 2.0);
  return s * s;
}
inline double lamperti_inverse(const Heston32Params& p, double z) {
  detail::require_open_positive(z);
  return 4.0 / (p.k3 * p.k3 * z * z);
}
inline double lamperti_inverse(const AitParams& p, double z) {
  detail::require_open_positive(z);
  return std::pow(z, 1.0 / (1.0 - p.rho));
}

inline double lamperti_forward(const ModelParams& p, double x) {
  return std::visit([x](const auto& q) { return lamperti_forward(q, x); }, p);
}
inline double lamperti_inverse(const ModelParams& p, double z) {
  return std::visit([z](const auto& q) { return lamperti_inverse(q, z); }, p);
}

/// Angle 2 asin(sqrt(x)) with the argument clamped to [0, 1]; `clamped` is
/// set when clamping changed the argument.
inline double wf_angle(double x, bool& clamped) {
  double s = x;
  if (s < 0.0) {
    s = 0.0;
    clamped = true;
  } else if (s > 1.0) {
    s = 1.0;
    clamped = true;
  }
  return 2.0 * std::asin(std::sqrt(s));
}

// ---------------------------------------------------------------------------
// Domain conditions (informational: schemes still run when these fail)

struct DomainReport {
  Model model = Model::cir;
  /// CIR: k3^2 <= 2 k1.
  std::optional<bool> feller;
  /// CIR: 4 k1 / k3^2 == 2, enabling the squared-OU exact construction.
  std::optional<bool> exact_ou_applicable;
  /// WF: 2 k1 >= k3^2 and 2 (k2 - k1) >= k3^2.
  std::optional<bool> wf_boundary_unattainable;
  /// WF: k1/k2 in (k3^2/(4 k2), 1 - k3^2/(4 k2)).
  std::optional<bool> hyb_admissible;
};

inline bool wf_hyb_admissible(const WfParams& p) {
  const double ratio = p.k1 / p.k2;
  const double edge = p.k3 * p.k3 / (4.0 * p.k2);
  return ratio > edge && ratio < 1.0 - edge;
}

inline DomainReport domain_report(const ModelParams& params) {
  DomainReport rep;
  rep.model = model_of(params);
  if (const auto* p = std::get_if<CirParams>(&params)) {
    rep.feller = p->k3 * p->k3 <= 2.0 * p->k1;
    rep.exact_ou_applicable = std::abs(p->dimension() - 2.0) <= 1e-12;
  } else if (const auto* w = std::get_if<WfParams>(&params)) {
    rep.wf_boundary_unattainable =
        2.0 * w->k1 >= w->k3 * w->k3 && 2.0 * (w->k2 - w->k1) >= w->k3 * w->k3;
    rep.hyb_admissible = wf_hyb_admissible(*w);
  }
  return rep;
}

}  // namespace lsd
