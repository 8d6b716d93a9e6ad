#pragma once

// INI-style experiment configuration.
//
//   [experiment]  kind, name, output
//   [model]       model, k1, k2, k3, km1, k0, q, r, rho, x0
//   [simulation]  T, dt, ref_step, M, seed, theta, m, schemes, reference
//   [flags]       wf_implicit_sign, ait_implicit_variant
//
// Keys may also appear before the first header. Lists are comma separated.
// '#' and ';' start comments.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "lsd/error.hpp"
#include "lsd/models.hpp"
#include "lsd/schemes.hpp"

namespace lsd {

enum class ExperimentKind { simulate, convergence, compare, exact_cir, scan };

inline std::string_view to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::simulate: return "simulate";
    case ExperimentKind::convergence: return "convergence";
    case ExperimentKind::compare: return "compare";
    case ExperimentKind::exact_cir: return "exact-cir";
    case ExperimentKind::scan: return "scan";
  }
  return "?";
}

enum class AitImplicitVariant { printed, drift };

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::simulate;
  std::string name = "lsd";
  std::string output = ".";
  Model model = Model::cir;
  std::map<std::string, double> params;  // k1, k2, ... as given
  double x0 = 0.0;
  double T = 1.0;
  std::vector<double> dts;
  double ref_step = 0.0;
  std::size_t M = 1;
  std::uint64_t seed = 0;
  double theta = 1.0;
  double m = 0.5;
  std::vector<Variant> schemes;
  std::optional<Variant> reference;
  WfImplicitSign wf_implicit_sign = WfImplicitSign::printed;
  AitImplicitVariant ait_implicit_variant = AitImplicitVariant::printed;

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

/// Model parameters required by each model, in print order.
inline std::vector<std::string> param_keys(Model m) {
  switch (m) {
    case Model::cir:
    case Model::wf:
    case Model::heston32: return {"k1", "k2", "k3"};
    case Model::cev: return {"k1", "k2", "k3", "q"};
    case Model::ait: return {"km1", "k0", "k1", "k2", "k3", "r", "rho"};
  }
  return {};
}

inline ModelParams make_params(Model m, const std::map<std::string, double>& v) {
  auto g = [&](const char* k) {
    const auto it = v.find(k);
    if (it == v.end()) throw ConfigError(std::string("missing key ") + k);
    return it->second;
  };
  switch (m) {
    case Model::cir: return CirParams(g("k1"), g("k2"), g("k3"));
    case Model::cev: return CevParams(g("k1"), g("k2"), g("k3"), g("q"));
    case Model::wf: return WfParams(g("k1"), g("k2"), g("k3"));
    case Model::heston32: return Heston32Params(g("k1"), g("k2"), g("k3"));
    case Model::ait:
      return AitParams(g("km1"), g("k0"), g("k1"), g("k2"), g("k3"), g("r"), g("rho"));
  }
  throw ConfigError("unknown model");
}

inline ModelParams make_params(const ExperimentConfig& c) { return make_params(c.model, c.params); }

/// Options handed to every Stepper of the experiment.
inline SchemeOptions scheme_options(const ExperimentConfig& c) {
  SchemeOptions o;
  o.theta = c.theta;
  o.wf_implicit_sign = c.wf_implicit_sign;
  o.ou_split = c.m;
  return o;
}

/// Convergence ladder T 2^-6 ... T 2^-11.
inline std::vector<double> default_ladder(double T) {
  std::vector<double> out;
  for (int k = 6; k <= 11; ++k) out.push_back(T * std::ldexp(1.0, -k));
  return out;
}

namespace detail {

struct RawEntry {
  std::string value;
  int line = 0;
};

inline std::string_view trim(std::string_view s) {
  const auto ws = [](char c) { return c == ' ' || c == '\t' || c == '\r'; };
  while (!s.empty() && ws(s.front())) s.remove_prefix(1);
  while (!s.empty() && ws(s.back())) s.remove_suffix(1);
  return s;
}

inline const std::map<std::string, std::string>& key_sections() {
  static const std::map<std::string, std::string> table = {
      {"kind", "experiment"},  {"name", "experiment"},
      {"output", "experiment"}, {"model", "model"},
      {"k1", "model"},          {"k2", "model"},
      {"k3", "model"},          {"km1", "model"},
      {"k0", "model"},          {"q", "model"},
      {"r", "model"},           {"rho", "model"},
      {"x0", "model"},          {"T", "simulation"},
      {"dt", "simulation"},     {"ref_step", "simulation"},
      {"M", "simulation"},      {"seed", "simulation"},
      {"theta", "simulation"},  {"m", "simulation"},
      {"schemes", "simulation"}, {"reference", "simulation"},
      {"wf_implicit_sign", "flags"}, {"ait_implicit_variant", "flags"},
  };
  return table;
}

inline double parse_real(const std::string& key, std::string_view text) {
  text = trim(text);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty() ||
      !std::isfinite(v)) {
    throw ConfigError("key " + key + ": not a finite number: '" + std::string(text) + "'");
  }
  return v;
}

inline std::uint64_t parse_unsigned(const std::string& key, std::string_view text) {
  text = trim(text);
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
    throw ConfigError("key " + key + ": not a non-negative integer: '" + std::string(text) +
                      "'");
  }
  return v;
}

inline std::vector<std::string> split_list(std::string_view text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t comma = text.find(',', start);
    const std::size_t end = comma == std::string_view::npos ? text.size() : comma;
    out.emplace_back(trim(text.substr(start, end - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

inline std::string fmt_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

inline std::optional<ExperimentKind> parse_kind(std::string_view s) {
  for (auto k : {ExperimentKind::simulate, ExperimentKind::convergence, ExperimentKind::compare,
                 ExperimentKind::exact_cir, ExperimentKind::scan}) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

/// Resolves a scheme name for a model; IMPLICIT on the Ait-Sahalia model
/// follows the ait_implicit_variant flag.
inline Variant resolve_scheme(Model model, const std::string& name, AitImplicitVariant ait,
                              const std::string& key) {
  const auto v = parse_variant(name);
  if (!v) throw ConfigError("key " + key + ": unknown scheme '" + name + "'");
  Variant out = *v;
  if (model == Model::ait && out == Variant::implicit && ait == AitImplicitVariant::drift) {
    out = Variant::implicit_drift;
  }
  if (!is_valid({model, out})) {
    throw ConfigError("key " + key + ": scheme " + name + " is not defined for model " +
                      std::string(to_string(model)));
  }
  return out;
}

inline ExperimentConfig parse_config(std::string_view text) {
  using detail::RawEntry;
  std::map<std::string, RawEntry> raw;
  std::string section;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    std::string_view line =
        text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    const std::size_t hash = line.find_first_of("#;");
    if (hash != std::string_view::npos) line = line.substr(0, hash);
    const std::size_t first = line.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) continue;
    const auto where = [&](std::size_t col) {
      return "line " + std::to_string(line_no) + ", column " + std::to_string(col + 1) + ": ";
    };
    if (line[first] == '[') {
      const std::size_t close = line.find(']', first);
      if (close == std::string_view::npos) throw ConfigError(where(first) + "unterminated section header");
      if (!detail::trim(line.substr(close + 1)).empty()) {
        throw ConfigError(where(close + 1) + "unexpected text after section header");
      }
      section = std::string(detail::trim(line.substr(first + 1, close - first - 1)));
      if (section != "experiment" && section != "model" && section != "simulation" &&
          section != "flags") {
        throw ConfigError(where(first) + "unknown section [" + section + "]");
      }
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError(where(first) + "expected key = value");
    const std::string key(detail::trim(line.substr(0, eq)));
    if (key.empty()) throw ConfigError(where(first) + "empty key");
    const auto& table = detail::key_sections();
    const auto it = table.find(key);
    if (it == table.end()) {
      throw ConfigError("line " + std::to_string(line_no) + ": unknown key " + key);
    }
    if (!section.empty() && it->second != section) {
      throw ConfigError("line " + std::to_string(line_no) + ": key " + key +
                        " belongs in [" + it->second + "], not [" + section + "]");
    }
    const std::string value(detail::trim(line.substr(eq + 1)));
    if (value.empty()) throw ConfigError(where(eq + 1) + "missing value for key " + key);
    if (const auto prev = raw.find(key); prev != raw.end()) {
      throw ConfigError("duplicate key " + key + " on lines " +
                        std::to_string(prev->second.line) + " and " + std::to_string(line_no));
    }
    raw[key] = RawEntry{value, line_no};
  }

  auto get = [&](const std::string& k) -> const std::string* {
    const auto it = raw.find(k);
    return it == raw.end() ? nullptr : &it->second.value;
  };
  auto real = [&](const std::string& k) { return detail::parse_real(k, *get(k)); };

  ExperimentConfig c;
  if (!get("kind")) throw ConfigError("missing experiment kind");
  const auto kind = parse_kind(*get("kind"));
  if (!kind) throw ConfigError("key kind: unknown experiment kind '" + *get("kind") + "'");
  c.kind = *kind;
  if (get("name")) c.name = *get("name");
  if (get("output")) c.output = *get("output");
  if (c.name.find_first_of("/\\") != std::string::npos) {
    throw ConfigError("key name: must not contain path separators");
  }

  if (!get("model")) throw ConfigError("missing key model");
  const auto model = parse_model(*get("model"));
  if (!model) throw ConfigError("key model: unknown model '" + *get("model") + "'");
  c.model = *model;
  const auto needed = param_keys(c.model);
  for (const char* k : {"k1", "k2", "k3", "km1", "k0", "q", "r", "rho"}) {
    if (!get(k)) continue;
    if (std::find(needed.begin(), needed.end(), k) == needed.end()) {
      throw ConfigError("key " + std::string(k) + " is not a parameter of model " +
                        std::string(to_string(c.model)));
    }
    c.params[k] = real(k);
  }
  for (const auto& k : needed) {
    if (!c.params.count(k)) throw ConfigError("missing key " + k);
  }
  make_params(c);
  if (!get("x0")) throw ConfigError("missing key x0");
  c.x0 = real("x0");
  const bool inside = c.model == Model::wf ? (c.x0 > 0.0 && c.x0 < 1.0)
                                           : (c.x0 > 0.0 && std::isfinite(c.x0));
  if (!inside) throw ConfigError("key x0: outside the domain of model " + std::string(to_string(c.model)));

  if (get("T")) c.T = real("T");
  if (!(c.T > 0.0)) throw ConfigError("key T: must be positive");
  if (get("dt")) {
    for (const auto& s : detail::split_list(*get("dt"))) {
      const double v = detail::parse_real("dt", s);
      if (!(v > 0.0)) throw ConfigError("key dt: step sizes must be positive");
      c.dts.push_back(v);
    }
  } else if (c.kind == ExperimentKind::convergence) {
    c.dts = default_ladder(c.T);
  } else {
    throw ConfigError("missing key dt");
  }
  if (get("ref_step")) {
    c.ref_step = real("ref_step");
    if (!(c.ref_step > 0.0)) throw ConfigError("key ref_step: must be positive");
  } else {
    c.ref_step = *std::min_element(c.dts.begin(), c.dts.end()) / 8.0;
  }
  if (get("M")) {
    c.M = detail::parse_unsigned("M", *get("M"));
    if (c.M < 1) throw ConfigError("key M: must be at least 1");
  } else {
    c.M = c.kind == ExperimentKind::convergence ? 1000
          : c.kind == ExperimentKind::scan     ? 100
                                               : 1;
  }
  if (get("seed")) c.seed = detail::parse_unsigned("seed", *get("seed"));
  if (get("theta")) c.theta = real("theta");
  if (!(c.theta >= 0.0 && c.theta <= 1.0)) throw ConfigError("key theta: must lie in [0, 1]");
  if (get("m")) c.m = real("m");
  if (!(c.m > 0.0 && c.m < 1.0)) throw ConfigError("key m: must lie in (0, 1)");

  if (const auto* s = get("wf_implicit_sign")) {
    if (*s == "printed") c.wf_implicit_sign = WfImplicitSign::printed;
    else if (*s == "corrected") c.wf_implicit_sign = WfImplicitSign::corrected;
    else throw ConfigError("key wf_implicit_sign: expected printed or corrected");
  }
  if (const auto* s = get("ait_implicit_variant")) {
    if (*s == "printed") c.ait_implicit_variant = AitImplicitVariant::printed;
    else if (*s == "drift") c.ait_implicit_variant = AitImplicitVariant::drift;
    else throw ConfigError("key ait_implicit_variant: expected printed or drift");
  }

  if (!get("schemes")) throw ConfigError("missing key schemes");
  for (const auto& s : detail::split_list(*get("schemes"))) {
    c.schemes.push_back(resolve_scheme(c.model, s, c.ait_implicit_variant, "schemes"));
  }
  if (get("reference")) {
    c.reference = resolve_scheme(c.model, *get("reference"), c.ait_implicit_variant, "reference");
  }

  switch (c.kind) {
    case ExperimentKind::convergence:
      if (c.schemes.size() != 1) throw ConfigError("key schemes: convergence takes one scheme");
      if (c.M < 2) throw ConfigError("key M: convergence needs at least 2 paths");
      break;
    case ExperimentKind::compare:
      if (c.schemes.size() != 2) throw ConfigError("key schemes: compare takes two schemes");
      break;
    case ExperimentKind::exact_cir:
      if (c.model != Model::cir) throw ConfigError("key model: exact-cir needs model cir");
      break;
    default:
      break;
  }
  return c;
}

/// Canonical text; parse_config(print_config(c)) == c.
inline std::string print_config(const ExperimentConfig& c) {
  using detail::fmt_real;
  std::ostringstream os;
  os << "[experiment]\n";
  os << "kind = " << to_string(c.kind) << "\n";
  os << "name = " << c.name << "\n";
  os << "output = " << c.output << "\n\n";
  os << "[model]\n";
  os << "model = " << to_string(c.model) << "\n";
  for (const auto& k : param_keys(c.model)) {
    if (const auto it = c.params.find(k); it != c.params.end()) {
      os << k << " = " << fmt_real(it->second) << "\n";
    }
  }
  os << "x0 = " << fmt_real(c.x0) << "\n\n";
  os << "[simulation]\n";
  os << "T = " << fmt_real(c.T) << "\n";
  os << "dt = ";
  for (std::size_t i = 0; i < c.dts.size(); ++i) os << (i ? ", " : "") << fmt_real(c.dts[i]);
  os << "\n";
  os << "ref_step = " << fmt_real(c.ref_step) << "\n";
  os << "M = " << c.M << "\n";
  os << "seed = " << c.seed << "\n";
  os << "theta = " << fmt_real(c.theta) << "\n";
  os << "m = " << fmt_real(c.m) << "\n";
  os << "schemes = ";
  for (std::size_t i = 0; i < c.schemes.size(); ++i) {
    os << (i ? ", " : "") << to_string(c.schemes[i]);
  }
  os << "\n";
  if (c.reference) os << "reference = " << to_string(*c.reference) << "\n";
  os << "\n[flags]\n";
  os << "wf_implicit_sign = "
     << (c.wf_implicit_sign == WfImplicitSign::printed ? "printed" : "corrected") << "\n";
  os << "ait_implicit_variant = "
     << (c.ait_implicit_variant == AitImplicitVariant::printed ? "printed" : "drift") << "\n";
  return os.str();
}

}  // namespace lsd
