#pragma once

// Path simulation, coupled strong-error estimation, order fitting and the
// CIR experiments (exact squared-OU comparison, domain-violation scan).
//
// Every Monte-Carlo path i draws its own lattice from stream_seed(seed, i),
// and per-path results are stored by index and reduced in index order, so
// output does not depend on the thread count.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <functional>
#include <limits>
#include <mutex>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "lsd/error.hpp"
#include "lsd/models.hpp"
#include "lsd/schemes.hpp"
#include "lsd/wiener.hpp"

namespace lsd {

/// Runs body(i) for i in [0, n) on up to `threads` workers. If any call
/// throws, the exception of the smallest failing index is rethrown.
inline void parallel_for(std::size_t n, unsigned threads,
                         const std::function<void(std::size_t)>& body) {
  const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(threads, n));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::mutex mu;
  std::size_t failed_at = n;
  std::exception_ptr failure;
  auto work = [&](std::size_t w) {
    for (std::size_t i = w; i < n; i += workers) {
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(mu);
        if (i < failed_at) {
          failed_at = i;
          failure = std::current_exception();
        }
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work, w);
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

// ---------------------------------------------------------------------------
// Paths

struct PathResult {
  std::vector<double> times;
  std::vector<double> values;
  std::size_t non_real_count = 0;
  std::size_t clamp_count = 0;
};

/// Uniform-step recursion over n steps of size T/n. `dW2` is the second
/// driver, required by EXACT_OU. Step failures are rethrown as
/// SimulationError carrying the 0-based step index.
inline PathResult simulate_path(const Stepper& stepper, double x0, double T, std::size_t n,
                                std::span<const double> dW,
                                std::span<const double> dW2 = {}) {
  if (!(T > 0.0) || !std::isfinite(T)) throw ConfigError("horizon T must be positive");
  if (dW.size() < n) throw ConfigError("driver shorter than the step count");
  if (stepper.drivers() == 2 && dW2.size() < n) {
    throw ConfigError("scheme needs a second driver of length at least n");
  }
  PathResult out;
  out.times.resize(n + 1);
  out.values.resize(n + 1);
  const double dt = T / static_cast<double>(n == 0 ? 1 : n);
  StepState s = stepper.initial_state(x0);
  out.times[0] = 0.0;
  out.values[0] = x0;
  for (std::size_t k = 0; k < n; ++k) {
    try {
      stepper.step(s, dW[k], dt, stepper.drivers() == 2 ? dW2[k] : 0.0);
    } catch (const Error& e) {
      throw SimulationError(k, e.what());
    }
    out.non_real_count += s.non_real;
    out.clamp_count += s.clamped;
    out.times[k + 1] = static_cast<double>(k + 1) * dt;
    out.values[k + 1] = stepper.observe(s);
  }
  return out;
}

inline PathResult simulate_path(SchemeId id, const ModelParams& params, double x0, double T,
                                std::size_t n, std::span<const double> dW, double theta = 1.0,
                                std::span<const double> dW2 = {}) {
  SchemeOptions opts;
  opts.theta = theta;
  return simulate_path(Stepper(id, params, opts), x0, T, n, dW, dW2);
}

/// X_T only, without storing the trajectory.
inline double terminal_value(const Stepper& stepper, double x0, double dt,
                             std::span<const double> dW, std::span<const double> dW2 = {}) {
  StepState s = stepper.initial_state(x0);
  const bool two = stepper.drivers() == 2;
  for (std::size_t k = 0; k < dW.size(); ++k) {
    try {
      stepper.step(s, dW[k], dt, two ? dW2[k] : 0.0);
    } catch (const Error& e) {
      throw SimulationError(k, e.what());
    }
  }
  return stepper.observe(s);
}

// ---------------------------------------------------------------------------
// Order fitting

struct OrderFit {
  double slope = 0.0;
  double intercept = 0.0;
};

/// Least-squares line through (ln dt, ln err).
inline OrderFit fit_order(std::span<const double> dts, std::span<const double> errs) {
  if (dts.size() != errs.size()) throw DataError("fit_order: length mismatch");
  if (dts.size() < 2) throw DataError("fit_order needs at least two points");
  const std::size_t n = dts.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(dts[i] > 0.0) || !(errs[i] > 0.0)) {
      throw DataError("fit_order needs positive step sizes and errors");
    }
    mx += std::log(dts[i]);
    my += std::log(errs[i]);
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = std::log(dts[i]) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(errs[i]) - my);
  }
  if (!(sxx > 0.0)) throw DataError("fit_order needs at least two distinct step sizes");
  OrderFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  return fit;
}

// ---------------------------------------------------------------------------
// Strong error

struct ErrorReport {
  std::vector<double> step_sizes;
  std::vector<double> rms_errors;
  std::vector<double> stderrs;
  double slope = std::numeric_limits<double>::quiet_NaN();
  double intercept = std::numeric_limits<double>::quiet_NaN();
  std::size_t M = 0;
  SchemeId reference;
  double ref_step = 0.0;

  friend bool operator==(const ErrorReport&, const ErrorReport&) = default;
};

struct StrongErrorSetup {
  double T = 1.0;
  std::vector<double> step_sizes;  // decreasing
  double ref_step = 0.0;
  std::size_t M = 1000;
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

/// Lattice geometry shared by all step sizes of a strong-error run.
struct DyadicPlan {
  std::size_t base_steps = 0;
  unsigned finest_level = 0;
  std::vector<unsigned> levels;  // one per step size
};

namespace detail {

inline bool integral_power_of_two(double r, unsigned& k) {
  const double lr = std::round(std::log2(r));
  if (lr < 0.0 || lr > 62.0) return false;
  if (std::abs(r - std::exp2(lr)) > 1e-9 * r) return false;
  k = static_cast<unsigned>(lr);
  return true;
}

}  // namespace detail

/// Checks that T / max(dt) is an integer n0 and that every dt and ref_step
/// equals T / (n0 2^k); throws ConfigError otherwise.
inline DyadicPlan plan_dyadic(double T, std::span<const double> step_sizes, double ref_step) {
  if (step_sizes.empty()) throw ConfigError("no step sizes given");
  if (!(T > 0.0)) throw ConfigError("horizon T must be positive");
  for (double dt : step_sizes) {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("step sizes must be positive");
  }
  if (!(ref_step > 0.0)) throw ConfigError("reference step must be positive");
  const double coarsest = *std::max_element(step_sizes.begin(), step_sizes.end());
  const double n0 = std::round(T / coarsest);
  if (n0 < 1.0 || std::abs(T / coarsest - n0) > 1e-9 * n0) {
    throw ConfigError("step size " + std::to_string(coarsest) + " does not divide T");
  }
  DyadicPlan plan;
  plan.base_steps = static_cast<std::size_t>(n0);
  if (!detail::integral_power_of_two(coarsest / ref_step, plan.finest_level)) {
    throw ConfigError("reference step does not divide the step sizes dyadically");
  }
  for (double dt : step_sizes) {
    unsigned k = 0;
    if (!detail::integral_power_of_two(coarsest / dt, k) || k > plan.finest_level) {
      throw ConfigError("step size " + std::to_string(dt) +
                        " is not a dyadic multiple of the reference step");
    }
    plan.levels.push_back(k);
  }
  return plan;
}

/// Root-mean-square terminal error of `evaluate(lattice, level)` against
/// `reference(lattice)` over M coupled lattices. The callbacks see the
/// full per-path lattice and the coarsening level of the step size.
inline ErrorReport strong_error_core(
    const StrongErrorSetup& setup, std::size_t drivers,
    const std::function<double(const WienerLattice&)>& reference,
    const std::function<double(const WienerLattice&, unsigned)>& evaluate) {
  if (setup.M < 2) throw ConfigError("strong error needs M >= 2 paths");
  const DyadicPlan plan = plan_dyadic(setup.T, setup.step_sizes, setup.ref_step);
  const std::size_t K = setup.step_sizes.size();
  std::vector<double> sq(setup.M * K);
  parallel_for(setup.M, setup.threads, [&](std::size_t i) {
    const WienerLattice lattice = generate_lattice(stream_seed(setup.seed, i), setup.T,
                                                   plan.base_steps, plan.finest_level, drivers);
    const double ref = reference(lattice);
    for (std::size_t k = 0; k < K; ++k) {
      const double d = evaluate(lattice, plan.levels[k]) - ref;
      sq[i * K + k] = d * d;
    }
  });

  ErrorReport rep;
  rep.step_sizes = setup.step_sizes;
  rep.M = setup.M;
  rep.ref_step = setup.ref_step;
  const double Md = static_cast<double>(setup.M);
  for (std::size_t k = 0; k < K; ++k) {
    double sum = 0.0;
    for (std::size_t i = 0; i < setup.M; ++i) sum += sq[i * K + k];
    const double mean = sum / Md;
    double ss = 0.0;
    for (std::size_t i = 0; i < setup.M; ++i) {
      const double d = sq[i * K + k] - mean;
      ss += d * d;
    }
    const double rms = std::sqrt(mean);
    const double sd = std::sqrt(ss / (Md - 1.0));
    rep.rms_errors.push_back(rms);
    rep.stderrs.push_back(rms > 0.0 ? sd / (2.0 * rms * std::sqrt(Md)) : 0.0);
  }
  const bool fittable =
      K >= 2 && std::all_of(rep.rms_errors.begin(), rep.rms_errors.end(),
                            [](double e) { return e > 0.0 && std::isfinite(e); });
  if (fittable) {
    const auto fit = fit_order(rep.step_sizes, rep.rms_errors);
    rep.slope = fit.slope;
    rep.intercept = fit.intercept;
  }
  return rep;
}

/// Strong error of `scheme` against `reference` run at setup.ref_step on
/// the same lattices. Slope and intercept stay NaN when some error is zero.
inline ErrorReport strong_error(const Stepper& scheme, const Stepper& reference, double x0,
                                const StrongErrorSetup& setup) {
  if (scheme.id().model != reference.id().model) {
    throw ConfigError("scheme and reference belong to different models");
  }
  const std::size_t drivers = std::max(scheme.drivers(), reference.drivers());
  auto run = [x0, &setup](const Stepper& s, const WienerLattice& lat, unsigned level) {
    const auto dW = coarsen(lat, level, 0);
    const double dt = setup.T / static_cast<double>(dW.size());
    if (s.drivers() == 2) return terminal_value(s, x0, dt, dW, coarsen(lat, level, 1));
    return terminal_value(s, x0, dt, dW);
  };
  auto rep = strong_error_core(
      setup, drivers,
      [&](const WienerLattice& lat) { return run(reference, lat, lat.finest_level); },
      [&](const WienerLattice& lat, unsigned level) { return run(scheme, lat, level); });
  rep.reference = reference.id();
  return rep;
}

// ---------------------------------------------------------------------------
// Difference trajectories

struct DifferenceSeries {
  double dt = 0.0;
  std::vector<double> times;
  std::vector<double> difference;  // A_t - B_t
};

inline DifferenceSeries difference_series(const Stepper& a, const Stepper& b, double x0,
                                          double T, std::size_t n, std::span<const double> dW,
                                          std::span<const double> dW2 = {}) {
  if (a.id().model != b.id().model) throw ConfigError("schemes belong to different models");
  const auto pa = simulate_path(a, x0, T, n, dW, dW2);
  const auto pb = simulate_path(b, x0, T, n, dW, dW2);
  DifferenceSeries out;
  out.dt = T / static_cast<double>(n == 0 ? 1 : n);
  out.times = pa.times;
  out.difference.resize(pa.values.size());
  for (std::size_t k = 0; k < pa.values.size(); ++k) {
    out.difference[k] = pa.values[k] - pb.values[k];
  }
  return out;
}

inline std::size_t steps_for(double T, double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("step sizes must be positive");
  const double n = std::round(T / dt);
  if (n < 1.0 || std::abs(T / dt - n) > 1e-9 * n) {
    throw ConfigError("step size " + std::to_string(dt) + " does not divide T");
  }
  return static_cast<std::size_t>(n);
}

/// One coupled driver per step size, seeded by stream_seed(seed, index).
inline std::vector<DifferenceSeries> difference_trajectories(const Stepper& a, const Stepper& b,
                                                             double x0, double T,
                                                             std::span<const double> dts,
                                                             std::uint64_t seed) {
  if (a.id().model != b.id().model) throw ConfigError("schemes belong to different models");
  const std::size_t drivers = std::max(a.drivers(), b.drivers());
  std::vector<DifferenceSeries> out;
  for (std::size_t k = 0; k < dts.size(); ++k) {
    const std::size_t n = steps_for(T, dts[k]);
    const auto lat = generate_lattice(stream_seed(seed, k), T, n, 0, drivers);
    out.push_back(difference_series(a, b, x0, T, n, lat.finest(0),
                                    drivers == 2 ? lat.finest(1) : std::span<const double>{}));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Exact CIR through squared OU processes

struct ExactCirPath {
  std::vector<double> x1, x2, exact;
  std::vector<std::vector<double>> schemes;  // one trajectory per requested scheme
};

struct ExactCirResult {
  std::vector<double> times;
  std::vector<Variant> schemes;
  std::vector<ExactCirPath> paths;
};

/// Simulates M exact paths and feeds each scheme the effective increment
/// reconstructed at (x1(t_n), x2(t_n)).
inline ExactCirResult exact_cir_experiment(const CirParams& p, double x0, double m, double dt,
                                           double T, std::size_t M, std::uint64_t seed,
                                           std::span<const Variant> schemes,
                                           double theta = 1.0, unsigned threads = 1) {
  require_dimension_two(p);
  if (!(m > 0.0 && m < 1.0)) throw ConfigError("split m must lie in (0, 1)");
  if (!(x0 > 0.0)) throw DomainError("initial state must be positive");
  const std::size_t n = steps_for(T, dt);
  SchemeOptions opts;
  opts.theta = theta;
  std::vector<Stepper> steppers;
  for (Variant v : schemes) {
    if (v == Variant::exact_ou) throw ConfigError("EXACT_OU is the comparison path itself");
    steppers.emplace_back(SchemeId{Model::cir, v}, p, opts);
  }

  ExactCirResult out;
  out.schemes.assign(schemes.begin(), schemes.end());
  out.times.resize(n + 1);
  for (std::size_t k = 0; k <= n; ++k) out.times[k] = static_cast<double>(k) * dt;
  out.paths.resize(M);
  parallel_for(M, threads, [&](std::size_t i) {
    const auto lat = generate_lattice(stream_seed(seed, i), T, n, 0, 2);
    const auto dW1 = lat.finest(0);
    const auto dW2 = lat.finest(1);
    ExactCirPath& path = out.paths[i];
    path.x1.resize(n + 1);
    path.x2.resize(n + 1);
    path.exact.resize(n + 1);
    path.schemes.assign(steppers.size(), std::vector<double>(n + 1));
    OuState ou{std::sqrt(m * x0), std::sqrt((1.0 - m) * x0), x0};
    path.x1[0] = ou.x1;
    path.x2[0] = ou.x2;
    path.exact[0] = x0;
    std::vector<StepState> states;
    for (std::size_t j = 0; j < steppers.size(); ++j) {
      states.push_back(steppers[j].initial_state(x0));
      path.schemes[j][0] = x0;
    }
    for (std::size_t k = 0; k < n; ++k) {
      try {
        const double dw = cir_effective_increment(ou.x1, ou.x2, dW1[k], dW2[k]);
        for (std::size_t j = 0; j < steppers.size(); ++j) {
          steppers[j].step(states[j], dw, dt);
          path.schemes[j][k + 1] = steppers[j].observe(states[j]);
        }
        ou = cir_exact_ou_step(p, ou, dW1[k], dW2[k], dt);
      } catch (const Error& e) {
        throw SimulationError(k, e.what());
      }
      path.x1[k + 1] = ou.x1;
      path.x2[k + 1] = ou.x2;
      path.exact[k + 1] = ou.x;
    }
  });
  return out;
}

/// Mean over paths of |scheme_T - exact_T| for scheme column j.
inline double mean_terminal_gap(const ExactCirResult& r, std::size_t j) {
  if (r.paths.empty()) throw DataError("no paths");
  double sum = 0.0;
  for (const auto& p : r.paths) sum += std::abs(p.schemes.at(j).back() - p.exact.back());
  return sum / static_cast<double>(r.paths.size());
}

// ---------------------------------------------------------------------------
// Domain-violation scan

struct ScanCounts {
  Variant scheme = Variant::lsd1;
  double dt = 0.0;
  std::size_t negative_states = 0;   // observed x < 0
  std::size_t outside_domain = 0;    // x <= 0, or x >= 1 for Wright-Fisher
  std::size_t non_real_events = 0;
  std::size_t clamp_events = 0;
  std::size_t nonfinite_states = 0;  // path stopped at the first one
  std::size_t failed_paths = 0;      // path stopped by a step error

  friend bool operator==(const ScanCounts&, const ScanCounts&) = default;
};

/// Runs M paths per scheme and step size and tallies violations. Path i at
/// step-size index k uses stream_seed(stream_seed(seed, k), i), shared by
/// all schemes.
inline std::vector<ScanCounts> domain_violation_scan(std::span<const Variant> schemes,
                                                     const ModelParams& params, double x0,
                                                     std::span<const double> dts, double T,
                                                     std::size_t M, std::uint64_t seed,
                                                     SchemeOptions opts = {},
                                                     unsigned threads = 1) {
  const Model model = model_of(params);
  std::vector<Stepper> steppers;
  for (Variant v : schemes) steppers.emplace_back(SchemeId{model, v}, params, opts);

  std::vector<ScanCounts> out;
  for (std::size_t k = 0; k < dts.size(); ++k) {
    const double dt = dts[k];
    const std::size_t n = steps_for(T, dt);
    const std::uint64_t dt_seed = stream_seed(seed, k);
    std::vector<ScanCounts> per_path(M * steppers.size());
    parallel_for(M, threads, [&](std::size_t i) {
      const auto lat = generate_lattice(stream_seed(dt_seed, i), T, n, 0, 2);
      for (std::size_t j = 0; j < steppers.size(); ++j) {
        const Stepper& st = steppers[j];
        ScanCounts& c = per_path[i * steppers.size() + j];
        StepState s = st.initial_state(x0);
        for (std::size_t step = 0; step < n; ++step) {
          try {
            st.step(s, lat.increments[0][step], dt, lat.increments[1][step]);
          } catch (const Error&) {
            ++c.failed_paths;
            break;
          }
          c.non_real_events += s.non_real;
          c.clamp_events += s.clamped;
          const double x = st.observe(s);
          if (!std::isfinite(x) || !std::isfinite(s.imag)) {
            ++c.nonfinite_states;
            break;
          }
          c.negative_states += x < 0.0;
          c.outside_domain += x <= 0.0 || (model == Model::wf && x >= 1.0);
        }
      }
    });
    for (std::size_t j = 0; j < steppers.size(); ++j) {
      ScanCounts total;
      total.scheme = schemes[j];
      total.dt = dt;
      for (std::size_t i = 0; i < M; ++i) {
        const auto& c = per_path[i * steppers.size() + j];
        total.negative_states += c.negative_states;
        total.outside_domain += c.outside_domain;
        total.non_real_events += c.non_real_events;
        total.clamp_events += c.clamp_events;
        total.nonfinite_states += c.nonfinite_states;
        total.failed_paths += c.failed_paths;
      }
      out.push_back(total);
    }
  }
  return out;
}

}  // namespace lsd
