#pragma once

// Runs a parsed ExperimentConfig and writes <output>/<name>.csv and
// <output>/<name>.json. The CSV depends only on (config, seed); the JSON
// summary additionally records wall time.

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "lsd/config.hpp"
#include "lsd/error.hpp"
#include "lsd/experiments.hpp"

namespace lsd {

struct RunOptions {
  std::optional<std::uint64_t> seed;        // overrides the config seed
  std::optional<std::string> output_dir;    // overrides the config output
  unsigned threads = 1;
};

struct RunArtifacts {
  std::string csv;
  nlohmann::ordered_json summary;
};

namespace detail {

inline std::string csv_real(double v) { return fmt_real(v); }

class CsvWriter {
 public:
  explicit CsvWriter(const std::vector<std::string>& header) {
    for (std::size_t i = 0; i < header.size(); ++i) os_ << (i ? "," : "") << header[i];
    os_ << "\n";
  }
  template <class... Cells>
  void row(const Cells&... cells) {
    bool first = true;
    ((os_ << (first ? "" : ",") << cell(cells), first = false), ...);
    os_ << "\n";
  }
  void raw(const std::string& s) { os_ << s; }
  std::string str() const { return os_.str(); }

 private:
  static std::string cell(double v) { return csv_real(v); }
  static std::string cell(std::size_t v) { return std::to_string(v); }
  static std::string cell(std::string_view v) { return std::string(v); }
  static std::string cell(const std::string& v) { return v; }
  std::ostringstream os_;
};

inline nlohmann::ordered_json real_or_null(double v) {
  return std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json(nullptr);
}

inline Stepper make_stepper(const ExperimentConfig& c, Variant v) {
  return Stepper({c.model, v}, make_params(c), scheme_options(c));
}

inline RunArtifacts run_simulate(const ExperimentConfig& c, std::uint64_t seed, unsigned threads,
                                 nlohmann::ordered_json& js) {
  CsvWriter csv({"scheme", "dt", "path", "t", "x"});
  auto& totals = js["schemes"];
  for (Variant v : c.schemes) {
    const Stepper st = make_stepper(c, v);
    std::size_t non_real = 0, clamps = 0;
    for (std::size_t k = 0; k < c.dts.size(); ++k) {
      const double dt = c.dts[k];
      const std::size_t n = steps_for(c.T, dt);
      std::vector<PathResult> paths(c.M);
      parallel_for(c.M, threads, [&](std::size_t i) {
        const auto lat = generate_lattice(stream_seed(stream_seed(seed, k), i), c.T, n, 0, 2);
        paths[i] = simulate_path(st, c.x0, c.T, n, lat.finest(0), lat.finest(1));
      });
      for (std::size_t i = 0; i < c.M; ++i) {
        non_real += paths[i].non_real_count;
        clamps += paths[i].clamp_count;
        for (std::size_t j = 0; j < paths[i].values.size(); ++j) {
          csv.row(to_string(v), dt, i, paths[i].times[j], paths[i].values[j]);
        }
      }
    }
    totals[std::string(to_string(v))] = {{"non_real_events", non_real}, {"clamp_events", clamps}};
  }
  return {csv.str(), {}};
}

inline RunArtifacts run_convergence(const ExperimentConfig& c, std::uint64_t seed,
                                    unsigned threads, nlohmann::ordered_json& js) {
  const Variant ref = c.reference.value_or(c.schemes.front());
  StrongErrorSetup setup;
  setup.T = c.T;
  setup.step_sizes = c.dts;
  setup.ref_step = c.ref_step;
  setup.M = c.M;
  setup.seed = seed;
  setup.threads = threads;
  const auto rep = strong_error(make_stepper(c, c.schemes.front()), make_stepper(c, ref), c.x0,
                                setup);
  CsvWriter csv({"dt", "rms", "stderr"});
  for (std::size_t k = 0; k < rep.step_sizes.size(); ++k) {
    csv.row(rep.step_sizes[k], rep.rms_errors[k], rep.stderrs[k]);
  }
  js["scheme"] = to_string(c.schemes.front());
  js["reference"] = to_string(ref);
  js["ref_step"] = rep.ref_step;
  js["slope"] = real_or_null(rep.slope);
  js["intercept"] = real_or_null(rep.intercept);
  return {csv.str(), {}};
}

inline RunArtifacts run_compare(const ExperimentConfig& c, std::uint64_t seed,
                                nlohmann::ordered_json& js) {
  const auto series = difference_trajectories(make_stepper(c, c.schemes[0]),
                                              make_stepper(c, c.schemes[1]), c.x0, c.T, c.dts,
                                              seed);
  CsvWriter csv({"dt", "t", "difference"});
  auto& mx = js["max_abs_difference"];
  mx = nlohmann::ordered_json::array();
  for (const auto& s : series) {
    double m = 0.0;
    for (std::size_t j = 0; j < s.times.size(); ++j) {
      csv.row(s.dt, s.times[j], s.difference[j]);
      m = std::max(m, std::abs(s.difference[j]));
    }
    mx.push_back({{"dt", s.dt}, {"value", real_or_null(m)}});
  }
  js["schemes"] = {to_string(c.schemes[0]), to_string(c.schemes[1])};
  return {csv.str(), {}};
}

inline RunArtifacts run_exact_cir(const ExperimentConfig& c, std::uint64_t seed, unsigned threads,
                                  nlohmann::ordered_json& js) {
  std::vector<std::string> header{"path", "dt", "t", "x1", "x2", "exact"};
  for (Variant v : c.schemes) header.emplace_back(to_string(v));
  CsvWriter csv(header);
  const auto p = std::get<CirParams>(make_params(c));
  auto& gaps = js["mean_terminal_gap"];
  gaps = nlohmann::ordered_json::array();
  for (double dt : c.dts) {
    const auto r = exact_cir_experiment(p, c.x0, c.m, dt, c.T, c.M, seed, c.schemes, c.theta,
                                        threads);
    for (std::size_t i = 0; i < r.paths.size(); ++i) {
      const auto& path = r.paths[i];
      for (std::size_t k = 0; k < r.times.size(); ++k) {
        std::string line = std::to_string(i) + "," + csv_real(dt) + "," + csv_real(r.times[k]) +
                           "," + csv_real(path.x1[k]) + "," + csv_real(path.x2[k]) + "," +
                           csv_real(path.exact[k]);
        for (const auto& col : path.schemes) line += "," + csv_real(col[k]);
        csv.raw(line + "\n");
      }
    }
    nlohmann::ordered_json entry{{"dt", dt}};
    for (std::size_t j = 0; j < c.schemes.size(); ++j) {
      entry[std::string(to_string(c.schemes[j]))] = real_or_null(mean_terminal_gap(r, j));
    }
    gaps.push_back(entry);
  }
  return {csv.str(), {}};
}

inline RunArtifacts run_scan(const ExperimentConfig& c, std::uint64_t seed, unsigned threads,
                             nlohmann::ordered_json& js) {
  const auto counts = domain_violation_scan(c.schemes, make_params(c), c.x0, c.dts, c.T, c.M,
                                            seed, scheme_options(c), threads);
  CsvWriter csv({"scheme", "dt", "negative_states", "non_real_events", "clamp_events",
                 "nonfinite_states", "failed_paths", "outside_domain"});
  auto& totals = js["schemes"];
  for (Variant v : c.schemes) {
    totals[std::string(to_string(v))] = {
        {"negative_states", 0}, {"non_real_events", 0}, {"clamp_events", 0},
        {"nonfinite_states", 0}, {"failed_paths", 0},   {"outside_domain", 0}};
  }
  for (const auto& r : counts) {
    csv.row(to_string(r.scheme), r.dt, r.negative_states, r.non_real_events, r.clamp_events,
            r.nonfinite_states, r.failed_paths, r.outside_domain);
    auto& t = totals[std::string(to_string(r.scheme))];
    t["negative_states"] = t["negative_states"].get<std::size_t>() + r.negative_states;
    t["non_real_events"] = t["non_real_events"].get<std::size_t>() + r.non_real_events;
    t["clamp_events"] = t["clamp_events"].get<std::size_t>() + r.clamp_events;
    t["nonfinite_states"] = t["nonfinite_states"].get<std::size_t>() + r.nonfinite_states;
    t["failed_paths"] = t["failed_paths"].get<std::size_t>() + r.failed_paths;
    t["outside_domain"] = t["outside_domain"].get<std::size_t>() + r.outside_domain;
  }
  return {csv.str(), {}};
}

}  // namespace detail

/// Runs the experiment in memory. The returned summary has no wall time.
inline RunArtifacts render(const ExperimentConfig& c, const RunOptions& opts = {}) {
  const std::uint64_t seed = opts.seed.value_or(c.seed);
  nlohmann::ordered_json js;
  js["kind"] = to_string(c.kind);
  js["name"] = c.name;
  js["model"] = to_string(c.model);
  js["params"] = c.params;
  js["x0"] = c.x0;
  js["T"] = c.T;
  js["dt"] = c.dts;
  js["M"] = c.M;
  js["seed"] = seed;
  js["theta"] = c.theta;
  RunArtifacts out;
  switch (c.kind) {
    case ExperimentKind::simulate: out = detail::run_simulate(c, seed, opts.threads, js); break;
    case ExperimentKind::convergence:
      out = detail::run_convergence(c, seed, opts.threads, js);
      break;
    case ExperimentKind::compare: out = detail::run_compare(c, seed, js); break;
    case ExperimentKind::exact_cir: out = detail::run_exact_cir(c, seed, opts.threads, js); break;
    case ExperimentKind::scan: out = detail::run_scan(c, seed, opts.threads, js); break;
  }
  out.summary = std::move(js);
  return out;
}

struct RunOutputs {
  std::filesystem::path csv;
  std::filesystem::path json;
};

/// Runs the experiment and writes both files. On failure neither file is
/// left behind.
inline RunOutputs run(const ExperimentConfig& c, const RunOptions& opts = {}) {
  namespace fs = std::filesystem;
  const auto t0 = std::chrono::steady_clock::now();
  RunArtifacts art = render(c, opts);
  art.summary["wall_time_seconds"] =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  const fs::path dir = opts.output_dir.value_or(c.output);
  RunOutputs out{dir / (c.name + ".csv"), dir / (c.name + ".json")};
  auto write = [](const fs::path& p, const std::string& text) {
    std::ofstream f(p, std::ios::binary | std::ios::trunc);
    f << text;
    f.close();
    if (!f) throw Error("cannot write " + p.string());
  };
  try {
    fs::create_directories(dir);
    write(out.csv, art.csv);
    write(out.json, art.summary.dump(2) + "\n");
  } catch (...) {
    std::error_code ec;
    fs::remove(out.csv, ec);
    fs::remove(out.json, ec);
    throw;
  }
  return out;
}

}  // namespace lsd
