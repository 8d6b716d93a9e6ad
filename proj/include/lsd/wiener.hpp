#pragma once

// Seeded Brownian increments on a dyadic multi-resolution lattice.
//
// Increments are drawn once at the finest level and every coarser level is
// obtained by exact summation of consecutive blocks, so simulations run at
// different step sizes see the same Brownian path. Gaussian draws come from
// std::mt19937_64 fed into std::normal_distribution (libstdc++ implements
// the Marsaglia polar method); results are reproducible for a given build.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "lsd/error.hpp"

namespace lsd {

/// Finest-level Brownian increments for one or two independent drivers.
struct WienerLattice {
  std::uint64_t seed = 0;
  double horizon = 0.0;
  std::size_t base_steps = 0;
  unsigned finest_level = 0;
  std::vector<std::vector<double>> increments;

  std::size_t drivers() const noexcept { return increments.size(); }
  std::size_t fine_steps() const noexcept { return base_steps << finest_level; }
  double fine_dt() const noexcept {
    return horizon / static_cast<double>(fine_steps());
  }
  std::size_t steps_at(unsigned level) const noexcept {
    return base_steps << level;
  }
  std::span<const double> finest(std::size_t driver = 0) const {
    return increments.at(driver);
  }
};

/// SplitMix64 finaliser; used to derive independent per-path stream seeds.
inline std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Stream seed for path `index` of a run seeded with `master`. Depends only on
/// the pair, so results do not depend on scheduling or thread count.
inline std::uint64_t stream_seed(std::uint64_t master, std::uint64_t index) noexcept {
  return mix64(mix64(master) ^ mix64(index + 0x632be59bd9b4e019ULL));
}

inline constexpr unsigned kMaxLatticeLevels = 30;
inline constexpr std::size_t kMaxLatticeSteps = std::size_t{1} << 28;

inline WienerLattice generate_lattice(std::uint64_t seed, double horizon,
                                      std::size_t base_steps, unsigned levels,
                                      std::size_t drivers = 1) {
  if (!(horizon > 0.0) || !std::isfinite(horizon)) {
    throw ConfigError("lattice horizon must be positive and finite");
  }
  if (base_steps < 1) throw ConfigError("lattice needs at least one base step");
  if (drivers != 1 && drivers != 2) throw ConfigError("lattice supports 1 or 2 drivers");
  if (levels > kMaxLatticeLevels ||
      base_steps > (kMaxLatticeSteps >> levels)) {
    throw ConfigError("lattice too large: " + std::to_string(base_steps) +
                      " base steps at " + std::to_string(levels) + " levels");
  }

  WienerLattice lattice;
  lattice.seed = seed;
  lattice.horizon = horizon;
  lattice.base_steps = base_steps;
  lattice.finest_level = levels;

  const std::size_t n = lattice.fine_steps();
  std::mt19937_64 engine(seed);
  std::normal_distribution<double> normal(0.0, std::sqrt(lattice.fine_dt()));
  lattice.increments.assign(drivers, std::vector<double>(n));
  for (auto& driver : lattice.increments) {
    for (auto& dw : driver) dw = normal(engine);
  }
  return lattice;
}

/// Increments at `level`: block k is the left-to-right sum of fine increments
/// 2^(L-level)*k ... 2^(L-level)*(k+1)-1.
inline std::vector<double> coarsen(const WienerLattice& lattice, unsigned level,
                                   std::size_t driver = 0) {
  if (level > lattice.finest_level) {
    throw ConfigError("coarsening level " + std::to_string(level) +
                      " exceeds finest level " +
                      std::to_string(lattice.finest_level));
  }
  if (driver >= lattice.drivers()) throw ConfigError("no such driver in lattice");
  const auto& fine = lattice.increments[driver];
  if (level == lattice.finest_level) return fine;

  const std::size_t block = std::size_t{1} << (lattice.finest_level - level);
  std::vector<double> coarse(lattice.steps_at(level));
  for (std::size_t k = 0; k < coarse.size(); ++k) {
    double sum = 0.0;
    for (std::size_t j = k * block; j < (k + 1) * block; ++j) sum += fine[j];
    coarse[k] = sum;
  }
  return coarse;
}

/// One-dimensional driver increment reconstructed from the two Brownian
/// motions of the squared-OU construction of CIR with dimension 2.
inline double cir_effective_increment(double x1, double x2, double dw1, double dw2) {
  const double norm = std::hypot(x1, x2);
  if (!(norm > 0.0)) {
    throw DegenerateStateError("effective increment undefined at x1 = x2 = 0");
  }
  return (x1 * dw1 + x2 * dw2) / norm;
}

}  // namespace lsd
