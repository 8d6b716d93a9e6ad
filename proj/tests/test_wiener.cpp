#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "lsd/wiener.hpp"

using namespace lsd;

namespace {

double sample_variance(const std::vector<double>& v) {
  double mean = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return ss / (v.size() - 1);
}

WienerLattice hand_lattice(std::vector<double> fine, std::size_t base, unsigned levels) {
  WienerLattice lat;
  lat.horizon = 1.0;
  lat.base_steps = base;
  lat.finest_level = levels;
  lat.increments = {std::move(fine)};
  return lat;
}

}  // namespace

TEST(Lattice, ShapeAndStepVariance) {
  const auto lat = generate_lattice(1, 1.0, 4, 0);
  ASSERT_EQ(lat.drivers(), 1u);
  EXPECT_EQ(lat.finest().size(), 4u);
  EXPECT_DOUBLE_EQ(lat.fine_dt(), 0.25);
}

TEST(Lattice, SameSeedSameIncrements) {
  const auto a = generate_lattice(99, 2.0, 8, 3, 2);
  const auto b = generate_lattice(99, 2.0, 8, 3, 2);
  EXPECT_EQ(a.increments, b.increments);
}

TEST(Lattice, FirstDriverDoesNotDependOnDriverCount) {
  const auto one = generate_lattice(5, 1.0, 16, 2, 1);
  const auto two = generate_lattice(5, 1.0, 16, 2, 2);
  EXPECT_EQ(one.increments[0], two.increments[0]);
  EXPECT_NE(two.increments[0], two.increments[1]);
}

TEST(Lattice, DifferentSeedsAreUncorrelated) {
  const auto a = generate_lattice(1, 1.0, 10000, 0);
  const auto b = generate_lattice(2, 1.0, 10000, 0);
  const auto& x = a.increments[0];
  const auto& y = b.increments[0];
  EXPECT_NE(x, y);
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += x[i] * y[i];
    sxx += x[i] * x[i];
    syy += y[i] * y[i];
  }
  EXPECT_LT(std::abs(sxy / std::sqrt(sxx * syy)), 0.1);
}

TEST(Lattice, VarianceScalesWithLevel) {
  const auto lat = generate_lattice(17, 3.0, 10000, 3);
  for (unsigned level = 0; level <= 3; ++level) {
    const auto inc = coarsen(lat, level);
    const double expected = 3.0 / (10000.0 * std::ldexp(1.0, level));
    EXPECT_NEAR(sample_variance(inc) / expected, 1.0, 0.05) << "level " << level;
  }
}

TEST(Lattice, RejectsInvalidSizes) {
  EXPECT_THROW(generate_lattice(1, 0.0, 4, 0), ConfigError);
  EXPECT_THROW(generate_lattice(1, -1.0, 4, 0), ConfigError);
  EXPECT_THROW(generate_lattice(1, 1.0, 0, 0), ConfigError);
  EXPECT_THROW(generate_lattice(1, 1.0, 4, 0, 3), ConfigError);
  EXPECT_THROW(generate_lattice(1, 1.0, 4, 40), ConfigError);
}

TEST(Coarsen, PairsOfFourIncrements) {
  const auto lat = hand_lattice({0.1, -0.2, 0.3, 0.4}, 2, 1);
  const auto c = coarsen(lat, 0);
  ASSERT_EQ(c.size(), 2u);
  EXPECT_EQ(c[0], 0.1 + -0.2);
  EXPECT_EQ(c[1], 0.3 + 0.4);
}

TEST(Coarsen, FinestLevelIsIdentity) {
  const auto lat = generate_lattice(3, 1.0, 5, 2);
  EXPECT_EQ(coarsen(lat, 2), lat.increments[0]);
}

TEST(Coarsen, BlocksEqualLeftToRightSums) {
  const auto lat = generate_lattice(8, 1.0, 3, 5);
  const auto& fine = lat.increments[0];
  for (unsigned level = 0; level <= 5; ++level) {
    const auto c = coarsen(lat, level);
    const std::size_t block = std::size_t{1} << (5 - level);
    for (std::size_t k = 0; k < c.size(); ++k) {
      double s = 0.0;
      for (std::size_t j = k * block; j < (k + 1) * block; ++j) s += fine[j];
      EXPECT_EQ(c[k], s);
    }
    const double total_coarse = std::accumulate(c.begin(), c.end(), 0.0);
    const double total_fine = std::accumulate(fine.begin(), fine.end(), 0.0);
    EXPECT_NEAR(total_coarse, total_fine, 1e-13);
  }
}

TEST(Coarsen, RejectsLevelOutOfRange) {
  const auto lat = generate_lattice(3, 1.0, 5, 2);
  EXPECT_THROW(coarsen(lat, 3), ConfigError);
  EXPECT_THROW(coarsen(lat, 0, 1), ConfigError);
}

TEST(EffectiveIncrement, Examples) {
  EXPECT_DOUBLE_EQ(cir_effective_increment(1, 1, 0.3, 0.3), std::sqrt(2.0) * 0.3);
  EXPECT_DOUBLE_EQ(cir_effective_increment(2.5, 0, 0.7, -4.0), 0.7);
  EXPECT_NEAR(cir_effective_increment(3, 4, 0.1, -0.2), -0.1, 1e-15);
  EXPECT_THROW(cir_effective_increment(0, 0, 0.1, 0.1), DegenerateStateError);
}

TEST(EffectiveIncrement, IsGaussianWithStepVariance) {
  const double dt = 0.01;
  const auto lat = generate_lattice(23, 100.0, 10000, 0, 2);
  std::vector<double> w(10000);
  for (std::size_t i = 0; i < w.size(); ++i) {
    w[i] = cir_effective_increment(0.3, -1.7, lat.increments[0][i], lat.increments[1][i]);
  }
  const double var = sample_variance(w);
  // Standard error of a sample variance is dt sqrt(2/(n-1)).
  EXPECT_NEAR(var, dt, 3.0 * dt * std::sqrt(2.0 / 9999.0));
  const double mean = std::accumulate(w.begin(), w.end(), 0.0) / w.size();
  EXPECT_NEAR(mean, 0.0, 3.0 * std::sqrt(dt / 10000.0));
}

TEST(StreamSeed, DistinctPerIndexAndMaster) {
  EXPECT_NE(stream_seed(1, 0), stream_seed(1, 1));
  EXPECT_NE(stream_seed(1, 0), stream_seed(2, 0));
  EXPECT_EQ(stream_seed(42, 7), stream_seed(42, 7));
}
