#include <gtest/gtest.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>

#include "lsd/experiments.hpp"
#include "oracles.hpp"

using namespace lsd;

namespace {

const CirParams kCir(2, 2, 1);
const WfParams kWf(1, 2, 0.20101);

}  // namespace

TEST(ParallelFor, VisitsEveryIndexOnce) {
  std::vector<std::atomic<int>> hits(100);
  parallel_for(100, 4, [&](std::size_t i) { ++hits[i]; });
  for (auto& h : hits) EXPECT_EQ(h.load(), 1);
}

TEST(ParallelFor, RethrowsSmallestFailingIndex) {
  try {
    parallel_for(50, 3, [](std::size_t i) {
      if (i == 7 || i == 31) throw DataError("index " + std::to_string(i));
    });
    FAIL();
  } catch (const DataError& e) {
    EXPECT_STREQ(e.what(), "index 7");
  }
}

// --- simulate_path ----------------------------------------------------------

TEST(SimulatePath, WfSteadyStateWithoutNoise) {
  const std::vector<double> zero(100, 0.0);
  const auto r = simulate_path({Model::wf, Variant::lsd3}, kWf, 0.5, 1.0, 100, zero);
  ASSERT_EQ(r.values.size(), 101u);
  for (double x : r.values) EXPECT_NEAR(x, 0.5, 1e-5);
}

TEST(SimulatePath, ZeroSteps) {
  const auto r = simulate_path({Model::cir, Variant::lsd1}, kCir, 4.0, 1.0, 0, {});
  ASSERT_EQ(r.values.size(), 1u);
  EXPECT_EQ(r.values[0], 4.0);
  EXPECT_EQ(r.times[0], 0.0);
}

TEST(SimulatePath, CirLsd1StaysPositive) {
  const auto lat = generate_lattice(2024, 1.0, 10000, 0);
  const auto r = simulate_path({Model::cir, Variant::lsd1}, kCir, 4.0, 1.0, 10000, lat.finest());
  EXPECT_EQ(r.values.front(), 4.0);
  EXPECT_DOUBLE_EQ(r.times.back(), 1.0);
  for (double x : r.values) ASSERT_GT(x, 0.0);
}

TEST(SimulatePath, StepErrorsCarryIndex) {
  const std::vector<double> zero(3, 0.0);
  try {
    simulate_path({Model::wf, Variant::biss}, kWf, 0.5, 4.5, 3, zero);
    FAIL();
  } catch (const SimulationError& e) {
    EXPECT_EQ(e.step(), 0u);
    EXPECT_NE(std::string(e.what()).find("step 0"), std::string::npos);
  }
  EXPECT_THROW(simulate_path({Model::cir, Variant::lsd1}, kCir, 4.0, 1.0, 5, zero), ConfigError);
  EXPECT_THROW(simulate_path({Model::cir, Variant::exact_ou}, CirParams(2, 2, 2), 4.0, 1.0, 3, zero),
               ConfigError);
}

TEST(SimulatePath, CoarsenedDriverMatchesDirectIncrements) {
  const auto lat = generate_lattice(31, 1.0, 16, 3);
  const auto coarse = coarsen(lat, 1);
  const std::vector<double> copy(coarse.begin(), coarse.end());
  for (Variant v : {Variant::lsd1, Variant::sd_theta, Variant::ns}) {
    const Stepper st({Model::cir, v}, kCir);
    const auto a = simulate_path(st, 4.0, 1.0, 32, coarse);
    const auto b = simulate_path(st, 4.0, 1.0, 32, copy);
    EXPECT_EQ(a.values, b.values);
    EXPECT_EQ(terminal_value(st, 4.0, 1.0 / 32, coarse), a.values.back());
  }
}

// --- fit_order ------------------------------------------------------------

TEST(FitOrder, ExactPowerLaws) {
  const std::vector<double> dt{0.1, 0.05, 0.01, 0.001};
  std::vector<double> e1, e2;
  for (double d : dt) {
    e1.push_back(d);
    e2.push_back(3 * std::sqrt(d));
  }
  EXPECT_NEAR(fit_order(dt, e1).slope, 1.0, 1e-12);
  const auto f = fit_order(dt, e2);
  EXPECT_NEAR(f.slope, 0.5, 1e-12);
  EXPECT_NEAR(f.intercept, std::log(3.0), 1e-12);
}

TEST(FitOrder, TwoPoints) {
  const std::vector<double> dt{1e-2, 1e-3}, err{1e-2, 1.1e-3};
  const double expect = std::log(1e-2 / 1.1e-3) / std::log(10.0);
  EXPECT_NEAR(fit_order(dt, err).slope, expect, 1e-12);
  EXPECT_NEAR(fit_order(dt, err).slope, 0.9586, 1e-4);
}

TEST(FitOrder, RejectsBadData) {
  const std::vector<double> one{0.1}, two{0.1, 0.2}, bad{0.1, 0.0};
  EXPECT_THROW(fit_order(one, one), DataError);
  EXPECT_THROW(fit_order(two, bad), DataError);
  EXPECT_THROW(fit_order(bad, two), DataError);
  EXPECT_THROW(fit_order(two, one), DataError);
}

// --- strong_error ---------------------------------------------------------

TEST(StrongError, SelfReferenceAtReferenceStepIsZero) {
  const Stepper st({Model::cir, Variant::lsd2}, kCir);
  StrongErrorSetup s;
  s.step_sizes = {1.0 / 64, 1.0 / 256};
  s.ref_step = 1.0 / 256;
  s.M = 20;
  const auto rep = strong_error(st, st, 4.0, s);
  EXPECT_EQ(rep.rms_errors[1], 0.0);
  EXPECT_GT(rep.rms_errors[0], 0.0);
  EXPECT_TRUE(std::isnan(rep.slope));
}

TEST(StrongError, SyntheticPowerLaw) {
  StrongErrorSetup s;
  s.step_sizes = {1.0 / 64, 1.0 / 128, 1.0 / 256, 1.0 / 512, 1.0 / 1024, 1.0 / 2048};
  s.ref_step = 1.0 / 16384;
  s.M = 50;
  auto wT = [](const WienerLattice& lat) {
    return std::accumulate(lat.increments[0].begin(), lat.increments[0].end(), 0.0);
  };
  const auto rep = strong_error_core(
      s, 1, wT, [&](const WienerLattice& lat, unsigned level) {
        return wT(lat) + lat.horizon / static_cast<double>(lat.steps_at(level));
      });
  EXPECT_NEAR(rep.slope, 1.0, 1e-9);
  EXPECT_NEAR(rep.intercept, 0.0, 1e-9);
}

TEST(StrongError, CirLsd2AgainstLsd1Reference) {
  StrongErrorSetup s;
  s.step_sizes = {1.0 / 64, 1.0 / 128, 1.0 / 256, 1.0 / 512, 1.0 / 1024, 1.0 / 2048};
  s.ref_step = 1.0 / 16384;
  s.M = 1000;
  s.seed = 1;
  const auto rep = strong_error(Stepper({Model::cir, Variant::lsd2}, kCir),
                                Stepper({Model::cir, Variant::lsd1}, kCir), 4.0, s);
  EXPECT_GE(rep.slope, 0.8);
  EXPECT_LE(rep.slope, 1.15);
  EXPECT_EQ(rep.reference, (SchemeId{Model::cir, Variant::lsd1}));
  for (std::size_t k = 1; k < rep.rms_errors.size(); ++k) {
    EXPECT_LT(rep.rms_errors[k], rep.rms_errors[k - 1]);
    EXPECT_GT(rep.stderrs[k], 0.0);
  }
}

TEST(StrongError, IndependentOfThreadCount) {
  StrongErrorSetup s;
  s.step_sizes = {1.0 / 32, 1.0 / 64};
  s.ref_step = 1.0 / 512;
  s.M = 40;
  s.seed = 99;
  const Stepper a({Model::wf, Variant::lsd1}, kWf), ref({Model::wf, Variant::lsd3}, kWf);
  const auto one = strong_error(a, ref, 0.5, s);
  s.threads = 3;
  const auto three = strong_error(a, ref, 0.5, s);
  EXPECT_EQ(one, three);
  EXPECT_EQ(one, strong_error(a, ref, 0.5, s));
}

TEST(StrongError, RejectsBadSetups) {
  const Stepper st({Model::cir, Variant::lsd1}, kCir);
  StrongErrorSetup s;
  s.step_sizes = {0.01, 0.005};
  s.ref_step = 0.0007;
  s.M = 10;
  EXPECT_THROW(strong_error(st, st, 4.0, s), ConfigError);
  s.step_sizes = {0.3};
  s.ref_step = 0.075;
  EXPECT_THROW(strong_error(st, st, 4.0, s), ConfigError);
  s.step_sizes = {0.25, 0.125};
  s.ref_step = 0.25 / 8;
  s.M = 1;
  EXPECT_THROW(strong_error(st, st, 4.0, s), ConfigError);
  s.M = 10;
  EXPECT_THROW(strong_error(st, Stepper({Model::wf, Variant::lsd1}, kWf), 4.0, s), ConfigError);
}

TEST(DyadicPlan, Levels) {
  const std::vector<double> dts{0.25, 0.0625, 0.125};
  const auto plan = plan_dyadic(1.0, dts, 1.0 / 64);
  EXPECT_EQ(plan.base_steps, 4u);
  EXPECT_EQ(plan.finest_level, 4u);
  EXPECT_EQ(plan.levels, (std::vector<unsigned>{0, 2, 1}));
}

// --- difference trajectories ---------------------------------------------

TEST(Difference, SameSchemeIsZero) {
  const Stepper st({Model::cir, Variant::lsd1}, kCir);
  const std::vector<double> dts{0.01, 0.001};
  for (const auto& s : difference_trajectories(st, st, 4.0, 1.0, dts, 5)) {
    for (double d : s.difference) EXPECT_EQ(d, 0.0);
  }
}

TEST(Difference, ZeroNoiseFirstOrder) {
  const Stepper a({Model::cir, Variant::lsd1}, kCir), b({Model::cir, Variant::lsd2}, kCir);
  std::vector<double> c;
  for (double dt : {1e-2, 1e-3}) {
    const std::size_t n = steps_for(1.0, dt);
    const std::vector<double> zero(n, 0.0);
    const auto s = difference_series(a, b, 4.0, 1.0, n, zero);
    double m = 0;
    for (double d : s.difference) m = std::max(m, std::abs(d));
    c.push_back(m / dt);
  }
  EXPECT_GT(c[0], 0.0);
  EXPECT_NEAR(c[1] / c[0], 1.0, 0.1);
}

TEST(Difference, LsdMinusSdSmallAgainstPath) {
  const Stepper a({Model::cir, Variant::lsd1}, kCir), b({Model::cir, Variant::sd_theta}, kCir);
  const std::vector<double> dts{1e-4};
  const auto lat = generate_lattice(stream_seed(8, 0), 1.0, 10000, 0);
  const auto pa = simulate_path(a, 4.0, 1.0, 10000, lat.finest());
  const auto s = difference_trajectories(a, b, 4.0, 1.0, dts, 8).front();
  double md = 0;
  for (double d : s.difference) md = std::max(md, std::abs(d));
  EXPECT_LT(md, *std::max_element(pa.values.begin(), pa.values.end()));
}

TEST(Difference, ModelMismatch) {
  const std::vector<double> dts{0.1};
  EXPECT_THROW(difference_trajectories(Stepper({Model::cir, Variant::lsd1}, kCir),
                                       Stepper({Model::wf, Variant::lsd1}, kWf), 0.5, 1.0, dts, 1),
               ConfigError);
}

// --- exact CIR ------------------------------------------------------------

TEST(ExactCir, SumOfSquaresInvariant) {
  const CirParams p(2, 2, 2);
  const std::vector<Variant> schemes{Variant::lsd1, Variant::lsd2};
  const auto r = exact_cir_experiment(p, 4.0, 0.5, 1e-3, 1.0, 5, 3, schemes);
  ASSERT_EQ(r.paths.size(), 5u);
  for (const auto& path : r.paths) {
    EXPECT_EQ(path.exact[0], 4.0);
    EXPECT_EQ(path.schemes[0][0], 4.0);
    for (std::size_t k = 1; k < path.exact.size(); ++k) {
      const double sum = path.x1[k] * path.x1[k] + path.x2[k] * path.x2[k];
      EXPECT_LE(oracle::ulp_distance(sum, path.exact[k]), 4);
    }
  }
}

TEST(ExactCir, SplitChangesDecompositionOnly) {
  const CirParams p(2, 2, 2);
  const std::vector<Variant> none;
  const auto a = exact_cir_experiment(p, 4.0, 0.5, 0.01, 1.0, 2, 7, none);
  const auto b = exact_cir_experiment(p, 4.0, 0.25, 0.01, 1.0, 2, 7, none);
  EXPECT_EQ(a.paths[0].exact[0], b.paths[0].exact[0]);
  EXPECT_NE(a.paths[0].x1[0], b.paths[0].x1[0]);
  EXPECT_NEAR(b.paths[0].x1[0] * b.paths[0].x1[0], 1.0, 1e-15);
}

TEST(ExactCir, Preconditions) {
  const std::vector<Variant> schemes{Variant::lsd1};
  EXPECT_THROW(exact_cir_experiment(kCir, 4.0, 0.5, 0.01, 1.0, 2, 1, schemes), ConfigError);
  EXPECT_THROW(exact_cir_experiment(CirParams(2, 2, 2), 4.0, 1.0, 0.01, 1.0, 2, 1, schemes),
               ConfigError);
}

// --- scans ----------------------------------------------------------------

TEST(Scan, LsdNeverNegativeUnderFellerViolation) {
  const std::vector<Variant> schemes{Variant::lsd1, Variant::lsd2, Variant::lsd3};
  const std::vector<double> dts{1e-2, 1e-3};
  for (double k3 : {4.0, 10.0, 20.0}) {
    for (const auto& c : domain_violation_scan(schemes, CirParams(1, 2, k3), 4.0, dts, 1.0, 100, 1)) {
      EXPECT_EQ(c.negative_states, 0u);
      EXPECT_EQ(c.non_real_events, 0u);
      EXPECT_EQ(c.failed_paths, 0u);
      EXPECT_EQ(c.nonfinite_states, 0u);
    }
  }
}

TEST(Scan, ImplicitSchemesLeaveTheRealLine) {
  const std::vector<Variant> schemes{Variant::alf, Variant::ns};
  const std::vector<double> dts{1e-2};
  for (const auto& c : domain_violation_scan(schemes, CirParams(1, 2, 20), 4.0, dts, 1.0, 100, 1)) {
    EXPECT_GE(c.non_real_events, 1u) << to_string(c.scheme);
  }
}

TEST(Scan, QuietAtFellerParameters) {
  const std::vector<Variant> schemes{Variant::lsd1, Variant::lsd2, Variant::lsd3};
  const std::vector<double> dts{1e-2};
  for (const auto& c : domain_violation_scan(schemes, kCir, 4.0, dts, 1.0, 50, 2)) {
    EXPECT_EQ(c, (ScanCounts{c.scheme, c.dt}));
  }
}

TEST(Scan, IndependentOfThreadCount) {
  const std::vector<Variant> schemes{Variant::lsd1, Variant::alf};
  const std::vector<double> dts{1e-2};
  const CirParams p(1, 2, 10);
  EXPECT_EQ(domain_violation_scan(schemes, p, 4.0, dts, 1.0, 30, 4, {}, 1),
            domain_violation_scan(schemes, p, 4.0, dts, 1.0, 30, 4, {}, 4));
}
