#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "lsd/models.hpp"

using namespace lsd;

namespace {

const CirParams kCir(2, 2, 1);
const CevParams kCev(1.0 / 16, 1, 0.4, 0.75);
const WfParams kWf(1, 2, 0.20101);
const Heston32Params kHeston(0.1, 70, std::sqrt(0.2));
const AitParams kAit(2, 3, 4, 6, 1, 2, 1.5);

}  // namespace

TEST(Lamperti, ForwardExamples) {
  EXPECT_DOUBLE_EQ(lamperti_forward(kCir, 4.0), 4.0);
  EXPECT_DOUBLE_EQ(lamperti_forward(kWf, 0.5), std::numbers::pi / 2);
  EXPECT_NEAR(lamperti_forward(kCev, 1.0 / 16), 5.0, 1e-14);
}

TEST(Lamperti, InverseExamples) {
  EXPECT_DOUBLE_EQ(lamperti_inverse(kCir, 4.0), 4.0);
  EXPECT_NEAR(lamperti_inverse(kWf, std::numbers::pi / 2), 0.5, 1e-15);
  EXPECT_NEAR(lamperti_inverse(kAit, 0.5), 4.0, 1e-14);
}

TEST(Lamperti, DomainErrors) {
  EXPECT_THROW(lamperti_forward(kCir, 0.0), DomainError);
  EXPECT_THROW(lamperti_forward(kCir, -1.0), DomainError);
  EXPECT_THROW(lamperti_forward(kWf, 1.0), DomainError);
  EXPECT_THROW(lamperti_forward(kWf, 0.0), DomainError);
  EXPECT_THROW(lamperti_forward(kHeston, std::nan("")), DomainError);
  EXPECT_THROW(lamperti_inverse(kWf, std::numbers::pi), DomainError);
  EXPECT_THROW(lamperti_inverse(kAit, -0.5), DomainError);
}

TEST(Lamperti, RoundTripAllModels) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> logx(-6.0, 6.0), unit(1e-9, 1.0 - 1e-9);
  const ModelParams models[] = {kCir, kCev, kWf, kHeston, kAit};
  for (const auto& m : models) {
    for (int i = 0; i < 1000; ++i) {
      const double x = model_of(m) == Model::wf ? unit(rng) : std::exp(logx(rng));
      const double back = lamperti_inverse(m, lamperti_forward(m, x));
      EXPECT_NEAR(back, x, 1e-12 * std::max(1.0, x)) << to_string(model_of(m));
    }
  }
}

TEST(Lamperti, Monotonicity) {
  const ModelParams models[] = {kCir, kCev, kWf, kHeston, kAit};
  for (const auto& m : models) {
    const bool wf = model_of(m) == Model::wf;
    const bool decreasing = model_of(m) == Model::heston32 || model_of(m) == Model::ait;
    double prev = std::nan("");
    for (int i = 1; i <= 1000; ++i) {
      const double x = wf ? i / 1001.0 : i * 0.01;
      const double z = lamperti_forward(m, x);
      if (i > 1) {
        if (decreasing) EXPECT_LT(z, prev);
        else EXPECT_GT(z, prev);
      }
      prev = z;
    }
  }
}

TEST(Params, DerivedCoefficients) {
  EXPECT_DOUBLE_EQ(kCir.a, 4.0);
  EXPECT_DOUBLE_EQ(kCir.b, 1.125);

  EXPECT_NEAR(kCev.a, 25.0, 1e-12);
  EXPECT_DOUBLE_EQ(kCev.b, 1.5);
  EXPECT_DOUBLE_EQ(kCev.c, 0.25);

  const double k3sq = 0.20101 * 0.20101;
  EXPECT_DOUBLE_EQ(kWf.a, 1.0 - k3sq / 4);
  EXPECT_DOUBLE_EQ(kWf.b, 2.0 - 1.0 - k3sq / 4);
  EXPECT_DOUBLE_EQ(kWf.beta, k3sq / 2 - 2.0);
  EXPECT_NEAR(kWf.a, 0.98989875, 1e-8);
  EXPECT_NEAR(kWf.beta, -1.9797975, 1e-7);

  EXPECT_NEAR(kHeston.c_star, 1406.0, 1e-9);
  EXPECT_NEAR(kHeston.c_impl, 35.075, 1e-12);

  EXPECT_DOUBLE_EQ(kAit.Km1, 1.0);
  EXPECT_DOUBLE_EQ(kAit.K0, 1.5);
  EXPECT_DOUBLE_EQ(kAit.K1, 2.0);
  EXPECT_DOUBLE_EQ(kAit.K2, 3.0);
  EXPECT_DOUBLE_EQ(kAit.K3, 0.5);
  EXPECT_DOUBLE_EQ(kAit.K4, 0.375);
  EXPECT_DOUBLE_EQ(kAit.e1, 5.0);
  EXPECT_DOUBLE_EQ(kAit.e2, 3.0);
  EXPECT_DOUBLE_EQ(kAit.e3, 0.0);
  EXPECT_DOUBLE_EQ(kAit.e4, 4.0);
  EXPECT_DOUBLE_EQ(kAit.e5, -1.0);
}

TEST(Params, Validation) {
  EXPECT_THROW(CirParams(0, 1, 1), ConfigError);
  EXPECT_THROW(CirParams(1, -1, 1), ConfigError);
  EXPECT_THROW(CevParams(1, 1, 1, 0.5), ConfigError);
  EXPECT_THROW(CevParams(1, 1, 1, 1.0), ConfigError);
  EXPECT_THROW(WfParams(0.001, 2, 1), ConfigError);
  EXPECT_THROW(AitParams(1, 1, 1, 1, 1, 1.0, 2.0), ConfigError);
  EXPECT_THROW(AitParams(1, 1, 1, 1, 1, 2.0, 1.0), ConfigError);
}

TEST(Pow0, ZeroExponentIsOne) {
  EXPECT_EQ(pow0(0.0, 0.0), 1.0);
  EXPECT_EQ(pow0(3.0, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(pow0(3.0, 2.0), 9.0);
}

TEST(DomainReport, CirFeller) {
  const auto ok = domain_report(CirParams(2, 2, 1));
  ASSERT_TRUE(ok.feller.has_value());
  EXPECT_TRUE(*ok.feller);
  EXPECT_FALSE(*ok.exact_ou_applicable);
  const auto bad = domain_report(CirParams(1, 2, 4));
  EXPECT_FALSE(*bad.feller);
  EXPECT_FALSE(bad.hyb_admissible.has_value());
  EXPECT_TRUE(*domain_report(CirParams(2, 2, 2)).exact_ou_applicable);
}

TEST(DomainReport, WrightFisherDefaultParams) {
  const auto rep = domain_report(kWf);
  EXPECT_TRUE(*rep.wf_boundary_unattainable);
  EXPECT_TRUE(*rep.hyb_admissible);
  EXPECT_FALSE(rep.feller.has_value());
}

TEST(WfAngle, ClampsAndFlags) {
  bool clamped = false;
  EXPECT_DOUBLE_EQ(wf_angle(0.5, clamped), std::numbers::pi / 2);
  EXPECT_FALSE(clamped);
  EXPECT_DOUBLE_EQ(wf_angle(1.2, clamped), std::numbers::pi);
  EXPECT_TRUE(clamped);
  clamped = false;
  EXPECT_DOUBLE_EQ(wf_angle(-0.1, clamped), 0.0);
  EXPECT_TRUE(clamped);
}
