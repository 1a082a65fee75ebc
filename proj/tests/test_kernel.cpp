#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "volcheck/calibration.hpp"
#include "volcheck/kernel.hpp"

using namespace volcheck;

namespace {

const KernelConstants& minhat() { return *min_hat_constants(); }

}  // namespace

TEST(WeightFunction, MinHatValuesAndBoundary) {
  const auto g = WeightFunction::min_hat();
  EXPECT_EQ(g(0.0), 0.0);
  EXPECT_EQ(g(1.0), 0.0);
  EXPECT_DOUBLE_EQ(g(0.25), 0.25);
  EXPECT_DOUBLE_EQ(g(0.5), 0.5);
  EXPECT_DOUBLE_EQ(g(0.8), 0.2);
  EXPECT_EQ(g(-0.5), 0.0);
  EXPECT_EQ(g(1.5), 0.0);
}

TEST(WeightFunction, TabulatedValidation) {
  EXPECT_THROW(WeightFunction::tabulated({0.0, 0.0, 0.0}), InvalidArgument);
  EXPECT_THROW(WeightFunction::tabulated({0.1, 0.5, 0.0}), InvalidArgument);
  EXPECT_THROW(WeightFunction::tabulated({0.0, 0.5, 0.2}), InvalidArgument);
  const auto g = WeightFunction::tabulated({0.0, 0.5, 0.0});
  EXPECT_NEAR(g(0.25), 0.25, 1e-12);
  EXPECT_NEAR(g(0.5), 0.5, 1e-12);
}

TEST(KernelTable, MinHatSmallWindows) {
  const auto t2 = build_kernel_table(WeightFunction::min_hat(), 2);
  EXPECT_EQ(t2.g, (std::vector<double>{0.5, 0.0}));
  const auto t4 = build_kernel_table(WeightFunction::min_hat(), 4);
  EXPECT_EQ(t4.g, (std::vector<double>{0.25, 0.5, 0.25, 0.0}));
  EXPECT_EQ(t4.gprime, (std::vector<double>{-0.25, 0.25, 0.25, 0.0}));
  EXPECT_THROW(build_kernel_table(WeightFunction::min_hat(), 1), InvalidArgument);
}

TEST(KernelTable, DifferencesTelescope) {
  for (std::size_t m : {2u, 3u, 7u, 16u, 91u}) {
    const auto t = build_kernel_table(WeightFunction::min_hat(), m);
    ASSERT_EQ(t.g.size(), m);
    ASSERT_EQ(t.gprime.size(), m);
    double s = 0.0;
    for (double v : t.gprime) s += v;
    EXPECT_NEAR(s, t.g.front(), 1e-14);
  }
}

TEST(AsymptoticConstants, MinHatClosedForms) {
  const auto& k = minhat();
  EXPECT_NEAR(k.asymptotic.psi1, 1.0, 1e-6);
  EXPECT_NEAR(k.asymptotic.psi2, 1.0 / 12.0, 1e-6);
  EXPECT_NEAR(k.asymptotic.Phi11, 1.0 / 6.0, 1e-4);
  EXPECT_NEAR(k.asymptotic.Phi12, 1.0 / 96.0, 1e-6);
  EXPECT_NEAR(k.asymptotic.Phi22, 151.0 / 80640.0, 1e-7);
  EXPECT_NEAR(k.Xi, 0.0932933, 1e-6);
  EXPECT_NEAR(k.mu1, std::sqrt(2.0 / std::numbers::pi), 1e-9);
}

TEST(AsymptoticConstants, LagFunctions) {
  const auto& k = minhat();
  ASSERT_EQ(k.lag_grid.size(), k.phi1.size());
  EXPECT_NEAR(k.phi1.front(), k.asymptotic.psi1, 1e-6);
  EXPECT_NEAR(k.phi2.front(), k.asymptotic.psi2, 1e-6);
  EXPECT_NEAR(k.phi2.back(), 0.0, 1e-12);
  EXPECT_NEAR(k.lag_grid.back(), 1.0, 1e-12);
  for (std::size_t i = 0; i < k.lag_grid.size(); ++i) {
    const double s = k.lag_grid[i];
    if (std::abs(s - 0.25) < 1e-12) {
      EXPECT_NEAR(k.phi1[i], 0.25, 1e-6);
      EXPECT_NEAR(k.phi2[i], 0.0598958, 1e-6);
    }
    if (std::abs(s - 0.75) < 1e-12) EXPECT_NEAR(k.phi2[i], 0.00260417, 1e-7);
    EXPECT_GE(k.phi2[i], -1e-12);
    EXPECT_LE(k.phi2[i], k.asymptotic.psi2 + 1e-12);
    if (i > 0) EXPECT_LE(k.phi2[i], k.phi2[i - 1] + 1e-12);
  }
}

TEST(AsymptoticConstants, PositivityAndCauchySchwarz) {
  const auto& c = minhat().asymptotic;
  for (double v : {c.psi1, c.psi2, c.Phi11, c.Phi12, c.Phi22, minhat().Xi, minhat().mu1}) EXPECT_GT(v, 0.0);
  EXPECT_LE(c.Phi12 * c.Phi12, c.Phi11 * c.Phi22);
  EXPECT_LE(minhat().Xi, 1.0);
}

TEST(AsymptoticConstants, RejectsCoarseQuadrature) {
  EXPECT_THROW(asymptotic_constants(WeightFunction::min_hat(), 100), InvalidArgument);
}

TEST(FiniteSampleConstants, SmallWindowByHand) {
  // m = 2: increments of (0, 0.5, 0) are (0.5, -0.5), so psi1 = 2 (0.25 + 0.25).
  const auto c = finite_sample_constants(build_kernel_table(WeightFunction::min_hat(), 2));
  EXPECT_DOUBLE_EQ(c.psi1, 1.0);
  EXPECT_DOUBLE_EQ(c.psi2, 0.125);
}

TEST(FiniteSampleConstants, ConvergeToAsymptotic) {
  const auto& a = minhat().asymptotic;
  const auto big = finite_sample_constants(build_kernel_table(WeightFunction::min_hat(), 1000));
  EXPECT_LT(std::abs(big.psi2 - a.psi2) / a.psi2, 0.02);
  EXPECT_LT(std::abs(big.psi1 - a.psi1) / a.psi1, 0.02);
  EXPECT_LT(std::abs(big.Phi11 - a.Phi11) / a.Phi11, 0.02);
  EXPECT_LT(std::abs(big.Phi12 - a.Phi12) / a.Phi12, 0.02);
  EXPECT_LT(std::abs(big.Phi22 - a.Phi22) / a.Phi22, 0.02);

  // the gap roughly halves when m doubles
  auto gap = [&](std::size_t m) {
    const auto c = finite_sample_constants(build_kernel_table(WeightFunction::min_hat(), m));
    return std::abs(c.Phi22 - a.Phi22);
  };
  const double ratio = gap(200) / gap(100);
  EXPECT_GT(ratio, 0.2);
  EXPECT_LT(ratio, 0.7);
}

TEST(FiniteSampleConstants, PositiveForAnyWindow) {
  for (std::size_t m = 2; m < 40; ++m) {
    const auto c = finite_sample_constants(build_kernel_table(WeightFunction::min_hat(), m));
    EXPECT_GT(c.psi2, 0.0);
    EXPECT_GT(c.psi1, 0.0);
    EXPECT_LE(c.Phi12 * c.Phi12, c.Phi11 * c.Phi22 * (1.0 + 1e-12));
  }
}

TEST(FArcsine, Values) {
  EXPECT_NEAR(f_arcsine(0.0), 0.0, 1e-15);
  EXPECT_NEAR(f_arcsine(1.0), 1.0 - 2.0 / std::numbers::pi, 1e-10);
  EXPECT_NEAR(f_arcsine(-1.0), 1.0 - 2.0 / std::numbers::pi, 1e-10);
  EXPECT_NEAR(f_arcsine(0.5), 0.0813758, 1e-7);
  EXPECT_THROW(f_arcsine(1.01), DomainError);
}

TEST(FArcsine, RangeOnKernelRatio) {
  const auto& k = minhat();
  for (double p : k.phi2) {
    const double v = f_arcsine(std::clamp(p / k.asymptotic.psi2, -1.0, 1.0));
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
}

TEST(TuningPlanTest, WindowLengths) {
  const std::size_t ns[] = {256, 1024, 4096, 16384};
  const std::size_t ms[] = {8, 16, 32, 64};
  const std::size_t ls[] = {32, 91, 256, 724};
  for (int i = 0; i < 4; ++i) {
    const auto p = make_plan(ns[i]);
    EXPECT_EQ(p.m_n, ms[i]);
    EXPECT_EQ(p.l_n, ls[i]);
    EXPECT_NEAR(p.kappa_eff(), 0.5, 1e-12);
  }
}

TEST(TuningPlanTest, Validation) {
  EXPECT_THROW(make_plan(2), InvalidArgument);
  EXPECT_THROW(make_plan(1024, 0.5, 0.5, 0.1), InvalidArgument);
  EXPECT_THROW(make_plan(1024, 0.5, 0.5, 0.5), InvalidArgument);
  EXPECT_THROW(make_plan(1024, 0.01), InvalidArgument);
  EXPECT_THROW(make_plan(1024, 100.0), InvalidArgument);
}

TEST(Kolmogorov, Quantiles) {
  EXPECT_NEAR(kolmogorov_quantile(0.025), 1.4802069, 1e-6);
  EXPECT_NEAR(kolmogorov_quantile(0.05), 1.3580986, 1e-6);
  EXPECT_NEAR(kolmogorov_quantile(0.10), 1.2238479, 1e-6);
  EXPECT_NEAR(kolmogorov_cdf(kolmogorov_quantile(0.5)), 0.5, 1e-8);
  EXPECT_THROW(kolmogorov_quantile(0.0), DomainError);
}

TEST(Kolmogorov, CdfBranchesAgreeAndQuantileDecreases) {
  // the two series agree around the switch point
  EXPECT_NEAR(kolmogorov_cdf(0.999999), kolmogorov_cdf(1.000001), 1e-5);
  double prev = kolmogorov_quantile(0.001);
  for (double a = 0.01; a < 0.99; a += 0.01) {
    const double q = kolmogorov_quantile(a);
    EXPECT_LT(q, prev);
    prev = q;
  }
}

TEST(Calibration, ConstantsFollowFlag) {
  const auto fin = make_calibration(1024);
  const auto asy = make_calibration(1024, 0.5, 0.5, 0.25, false);
  EXPECT_EQ(fin.plan.m_n, 16u);
  EXPECT_EQ(fin.short_table.m, 16u);
  EXPECT_EQ(fin.long_table.m, 91u);
  EXPECT_DOUBLE_EQ(asy.short_window.psi2, minhat().asymptotic.psi2);
  EXPECT_NE(fin.short_window.psi2, asy.short_window.psi2);
}
