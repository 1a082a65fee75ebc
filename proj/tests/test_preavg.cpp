#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "volcheck/calibration.hpp"
#include "volcheck/preavg.hpp"

using namespace volcheck;

namespace {

ObservationSeries draw(const char* sigma2, std::size_t n, double omega2, std::uint64_t seed,
                       std::size_t substeps = 10) {
  const auto model = ModelSpec::local_vol(StateFunction::parse("0"), StateFunction::parse(sigma2), 0.0);
  return add_noise(simulate(model, n, substeps, seed), NoiseSpec::gaussian(omega2), seed + 1000);
}

double mean(const std::vector<double>& v, std::size_t from = 1) {
  return std::accumulate(v.begin() + static_cast<long>(from), v.end(), 0.0) /
         static_cast<double>(v.size() - from);
}

}  // namespace

TEST(Preaverage, ConstantAndLinearSeries) {
  const auto table = build_kernel_table(WeightFunction::min_hat(), 4);
  const auto flat = preaverage(ObservationSeries::from_values(std::vector<double>(21, 3.0)), table);
  ASSERT_EQ(flat.zbar.size(), 17u);
  for (double v : flat.zbar) EXPECT_EQ(v, 0.0);

  std::vector<double> lin(21);
  for (std::size_t i = 0; i < lin.size(); ++i) lin[i] = static_cast<double>(i) / 20.0;
  const auto pre = preaverage(ObservationSeries::from_values(lin), table);
  const double expected = (0.25 + 0.5 + 0.25) / 20.0;
  for (double v : pre.zbar) EXPECT_NEAR(v, expected, 1e-15);
}

TEST(Preaverage, AlternatingSeriesByHand) {
  const auto table = build_kernel_table(WeightFunction::min_hat(), 2);
  const auto s = ObservationSeries::from_values({0, 1, 0, 1, 0, 1, 0});
  const auto pre = preaverage(s, table);
  ASSERT_EQ(pre.zbar.size(), 5u);
  for (std::size_t k = 0; k < pre.zbar.size(); ++k) EXPECT_DOUBLE_EQ(pre.zbar[k], 0.5 * (s.z[k + 1] - s.z[k]));
  EXPECT_THROW(preaverage(ObservationSeries::from_values({0, 1}), table), InsufficientData);
}

TEST(Preaverage, LinearityAndScaling) {
  const auto table = build_kernel_table(WeightFunction::min_hat(), 16);
  const auto x = draw("one", 1024, 0.0, 1);
  const auto u = draw("0", 1024, 1e-4, 2);
  std::vector<double> sum(x.z.size()), scaled(x.z.size());
  for (std::size_t i = 0; i < sum.size(); ++i) {
    sum[i] = x.z[i] + u.z[i];
    scaled[i] = -3.0 * x.z[i];
  }
  const auto px = preaverage(x, table), pu = preaverage(u, table);
  const auto ps = preaverage(ObservationSeries::from_values(sum), table);
  const auto pc = preaverage(ObservationSeries::from_values(scaled), table);
  for (std::size_t k = 0; k < ps.zbar.size(); ++k) {
    EXPECT_NEAR(ps.zbar[k], px.zbar[k] + pu.zbar[k], 1e-13);
    EXPECT_NEAR(pc.zbar[k], -3.0 * px.zbar[k], 1e-13);
  }
  const auto c = finite_sample_constants(table);
  EXPECT_NEAR(noise_variance_hat(ObservationSeries::from_values(scaled)), 9.0 * noise_variance_hat(x), 1e-12);
  const auto v1 = spot_vol_hat(px, noise_variance_hat(x), c);
  const auto v2 = spot_vol_hat(pc, noise_variance_hat(ObservationSeries::from_values(scaled)), c);
  for (std::size_t k = 0; k < v1.size(); ++k) EXPECT_NEAR(v2[k], 9.0 * v1[k], 1e-9 * (1.0 + std::abs(v1[k])));
}

TEST(NoiseVariance, HandValues) {
  EXPECT_EQ(noise_variance_hat(ObservationSeries::from_values({2, 2, 2, 2})), 0.0);
  const double a = 0.3;
  EXPECT_NEAR(noise_variance_hat(ObservationSeries::from_values({a, -a, a, -a, a})), 2.0 * a * a, 1e-15);
}

TEST(NoiseVariance, PureNoiseMonteCarlo) {
  double acc = 0.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) acc += noise_variance_hat(draw("0", 16384, 1e-4, seed, 1));
  EXPECT_NEAR(acc / 100.0, 1e-4, 1e-5);
}

TEST(SpotVol, ZeroInputsAndSign) {
  PreaveragedSeries pre{100, 4, std::vector<double>(97, 0.0)};
  const WindowConstants c{1.0, 1.0 / 12, 1.0 / 6, 1.0 / 96, 0.0019};
  for (double v : spot_vol_hat(pre, 0.0, c)) EXPECT_EQ(v, 0.0);
  for (double v : spot_vol_hat(pre, 1e-3, c)) EXPECT_LT(v, 0.0);
}

TEST(SpotVol, ConstantVolatilityMonteCarlo) {
  const auto cal = make_calibration(16384);
  double acc = 0.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto s = draw("one", 16384, 0.1024 / 16384, seed);
    acc += mean(spot_vol_hat(preaverage(s, cal.short_table), noise_variance_hat(s), cal.short_window));
  }
  EXPECT_NEAR(acc / 100.0, 1.0, 0.1);
}

TEST(SpotVol, BiasCorrectionCentersPureNoise) {
  const auto cal = make_calibration(4096);
  std::vector<double> means;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto s = draw("0", 4096, 1e-4, seed, 1);
    means.push_back(mean(spot_vol_hat(preaverage(s, cal.short_table), 1e-4, cal.short_window)));
  }
  const double m = mean(means, 0);
  double v = 0.0;
  for (double x : means) v += (x - m) * (x - m);
  const double se = std::sqrt(v / static_cast<double>(means.size() - 1) / static_cast<double>(means.size()));
  EXPECT_LT(std::abs(m), 3.0 * se + 1e-12);
}

TEST(LocalPrice, ConstantAndLinear) {
  for (double v : local_price_hat(ObservationSeries::from_values(std::vector<double>(10, 4.0)), 3)) EXPECT_EQ(v, 4.0);
  const std::size_t n = 8;
  std::vector<double> lin(n + 1);
  for (std::size_t i = 0; i <= n; ++i) lin[i] = static_cast<double>(i) / n;
  const auto xh = local_price_hat(ObservationSeries::from_values(lin), 2);
  ASSERT_EQ(xh.size(), n - 1);
  for (std::size_t k = 0; k < xh.size(); ++k) EXPECT_NEAR(xh[k], (k + 1.5) / n, 1e-15);
}

TEST(LocalPrice, ErrorShrinksLikeQuarterPower) {
  auto rms = [](std::size_t n) {
    const std::size_t m = make_plan(n).m_n;
    double acc = 0.0;
    std::size_t count = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const auto model = ModelSpec::local_vol(StateFunction::parse("0"), StateFunction::parse("one"), 0.0);
      const auto p = simulate(model, n, 1, seed);
      const auto s = add_noise(p, NoiseSpec::gaussian_scaled(0.1024, n), seed + 7);
      const auto xh = local_price_hat(s, m);
      for (std::size_t k = 0; k < xh.size(); ++k) {
        const double e = xh[k] - p.x[k];
        acc += e * e;
        ++count;
      }
    }
    return std::sqrt(acc / static_cast<double>(count));
  };
  EXPECT_NEAR(rms(16384) / rms(1024), 0.5, 0.15);
}

TEST(SigmaBar, ZeroNonnegativeAndConstantVol) {
  const auto cal = make_calibration(16384);
  PreaveragedSeries zero{16384, cal.plan.l_n, std::vector<double>(16384 - cal.plan.l_n + 1, 0.0)};
  for (double v : spot_sigma_bar(zero, cal.plan, cal.long_window.psi2, cal.mu1())) EXPECT_EQ(v, 0.0);
  double acc = 0.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto s = draw("one", 16384, 0.1024 / 16384, seed);
    const auto sb = spot_sigma_bar(preaverage(s, cal.long_table), cal.plan, cal.long_window.psi2, cal.mu1());
    for (double v : sb) ASSERT_GE(v, 0.0);
    acc += mean(sb);
  }
  EXPECT_NEAR(acc / 100.0, 1.0, 0.15);
}
