#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>

#include <gtest/gtest.h>

#include "volcheck/simulate.hpp"

using namespace volcheck;

namespace {

ModelSpec lv(const char* drift, const char* sigma2, double x0 = 1.0) {
  return ModelSpec::local_vol(StateFunction::parse(drift), StateFunction::parse(sigma2), x0);
}

std::string write_temp(const std::string& name, const std::string& content) {
  const auto path = std::filesystem::temp_directory_path() / name;
  std::ofstream(path) << content;
  return path.string();
}

double sample_var(const std::vector<double>& v) {
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double s = 0.0;
  for (double x : v) s += (x - mean) * (x - mean);
  return s / static_cast<double>(v.size() - 1);
}

}  // namespace

TEST(SimulateLocalVol, ZeroDynamicsStayPut) {
  const auto p = simulate(lv("0", "0"), 100, 10, 3);
  for (double x : p.x) EXPECT_EQ(x, 1.0);
}

TEST(SimulateLocalVol, BrownianIncrementVariance) {
  const std::size_t n = 10000;
  const auto p = simulate(lv("0", "one"), n, 10, 11);
  std::vector<double> inc(n);
  for (std::size_t i = 0; i < n; ++i) inc[i] = std::sqrt(static_cast<double>(n)) * (p.x[i + 1] - p.x[i]);
  EXPECT_NEAR(sample_var(inc), 1.0, 0.05);
}

TEST(SimulateLocalVol, QuadraticVariationWithinThreeSE) {
  const std::size_t n = 10000;
  const double c = 2.5;
  const auto p = simulate(lv("0", "2.5*one"), n, 10, 5);
  double qv = 0.0;
  for (std::size_t i = 0; i < n; ++i) qv += (p.x[i + 1] - p.x[i]) * (p.x[i + 1] - p.x[i]);
  EXPECT_NEAR(qv, c, 3.0 * std::sqrt(2.0 * c * c / static_cast<double>(n)));
}

TEST(SimulateLocalVol, GeometricPathsStayPositive) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto p = simulate(lv("0.1*x", "x2"), 4096, 10, seed);
    for (double x : p.x) ASSERT_GT(x, 0.0);
  }
}

TEST(SimulateLocalVol, Deterministic) {
  const auto a = simulate(lv("0.1*x", "x2"), 512, 10, 99);
  const auto b = simulate(lv("0.1*x", "x2"), 512, 10, 99);
  EXPECT_EQ(a.x, b.x);
  EXPECT_EQ(a.sigma2_spot, b.sigma2_spot);
  const auto c = simulate(lv("0.1*x", "x2"), 512, 10, 100);
  EXPECT_NE(a.x, c.x);
}

TEST(SimulateLocalVol, NegativeVariancePolicy) {
  const auto model = lv("0", "x", -1.0);
  EXPECT_THROW(simulate(model, 64, 10, 1), ModelViolation);
  const auto p = simulate(model, 64, 10, 1, NegativeVariancePolicy::Clamp);
  EXPECT_GT(p.clamp_events, 0u);
  EXPECT_THROW(simulate(lv("0", "one"), 0, 10, 1), InvalidArgument);
}

TEST(SimulateHeston, ConstantVarianceWhenFrozen) {
  HestonParams hp;
  hp.xi = 0.0;
  hp.kappa = 0.0;
  hp.nu0 = 0.3;
  const auto p = simulate(ModelSpec::heston_model(hp, 0.0), 256, 10, 4);
  for (double v : p.sigma2_spot) EXPECT_DOUBLE_EQ(v, 0.3);
}

TEST(SimulateHeston, DefaultParametersAndNonnegativity) {
  const HestonParams hp;
  EXPECT_DOUBLE_EQ(hp.mu, 0.05 / 252);
  EXPECT_DOUBLE_EQ(hp.kappa, 5.0 / 252);
  EXPECT_DOUBLE_EQ(hp.theta, 0.04 / 252);
  EXPECT_DOUBLE_EQ(hp.xi, 0.05 / 252);
  EXPECT_DOUBLE_EQ(hp.eta, -0.5);
  HestonParams wild;
  wild.nu0 = 0.01;
  wild.theta = 0.01;
  wild.xi = 3.0;
  wild.kappa = 1.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto p = simulate(ModelSpec::heston_model(wild, 0.0), 256, 10, seed);
    for (double v : p.sigma2_spot) ASSERT_GE(v, 0.0);
  }
  HestonParams bad;
  bad.nu0 = -1.0;
  EXPECT_THROW(ModelSpec::heston_model(bad, 0.0), InvalidArgument);
}

TEST(SimulateHeston, IndependentDriversWhenUncorrelated) {
  HestonParams hp;
  hp.eta = 0.0;
  hp.nu0 = hp.theta = 1.0;
  hp.xi = 0.5;
  hp.mu = 0.0;
  const std::size_t n = 10000;
  const auto p = simulate(ModelSpec::heston_model(hp, 0.0), n, 1, 8);
  std::vector<double> dx(n), dv(n);
  for (std::size_t i = 0; i < n; ++i) {
    dx[i] = p.x[i + 1] - p.x[i];
    dv[i] = p.sigma2_spot[i + 1] - p.sigma2_spot[i];
  }
  const double mx = std::accumulate(dx.begin(), dx.end(), 0.0) / n;
  const double mv = std::accumulate(dv.begin(), dv.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (dx[i] - mx) * (dv[i] - mv);
    sxx += (dx[i] - mx) * (dx[i] - mx);
    syy += (dv[i] - mv) * (dv[i] - mv);
  }
  EXPECT_LT(std::abs(sxy / std::sqrt(sxx * syy)), 0.05);
}

TEST(AddNoise, NoneAndGaussianMoments) {
  const auto p = simulate(lv("0", "one"), 10000, 1, 2);
  EXPECT_EQ(add_noise(p, NoiseSpec::none(), 1).z, p.x);
  const auto s = add_noise(p, NoiseSpec::gaussian(1e-4), 3);
  std::vector<double> u(s.z.size());
  for (std::size_t i = 0; i < u.size(); ++i) u[i] = s.z[i] - p.x[i];
  EXPECT_NEAR(sample_var(u), 1e-4, 1e-5);
  const auto su = add_noise(p, NoiseSpec::uniform(1e-4), 3);
  for (std::size_t i = 0; i < u.size(); ++i) {
    u[i] = su.z[i] - p.x[i];
    ASSERT_LE(std::abs(u[i]), std::sqrt(3e-4));
  }
  EXPECT_NEAR(sample_var(u), 1e-4, 1e-5);
}

TEST(AddNoise, ScaledConventionAndTranslation) {
  EXPECT_DOUBLE_EQ(NoiseSpec::gaussian_scaled(0.1024, 1024).omega2, 1e-4);
  auto p = simulate(lv("0", "one"), 100, 1, 2);
  const auto a = add_noise(p, NoiseSpec::gaussian(0.01), 7);
  for (double& x : p.x) x += 5.0;
  const auto b = add_noise(p, NoiseSpec::gaussian(0.01), 7);
  for (std::size_t i = 0; i < a.z.size(); ++i) EXPECT_NEAR(b.z[i] - a.z[i], 5.0, 1e-12);
}

TEST(LoadObservations, TwoColumnsWithHeader) {
  const auto f = write_temp("vc_two.csv", "t,z\n0,1.0\n0.5,1.1\n1,0.9\n");
  const auto s = load_observations(f);
  EXPECT_EQ(s.n, 2u);
  EXPECT_EQ(s.z, (std::vector<double>{1.0, 1.1, 0.9}));
}

TEST(LoadObservations, SingleColumn) {
  const auto f = write_temp("vc_one.csv", "1\n2\n3\n4\n");
  EXPECT_EQ(load_observations(f).n, 3u);
}

TEST(LoadObservations, Errors) {
  EXPECT_THROW(load_observations(write_temp("vc_irr.csv", "0,1\n0.3,2\n1,3\n")), InvalidArgument);
  EXPECT_THROW(load_observations(write_temp("vc_short.csv", "0,1\n1,2\n")), InsufficientData);
  EXPECT_THROW(load_observations(write_temp("vc_bad.csv", "1\nabc\n3\n")), InvalidArgument);
  EXPECT_THROW(load_observations(write_temp("vc_rag.csv", "0,1\n0.5\n1,3\n")), InvalidArgument);
  EXPECT_THROW(load_observations("/nonexistent/file.csv"), InvalidArgument);
}
