#include <algorithm>
#include <atomic>
#include <cmath>
#include <string>

#include <gtest/gtest.h>

#include "volcheck/bootstrap.hpp"

using namespace volcheck;

namespace {

ObservationSeries draw(const char* sigma2, std::size_t n, std::uint64_t seed) {
  const auto model = ModelSpec::local_vol(StateFunction::parse("0.1*x"), StateFunction::parse(sigma2), 1.0);
  return add_noise(simulate(model, n, 10, seed), NoiseSpec::gaussian_scaled(0.1024, n), seed + 17);
}

BootstrapConfig linear_config(const char* basis, std::size_t replications, std::uint64_t seed = 7) {
  BootstrapConfig cfg;
  cfg.replications = replications;
  cfg.master_seed = seed;
  cfg.statistic.pipeline = Pipeline::Linear;
  cfg.statistic.hypothesis = HypothesisSpec::parse(basis);
  return cfg;
}

NullModel unit_null() {
  NullModel null;
  null.sigma2 = StateFunction::constant(1.0);
  null.x0_star = 1.0;
  null.noise_variance = 1e-4;
  return null;
}

}  // namespace

TEST(BootstrapOutcomeRules, CriticalValueRank) {
  BootstrapOutcome out;
  for (int i = 1; i <= 99; ++i) out.sample.push_back(static_cast<double>(i));
  // J = 99: ceil(0.95 * 100) = 95
  EXPECT_EQ(out.critical_value(0.05), 95.0);
  EXPECT_EQ(out.critical_value(0.10), 90.0);
  out.sample.resize(10);
  // ceil(0.95 * 11) = 11 > J
  EXPECT_TRUE(std::isinf(out.critical_value(0.05)));
  out.observed = 1e9;
  EXPECT_FALSE(out.reject(0.05));
  EXPECT_NEAR(out.p_value(), 1.0 / 11.0, 1e-15);
  out.observed = 5.0;
  EXPECT_NEAR(out.p_value(), 7.0 / 11.0, 1e-15);
}

TEST(BootstrapOutcomeRules, CriticalValueNonincreasingInAlpha) {
  const auto s = draw("x2", 256, 1);
  const auto out = bootstrap_distribution(s, linear_config("x2", 199), make_calibration(256));
  double prev = out.critical_value(0.01);
  for (double a = 0.02; a < 0.5; a += 0.01) {
    const double c = out.critical_value(a);
    EXPECT_LE(c, prev);
    prev = c;
  }
}

TEST(BootstrapEngine, ConstantStatisticNeverRejects) {
  BootstrapConfig cfg;
  cfg.replications = 50;
  const auto out = bootstrap_replicate(0.0, unit_null(), 128, [](const ObservationSeries&) { return 0.0; }, cfg);
  EXPECT_EQ(out.sample.size(), 50u);
  for (double a : {0.025, 0.05, 0.1}) EXPECT_FALSE(out.reject(a));
  EXPECT_DOUBLE_EQ(out.p_value(), 1.0);
}

TEST(BootstrapEngine, FailuresAreDroppedOrFatal) {
  BootstrapConfig cfg;
  cfg.replications = 100;
  std::atomic<int> calls{0};
  auto flaky = [&](const ObservationSeries& s) -> double {
    ++calls;
    if (s.z[1] > s.z[0] + 1.5 * std::sqrt(1.0 / 128)) throw DegenerateVariance("boom");
    return 1.0;
  };
  const auto out = bootstrap_replicate(0.5, unit_null(), 128, flaky, cfg);
  EXPECT_EQ(out.sample.size() + out.failures, 100u);
  EXPECT_GT(out.failures, 0u);
  auto always = [](const ObservationSeries&) -> double { throw NumericError("nope"); };
  EXPECT_THROW(bootstrap_replicate(0.5, unit_null(), 128, always, cfg), BootstrapUnstable);
  cfg.replications = 0;
  EXPECT_THROW(bootstrap_replicate(0.5, unit_null(), 128, flaky, cfg), InvalidArgument);
}

TEST(BootstrapEngine, DeterministicAcrossWorkerCounts) {
  const auto s = draw("x2", 512, 3);
  const auto cal = make_calibration(512);
  auto cfg = linear_config("x2", 40);
  const auto a = bootstrap_distribution(s, cfg, cal);
  cfg.workers = 4;
  const auto b = bootstrap_distribution(s, cfg, cal);
  EXPECT_EQ(a.sample, b.sample);
  EXPECT_EQ(a.observed, b.observed);
  cfg.master_seed = 8;
  EXPECT_NE(bootstrap_distribution(s, cfg, cal).sample, a.sample);
}

TEST(NullFit, StartsAtFirstObservation) {
  const auto s = draw("x2", 1024, 4);
  const auto cal = make_calibration(1024);
  auto cfg = linear_config("one,x2", 1);
  const auto null = fit_null(s, cfg.statistic, cal);
  EXPECT_EQ(null.x0_star, s.z.front());
  EXPECT_NEAR(null.omega2_hat, noise_variance_hat(s), 1e-15);
  EXPECT_NEAR(null.noise_variance, debiased_noise_variance(s, cal), 1e-15);
  EXPECT_LT(null.noise_variance, null.omega2_hat);
  const auto fit = fit_linear(s, cfg.statistic.hypothesis, cal);
  EXPECT_NEAR(null.sigma2(0.3, 2.0), fit.theta(0) + 4.0 * fit.theta(1), 1e-12);
  EXPECT_EQ(null.model().drift(0.0, 5.0), 0.0);
}

TEST(NullFit, DebiasedNoiseVarianceTracksTruth) {
  const std::size_t n = 1024;
  const auto cal = make_calibration(n);
  const double truth = 0.1024 / n;
  for (const char* sigma2 : {"one", "x2"}) {
    double raw = 0.0, debiased = 0.0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      const auto s = draw(sigma2, n, 300 + seed);
      raw += noise_variance_hat(s);
      debiased += debiased_noise_variance(s, cal);
    }
    raw /= 100.0;
    debiased /= 100.0;
    EXPECT_GT(raw, 3.0 * truth) << sigma2;
    EXPECT_LT(std::abs(debiased - truth), 0.1 * (raw - truth)) << sigma2;
    if (std::string(sigma2) == "one") EXPECT_NEAR(debiased, truth, 0.3 * truth);
  }
}

TEST(NullFit, AbsPipelineSquaresSigma) {
  StatisticSpec spec;
  spec.pipeline = Pipeline::Abs;
  spec.hypothesis = HypothesisSpec::parse("absx");
  Evaluation e;
  e.theta = {2.0};
  const auto null = make_null(spec, e, 1.0);
  EXPECT_DOUBLE_EQ(null.sigma2(0.0, -1.5), 9.0);
  e.theta = {-1.0};
  EXPECT_LT(make_null(spec, e, 1.0).sigma2(0.0, 2.0), 0.0);
}

TEST(NullFit, NoiseFreePipelineHasNoNoise) {
  StatisticSpec spec;
  spec.pipeline = Pipeline::NoiseFree;
  spec.hypothesis = HypothesisSpec::parse("x2");
  Evaluation e;
  e.theta = {1.0};
  e.omega2_hat = 0.3;
  EXPECT_EQ(make_null(spec, e, 1.0).noise().kind, NoiseSpec::Kind::None);
}

TEST(BootstrapTest, ReportFields) {
  const auto s = draw("x2", 256, 5);
  auto cfg = linear_config("x2", 60);
  cfg.verbose = true;
  const auto r = bootstrap_test(s, cfg, make_calibration(256));
  EXPECT_EQ(r.method, Method::Bootstrap);
  EXPECT_EQ(r.bootstrap_sample.size() + r.metadata["failed_replications"].get<std::size_t>(), 60u);
  ASSERT_TRUE(r.p_value.has_value());
  EXPECT_GT(*r.p_value, 0.0);
  EXPECT_LE(*r.p_value, 1.0);
  EXPECT_EQ(r.reject, r.statistic > r.critical_value);
  const auto j = r.to_json();
  EXPECT_TRUE(j.contains("decision"));
  EXPECT_EQ(j["metadata"]["m_n"], 8);
}

TEST(BootstrapTest, NoiseFreeVariant) {
  const auto model = ModelSpec::local_vol(StateFunction::parse("0.1*x"), StateFunction::parse("x2"), 1.0);
  const auto s = add_noise(simulate(model, 256, 10, 6), NoiseSpec::none(), 0);
  BootstrapConfig cfg;
  cfg.replications = 60;
  const auto r = noisefree_bootstrap_test(s, HypothesisSpec::parse("x2"), 0.05, cfg);
  EXPECT_EQ(r.method, Method::NoiseFreeBootstrap);
  EXPECT_EQ(r.metadata["n"], 256);
}

TEST(BootstrapTest, PValuesRoughlyUniformUnderNull) {
  // data generated by an exactly fitted null model of the kind the bootstrap resamples from
  const std::size_t n = 1024;
  const auto cal = make_calibration(n);
  std::vector<double> pvalues;
  for (std::uint64_t run = 0; run < 500; ++run) {
    const auto model = ModelSpec::local_vol(StateFunction::zero(), StateFunction::parse("x2"), 1.0);
    const auto s = add_noise(simulate(model, n, 10, 10000 + run), NoiseSpec::gaussian_scaled(0.1024, n), 20000 + run);
    auto cfg = linear_config("x2", 200, 500000 + run);
    pvalues.push_back(bootstrap_distribution(s, cfg, cal).p_value());
  }
  std::sort(pvalues.begin(), pvalues.end());
  double ks = 0.0;
  for (std::size_t i = 0; i < pvalues.size(); ++i) {
    const double lo = static_cast<double>(i) / 500.0, hi = static_cast<double>(i + 1) / 500.0;
    ks = std::max({ks, std::abs(pvalues[i] - lo), std::abs(pvalues[i] - hi)});
  }
  EXPECT_LT(ks, 0.08);
}
