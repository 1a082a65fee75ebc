#pragma once

// Decision layer: parametric bootstrap under the fitted null for every test
// pipeline, and the Brownian-bridge asymptotic decision for the
// homoscedastic case.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "volcheck/baseline.hpp"
#include "volcheck/calibration.hpp"
#include "volcheck/gof_abs.hpp"
#include "volcheck/gof_linear.hpp"
#include "volcheck/gof_nonlinear.hpp"
#include "volcheck/parallel.hpp"
#include "volcheck/report.hpp"
#include "volcheck/simulate.hpp"

namespace volcheck {

enum class Pipeline { Linear, Abs, Nonlinear, NoiseFree };

inline std::string pipeline_name(Pipeline p) {
  switch (p) {
    case Pipeline::Linear: return "linear";
    case Pipeline::Abs: return "abs";
    case Pipeline::Nonlinear: return "nonlinear";
    case Pipeline::NoiseFree: return "noisefree";
  }
  return "?";
}

inline Pipeline pipeline_from_name(const std::string& s) {
  if (s == "linear") return Pipeline::Linear;
  if (s == "abs") return Pipeline::Abs;
  if (s == "nonlinear") return Pipeline::Nonlinear;
  if (s == "noisefree") return Pipeline::NoiseFree;
  throw InvalidArgument("unknown pipeline '" + s + "'");
}

/// Which statistic to compute: the hypothesis applies to the linear, abs and
/// noise-free pipelines, the family to the nonlinear one.
struct StatisticSpec {
  Pipeline pipeline = Pipeline::Linear;
  Functional functional = Functional::KS;
  HypothesisSpec hypothesis;
  std::optional<NonlinearFamily> family;
  OptimizerConfig optimizer;

  std::string describe() const {
    if (pipeline == Pipeline::Nonlinear) return family ? family->name : "?";
    return hypothesis.describe();
  }
};

struct Evaluation {
  double statistic = 0.0;
  std::vector<double> theta;
  double omega2_hat = 0.0;
  double omega2_null = 0.0;  // noise variance handed to the bootstrap null
};

/// omega2_hat carries a bias of IV/(2n), which under n omega^2 = O(1) is of
/// the same order as omega^2 itself; the pre-averaged integrated variance
/// removes it. Used only for simulating the null.
inline double debiased_noise_variance(const ObservationSeries& series, const Calibration& cal) {
  const auto pre = preaverage(series, cal.short_table);
  const double raw = noise_variance_hat(series);
  const double nd = static_cast<double>(series.n);
  // integrated variance is affine in the noise level fed to the spot estimator,
  // so the self-consistent level solves omega2 = raw - iv(omega2) / (2n)
  auto iv = [&](double omega2) {
    const auto sigma2 = spot_vol_hat(pre, omega2, cal.short_window);
    double sum = 0.0;
    for (std::size_t k = 1; k < sigma2.size(); ++k) sum += sigma2[k];
    return sum / static_cast<double>(sigma2.size() - 1);
  };
  const double iv0 = iv(0.0);
  const double slope = raw > 0.0 ? (iv0 - iv(raw)) / raw : 0.0;
  const double denom = 1.0 - slope / (2.0 * nd);
  if (denom <= 0.0) return std::max(0.0, raw - iv0 / (2.0 * nd));
  return std::max(0.0, (raw - iv0 / (2.0 * nd)) / denom);
}

inline Evaluation evaluate_statistic(const ObservationSeries& series, const StatisticSpec& spec,
                                     const Calibration& cal) {
  Evaluation e;
  auto to_vec = [](const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
  switch (spec.pipeline) {
    case Pipeline::Linear: {
      const auto r = run_linear_test(series, spec.hypothesis, cal);
      e.statistic = r.statistic(spec.functional);
      e.theta = to_vec(r.fit.theta);
      e.omega2_hat = r.omega2_hat;
      break;
    }
    case Pipeline::Abs: {
      const auto r = run_abs_test(series, spec.hypothesis, cal);
      e.statistic = r.statistic(spec.functional);
      e.theta = to_vec(r.fit.theta);
      e.omega2_hat = noise_variance_hat(series);
      break;
    }
    case Pipeline::Nonlinear: {
      if (!spec.family) throw InvalidArgument("nonlinear pipeline needs a parametric family");
      const auto r = run_nonlinear_test(series, *spec.family, cal, spec.optimizer);
      e.statistic = r.statistic(spec.functional);
      e.theta = r.fit.theta;
      e.omega2_hat = r.omega2_hat;
      break;
    }
    case Pipeline::NoiseFree: {
      const auto r = run_noisefree_test(series, spec.hypothesis);
      e.statistic = r.statistic(spec.functional);
      e.theta = to_vec(r.fit.theta);
      e.omega2_hat = noise_variance_hat(series);
      break;
    }
  }
  e.omega2_null = spec.pipeline == Pipeline::NoiseFree ? 0.0 : debiased_noise_variance(series, cal);
  return e;
}

/// Fitted null: zero drift, volatility from the fitted parameters, start at
/// z[0], Gaussian noise of the debiased variance (none for the noise-free
/// pipeline).
struct NullModel {
  Pipeline pipeline = Pipeline::Linear;
  std::vector<double> theta;
  double omega2_hat = 0.0;      // as estimated from the data
  double noise_variance = 0.0;  // debiased, used for simulation
  double x0_star = 0.0;
  ModelSpec::Fn sigma2;
  std::string descriptor;

  ModelSpec model() const {
    return ModelSpec::local_vol([](double, double) { return 0.0; }, sigma2, x0_star, "0", descriptor);
  }

  NoiseSpec noise() const {
    return pipeline == Pipeline::NoiseFree ? NoiseSpec::none() : NoiseSpec::gaussian(noise_variance);
  }
};

inline NullModel make_null(const StatisticSpec& spec, const Evaluation& eval, double x0_star) {
  NullModel null;
  null.pipeline = spec.pipeline;
  null.theta = eval.theta;
  null.omega2_hat = eval.omega2_hat;
  null.noise_variance = std::max(0.0, eval.omega2_null);
  null.x0_star = x0_star;
  const std::vector<double> theta = eval.theta;
  switch (spec.pipeline) {
    case Pipeline::Linear:
    case Pipeline::NoiseFree: {
      StateFunction f = StateFunction::zero();
      for (std::size_t i = 0; i < theta.size(); ++i) f = f + spec.hypothesis.basis[i].scaled(theta[i]);
      null.descriptor = f.describe();
      null.sigma2 = f;
      break;
    }
    case Pipeline::Abs: {
      StateFunction f = StateFunction::zero();
      for (std::size_t i = 0; i < theta.size(); ++i) f = f + spec.hypothesis.basis[i].scaled(theta[i]);
      null.descriptor = "(" + f.describe() + ")^2";
      // A negative sigma maps to a negative variance, which the simulator clamps and counts.
      null.sigma2 = [f](double t, double x) {
        const double s = f(t, x);
        return s >= 0.0 ? s * s : -s * s;
      };
      break;
    }
    case Pipeline::Nonlinear: {
      const NonlinearFamily fam = *spec.family;
      null.descriptor = fam.name;
      null.sigma2 = [fam, theta](double t, double x) { return fam(t, x, theta); };
      break;
    }
  }
  return null;
}

inline NullModel fit_null(const ObservationSeries& series, const StatisticSpec& spec,
                          const Calibration& cal) {
  return make_null(spec, evaluate_statistic(series, spec, cal), series.z.front());
}

struct BootstrapConfig {
  std::size_t replications = 500;
  std::uint64_t master_seed = 1;
  StatisticSpec statistic;
  double alpha = 0.05;
  std::size_t substeps = 10;
  std::size_t workers = 1;
  bool verbose = false;  // keep the bootstrap sample in the report
  double max_failure_fraction = 0.2;
};

/// Observed statistic together with the bootstrap sample, in replication
/// order with failed replications removed.
struct BootstrapOutcome {
  double observed = 0.0;
  NullModel null;
  std::vector<double> sample;
  std::size_t failures = 0;
  std::size_t clamp_events = 0;

  /// Order statistic of rank ceil((1 - alpha)(J + 1)); +inf when that rank exceeds J.
  double critical_value(double alpha) const {
    std::vector<double> sorted = sample;
    std::sort(sorted.begin(), sorted.end());
    const double J = static_cast<double>(sorted.size());
    const auto rank = static_cast<std::size_t>(std::ceil((1.0 - alpha) * (J + 1.0) - 1e-9));
    if (rank == 0) return -std::numeric_limits<double>::infinity();
    if (rank > sorted.size()) return std::numeric_limits<double>::infinity();
    return sorted[rank - 1];
  }

  double p_value() const {
    const auto exceed = std::count_if(sample.begin(), sample.end(), [&](double y) { return y >= observed; });
    return (1.0 + static_cast<double>(exceed)) / (static_cast<double>(sample.size()) + 1.0);
  }

  bool reject(double alpha) const { return observed > critical_value(alpha); }
};

using SeriesStatistic = std::function<double(const ObservationSeries&)>;

/// Generic engine: replication j simulates the null model with seeds
/// derived from (master_seed, j) and evaluates `statistic` on the result.
inline BootstrapOutcome bootstrap_replicate(double observed, const NullModel& null, std::size_t n,
                                            const SeriesStatistic& statistic,
                                            const BootstrapConfig& cfg) {
  if (cfg.replications == 0) throw InvalidArgument("bootstrap needs at least one replication");
  if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) throw InvalidArgument("alpha must lie in (0, 1)");
  const ModelSpec model = null.model();
  const NoiseSpec noise = null.noise();
  std::vector<double> values(cfg.replications, std::numeric_limits<double>::quiet_NaN());
  std::vector<std::size_t> clamps(cfg.replications, 0);
  parallel_for(cfg.replications, cfg.workers, [&](std::size_t j) {
    const LatentPath path = simulate_local_vol(model, n, cfg.substeps,
                                               derive_seed(cfg.master_seed, SeedDomain::BootstrapPath, j),
                                               NegativeVariancePolicy::Clamp);
    clamps[j] = path.clamp_events;
    const ObservationSeries star =
        add_noise(path, noise, derive_seed(cfg.master_seed, SeedDomain::BootstrapNoise, j));
    try {
      values[j] = statistic(star);
    } catch (const InvalidArgument&) {
    } catch (const NumericError&) {
    }
  });
  BootstrapOutcome out;
  out.observed = observed;
  out.null = null;
  for (std::size_t j = 0; j < cfg.replications; ++j) {
    out.clamp_events += clamps[j];
    if (std::isfinite(values[j])) {
      out.sample.push_back(values[j]);
    } else {
      ++out.failures;
    }
  }
  if (static_cast<double>(out.failures) > cfg.max_failure_fraction * static_cast<double>(cfg.replications)) {
    throw BootstrapUnstable(std::to_string(out.failures) + " of " + std::to_string(cfg.replications) +
                            " bootstrap replications failed");
  }
  return out;
}

inline BootstrapOutcome bootstrap_distribution(const ObservationSeries& series, const BootstrapConfig& cfg,
                                               const Calibration& cal) {
  const Evaluation eval = evaluate_statistic(series, cfg.statistic, cal);
  const NullModel null = make_null(cfg.statistic, eval, series.z.front());
  const StatisticSpec spec = cfg.statistic;
  return bootstrap_replicate(
      eval.statistic, null, series.n,
      [&](const ObservationSeries& s) { return evaluate_statistic(s, spec, cal).statistic; }, cfg);
}

inline TestReport report_from_outcome(const BootstrapOutcome& out, const BootstrapConfig& cfg,
                                      const Calibration& cal) {
  TestReport r;
  r.method = cfg.statistic.pipeline == Pipeline::NoiseFree ? Method::NoiseFreeBootstrap : Method::Bootstrap;
  r.functional = cfg.statistic.functional;
  r.alpha = cfg.alpha;
  r.statistic = out.observed;
  r.critical_value = out.critical_value(cfg.alpha);
  r.p_value = out.p_value();
  r.reject = out.reject(cfg.alpha);
  r.metadata = calibration_metadata(cal);
  r.metadata["pipeline"] = pipeline_name(cfg.statistic.pipeline);
  r.metadata["hypothesis"] = cfg.statistic.describe();
  r.metadata["master_seed"] = cfg.master_seed;
  r.metadata["replications"] = cfg.replications;
  r.metadata["failed_replications"] = out.failures;
  r.metadata["substeps"] = cfg.substeps;
  r.metadata["theta_hat"] = out.null.theta;
  r.metadata["omega2_hat"] = out.null.omega2_hat;
  r.metadata["bootstrap_noise_variance"] = out.null.noise_variance;
  r.metadata["x0_star"] = out.null.x0_star;
  r.metadata["null_sigma2"] = out.null.descriptor;
  r.metadata["clamp_events"] = out.clamp_events;
  r.metadata["p_value_convention"] = "(1 + #{Y* >= Y}) / (J + 1)";
  if (cfg.verbose) r.bootstrap_sample = out.sample;
  return r;
}

inline TestReport bootstrap_test(const ObservationSeries& series, const BootstrapConfig& cfg,
                                 const Calibration& cal) {
  return report_from_outcome(bootstrap_distribution(series, cfg, cal), cfg, cal);
}

/// The bootstrap test of the noise-free projection statistic: same engine,
/// null simulated without noise.
inline TestReport noisefree_bootstrap_test(const ObservationSeries& series, const HypothesisSpec& hyp,
                                           double alpha, BootstrapConfig cfg) {
  cfg.alpha = alpha;
  cfg.statistic.pipeline = Pipeline::NoiseFree;
  cfg.statistic.hypothesis = hyp;
  // The noise-free statistic ignores the pre-averaging windows; a calibration
  // is still built so the report carries the usual metadata.
  const Calibration cal = make_calibration(std::max<std::size_t>(series.n, 16));
  TestReport r = bootstrap_test(series, cfg, cal);
  r.metadata["n"] = series.n;
  return r;
}

/// Asymptotic KS decision for the homoscedastic null against Kolmogorov quantiles.
inline TestReport asymptotic_homoscedasticity_test(const ObservationSeries& series, const Calibration& cal,
                                                   double alpha) {
  const BridgeStatistic b = bridge_statistic(series, cal);
  TestReport r;
  r.method = Method::Asymptotic;
  r.functional = Functional::KS;
  r.alpha = alpha;
  r.statistic = b.ks;
  r.critical_value = kolmogorov_quantile(alpha);
  r.reject = b.ks > r.critical_value;
  r.p_value = 1.0 - kolmogorov_cdf(b.ks);
  r.metadata = calibration_metadata(cal);
  r.metadata["pipeline"] = "linear";
  r.metadata["hypothesis"] = "one";
  r.metadata["theta_hat"] = std::vector<double>{b.test.fit.theta(0)};
  r.metadata["omega2_hat"] = b.test.omega2_hat;
  r.metadata["bridge_scale"] = b.scale;
  return r;
}

}  // namespace volcheck
