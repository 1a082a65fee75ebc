#pragma once

// Test of H0: sigma_t^2 = sum_i theta_i sigma_i^2(t, X_t) under noise.
// N_t = B^0_t - B_t^T D^{-1} C is estimated from bias-corrected
// pre-averaged spot variances; s^2_t estimates the conditional variance of
// n^{1/4} (N_hat_t - N_t).

#include <cmath>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "volcheck/calibration.hpp"
#include "volcheck/functions.hpp"
#include "volcheck/preavg.hpp"
#include "volcheck/process.hpp"
#include "volcheck/projection.hpp"

namespace volcheck {

/// Rows k = 0..rows-1 evaluate each basis function at (k/n, xhat_k).
inline Eigen::MatrixXd evaluate_basis(const std::vector<StateFunction>& basis,
                                      std::span<const double> xhat, std::size_t n) {
  Eigen::MatrixXd H(static_cast<Eigen::Index>(xhat.size()), static_cast<Eigen::Index>(basis.size()));
  const double inv = 1.0 / static_cast<double>(n);
  for (std::size_t k = 0; k < xhat.size(); ++k) {
    const double t = static_cast<double>(k) * inv;
    for (std::size_t i = 0; i < basis.size(); ++i) {
      H(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(i)) = basis[i](t, xhat[k]);
    }
  }
  return H;
}

/// Local estimator of gamma^2_{k/n} / n, with kappa = m/sqrt(n):
///   4 Phi22 / (3 kappa psi2^4) |Z|^4
///   + n^{-1/2} 8/kappa^2 (Phi12/psi2^3 - Phi22 psi1/psi2^4) |Z|^2 omega2
///   + n^{-1} 4/kappa^3 (Phi11/psi2^2 - 2 Phi12 psi1/psi2^3 + Phi22 psi1^2/psi2^4) omega2^2
/// Entries can be negative; they are summed unfloored.
inline std::vector<double> gamma_local(const PreaveragedSeries& pre, double omega2_hat,
                                       const WindowConstants& c) {
  const double n = static_cast<double>(pre.n);
  const double kappa = static_cast<double>(pre.m) / std::sqrt(n);
  const double p2 = c.psi2, p1 = c.psi1;
  const double p2_2 = p2 * p2, p2_3 = p2_2 * p2, p2_4 = p2_3 * p2;
  const double a4 = 4.0 * c.Phi22 / (3.0 * kappa * p2_4);
  const double a2 = 8.0 / (kappa * kappa * std::sqrt(n)) * (c.Phi12 / p2_3 - c.Phi22 * p1 / p2_4);
  const double a0 = 4.0 / (kappa * kappa * kappa * n) *
                    (c.Phi11 / p2_2 - 2.0 * c.Phi12 * p1 / p2_3 + c.Phi22 * p1 * p1 / p2_4);
  std::vector<double> out(pre.zbar.size());
  for (std::size_t k = 0; k < out.size(); ++k) {
    const double z2 = pre.zbar[k] * pre.zbar[k];
    out[k] = a4 * z2 * z2 + a2 * z2 * omega2_hat + a0 * omega2_hat * omega2_hat;
  }
  return out;
}

/// The data-dependent ingredients shared by fit, process and variance.
struct LinearInputs {
  std::size_t n = 0;
  std::size_t window = 0;
  double omega2_hat = 0.0;
  std::vector<double> sigma2_hat;  // k = 0..n-m
  std::vector<double> xhat;
  std::vector<double> gamma;
  Eigen::MatrixXd basis;
};

inline LinearInputs prepare_linear(const ObservationSeries& series, const HypothesisSpec& hyp,
                                   const Calibration& cal) {
  hyp.validate();
  if (series.n != cal.plan.n) throw InvalidArgument("calibration built for a different n");
  LinearInputs in;
  in.n = series.n;
  in.window = cal.plan.m_n;
  const PreaveragedSeries pre = preaverage(series, cal.short_table);
  in.omega2_hat = noise_variance_hat(series);
  in.sigma2_hat = spot_vol_hat(pre, in.omega2_hat, cal.short_window);
  in.xhat = local_price_hat(series, cal.plan.m_n);
  in.gamma = gamma_local(pre, in.omega2_hat, cal.short_window);
  in.basis = evaluate_basis(hyp.basis, in.xhat, in.n);
  return in;
}

struct LinearTestResult {
  LinearFit fit;
  ProcessOnGrid N;
  ProcessOnGrid s2;
  double rate = 0.0;  // n^{1/4}
  std::size_t first = 0;  // first grid index of the standardization range
  double omega2_hat = 0.0;

  double statistic(Functional f) const { return standardized_functional(N, s2, rate, first, f); }
};

inline LinearTestResult run_linear_test(const LinearInputs& in) {
  LinearTestResult r;
  r.fit = fit_projection(in.basis, in.sigma2_hat, in.n, "design matrix D");
  const auto fitted = fitted_values(in.basis, r.fit.theta);
  r.N = partial_process(in.sigma2_hat, fitted, in.n, in.window, ProcessKind::Nhat);
  r.s2 = variance_process(in.basis, r.fit.D_inv, in.gamma, in.n, in.window, ProcessKind::S2);
  r.rate = std::pow(static_cast<double>(in.n), 0.25);
  r.first = in.window + 1;
  r.omega2_hat = in.omega2_hat;
  return r;
}

inline LinearTestResult run_linear_test(const ObservationSeries& series, const HypothesisSpec& hyp,
                                        const Calibration& cal) {
  return run_linear_test(prepare_linear(series, hyp, cal));
}

inline LinearFit fit_linear(const ObservationSeries& series, const HypothesisSpec& hyp,
                            const Calibration& cal) {
  const LinearInputs in = prepare_linear(series, hyp, cal);
  return fit_projection(in.basis, in.sigma2_hat, in.n, "design matrix D");
}

inline ProcessOnGrid test_process_N(const ObservationSeries& series, const HypothesisSpec& hyp,
                                    const Calibration& cal) {
  const LinearInputs in = prepare_linear(series, hyp, cal);
  const LinearFit fit = fit_projection(in.basis, in.sigma2_hat, in.n, "design matrix D");
  return partial_process(in.sigma2_hat, fitted_values(in.basis, fit.theta), in.n, in.window,
                         ProcessKind::Nhat);
}

inline ProcessOnGrid variance_process_s2(const ObservationSeries& series, const HypothesisSpec& hyp,
                                         const Calibration& cal) {
  return run_linear_test(series, hyp, cal).s2;
}

/// Homoscedastic null, basis {1}: the limit of n^{1/4} N_t is gamma B_t with
/// B a standard Brownian bridge and gamma^2 = int_0^1 gamma_s^2 ds, so the
/// process is scaled by the global estimate sqrt(sum_k Gamma_k) rather than
/// pointwise. KS of the result is compared with Kolmogorov quantiles.
struct BridgeStatistic {
  LinearTestResult test;
  double scale = 0.0;  // sqrt(sum_k Gamma_k)
  double ks = 0.0;
  double cvm = 0.0;
};

inline BridgeStatistic bridge_statistic(const ObservationSeries& series, const Calibration& cal) {
  const LinearInputs in =
      prepare_linear(series, HypothesisSpec{{StateFunction::constant(1.0)}}, cal);
  BridgeStatistic b;
  b.test = run_linear_test(in);
  double total = 0.0;
  for (std::size_t k = 1; k < in.gamma.size(); ++k) total += in.gamma[k];
  if (!(total > 0.0)) throw DegenerateVariance("estimated bridge variance is not positive");
  b.scale = std::sqrt(total);
  const auto& N = b.test.N.value;
  for (std::size_t j = b.test.first; j < N.size(); ++j) {
    const double r = b.test.rate * std::abs(N[j]) / b.scale;
    b.ks = std::max(b.ks, r);
    b.cvm += r * r;
  }
  b.cvm /= static_cast<double>(in.n);
  return b;
}

/// KS or CvM functional of n^{1/4} N_t / s_t over t >= (m_n + 1)/n.
inline double linear_statistic(const ObservationSeries& series, const HypothesisSpec& hyp,
                               const Calibration& cal, Functional f = Functional::KS) {
  return run_linear_test(series, hyp, cal).statistic(f);
}

}  // namespace volcheck
