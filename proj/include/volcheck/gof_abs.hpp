#pragma once

// Test of H0-bar: sigma_t = sum_i theta_i sigma-bar_i(t, X_t). Uses the long
// window l_n ~ rho n^{1/2+delta}, for which the noise is negligible in
// |zbar_k| and no bias correction is needed; the price is the slower rate
// n^{-(1/4 - delta/2)}.

#include <cmath>
#include <vector>

#include "volcheck/gof_linear.hpp"

namespace volcheck {

/// Gamma-bar_k = n^{-(1/2+delta)} 2 Xi / (psi2 mu1^2) |zbar_k|^2.
inline std::vector<double> gamma_bar_local(const PreaveragedSeries& pre_long, const TuningPlan& plan,
                                           double psi2, double Xi, double mu1) {
  const double c = std::pow(static_cast<double>(plan.n), -(0.5 + plan.delta)) * 2.0 * Xi /
                   (psi2 * mu1 * mu1);
  std::vector<double> out(pre_long.zbar.size());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = c * pre_long.zbar[k] * pre_long.zbar[k];
  return out;
}

struct AbsInputs {
  std::size_t n = 0;
  std::size_t window = 0;  // l_n
  double delta = 0.25;
  std::vector<double> sigma_bar;  // k = 0..n-l
  std::vector<double> xhat;
  std::vector<double> gamma_bar;
  Eigen::MatrixXd basis;
};

inline AbsInputs prepare_abs(const ObservationSeries& series, const HypothesisSpec& hyp,
                             const Calibration& cal) {
  hyp.validate();
  if (series.n != cal.plan.n) throw InvalidArgument("calibration built for a different n");
  AbsInputs in;
  in.n = series.n;
  in.window = cal.plan.l_n;
  in.delta = cal.plan.delta;
  const PreaveragedSeries pre = preaverage(series, cal.long_table);
  in.sigma_bar = spot_sigma_bar(pre, cal.plan, cal.long_window.psi2, cal.mu1());
  in.xhat = local_price_hat(series, cal.plan.l_n);
  in.gamma_bar = gamma_bar_local(pre, cal.plan, cal.long_window.psi2, cal.Xi(), cal.mu1());
  in.basis = evaluate_basis(hyp.basis, in.xhat, in.n);
  return in;
}

/// Q_hat, S_hat and theta-bar = Q^{-1} S share LinearFit's layout.
using AbsLinearFit = LinearFit;

struct AbsTestResult {
  AbsLinearFit fit;
  ProcessOnGrid M;
  ProcessOnGrid r2;
  double rate = 0.0;  // n^{1/4 - delta/2}
  std::size_t first = 0;

  double statistic(Functional f) const { return standardized_functional(M, r2, rate, first, f); }
};

inline AbsTestResult run_abs_test(const AbsInputs& in) {
  AbsTestResult r;
  r.fit = fit_projection(in.basis, in.sigma_bar, in.n, "design matrix Q");
  const auto fitted = fitted_values(in.basis, r.fit.theta);
  r.M = partial_process(in.sigma_bar, fitted, in.n, in.window, ProcessKind::Mhat);
  r.r2 = variance_process(in.basis, r.fit.D_inv, in.gamma_bar, in.n, in.window, ProcessKind::R2);
  r.rate = std::pow(static_cast<double>(in.n), 0.25 - 0.5 * in.delta);
  r.first = in.window + 1;
  return r;
}

inline AbsTestResult run_abs_test(const ObservationSeries& series, const HypothesisSpec& hyp,
                                  const Calibration& cal) {
  return run_abs_test(prepare_abs(series, hyp, cal));
}

inline AbsLinearFit fit_abs_linear(const ObservationSeries& series, const HypothesisSpec& hyp,
                                   const Calibration& cal) {
  const AbsInputs in = prepare_abs(series, hyp, cal);
  return fit_projection(in.basis, in.sigma_bar, in.n, "design matrix Q");
}

inline ProcessOnGrid test_process_M(const ObservationSeries& series, const HypothesisSpec& hyp,
                                    const Calibration& cal) {
  return run_abs_test(series, hyp, cal).M;
}

inline ProcessOnGrid variance_process_r2(const ObservationSeries& series, const HypothesisSpec& hyp,
                                         const Calibration& cal) {
  return run_abs_test(series, hyp, cal).r2;
}

/// KS or CvM functional of n^{1/4 - delta/2} M_t / r_t over t >= (l_n + 1)/n.
inline double abs_statistic(const ObservationSeries& series, const HypothesisSpec& hyp,
                            const Calibration& cal, Functional f = Functional::KS) {
  return run_abs_test(series, hyp, cal).statistic(f);
}

}  // namespace volcheck
