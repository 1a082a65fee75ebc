#pragma once

// Pre-averaged increments and the local estimators built on them.
//
// Index convention: every array indexed by k holds k = 0..n-w, where w is the
// window (m_n or l_n), so each entry uses observed data only. Sums that run
// over k = 1..n-w skip entry 0.

#include <cmath>
#include <vector>

#include "volcheck/errors.hpp"
#include "volcheck/kernel.hpp"
#include "volcheck/simulate.hpp"

namespace volcheck {

struct PreaveragedSeries {
  std::size_t n = 0;
  std::size_t m = 0;
  std::vector<double> zbar;  // k = 0..n-m
};

/// zbar[k] = sum_{j=1}^{m} g_j (z[k+j] - z[k+j-1]).
inline PreaveragedSeries preaverage(const ObservationSeries& series, const KernelTable& table) {
  const std::size_t n = series.n;
  const std::size_t m = table.m;
  if (n <= m) throw InsufficientData("pre-averaging needs n > window length");
  PreaveragedSeries out;
  out.n = n;
  out.m = m;
  std::vector<double> dz(n);
  for (std::size_t i = 0; i < n; ++i) dz[i] = series.z[i + 1] - series.z[i];
  out.zbar.assign(n - m + 1, 0.0);
  for (std::size_t k = 0; k + m <= n; ++k) {
    double s = 0.0;
    for (std::size_t j = 0; j < m; ++j) s += table.g[j] * dz[k + j];
    out.zbar[k] = s;
  }
  return out;
}

/// omega2_hat = (1/2n) sum_i (Delta_i Z)^2.
inline double noise_variance_hat(const ObservationSeries& series) {
  if (series.n < 1) throw InsufficientData("noise variance needs n >= 1");
  double s = 0.0;
  for (std::size_t i = 1; i <= series.n; ++i) {
    const double d = series.z[i] - series.z[i - 1];
    s += d * d;
  }
  return s / (2.0 * static_cast<double>(series.n));
}

/// Bias-corrected spot variance. Uses kappa_eff = m/sqrt(n), which turns
/// sqrt(n)/(kappa psi2) into n/(m psi2) and n^{-1/2} psi1/kappa into psi1/m.
/// Entries may be negative.
inline std::vector<double> spot_vol_hat(const PreaveragedSeries& pre, double omega2_hat,
                                        const WindowConstants& c) {
  const double n = static_cast<double>(pre.n);
  const double m = static_cast<double>(pre.m);
  const double scale = n / (m * c.psi2);
  const double bias = c.psi1 / m * omega2_hat;
  std::vector<double> out(pre.zbar.size());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = scale * (pre.zbar[k] * pre.zbar[k] - bias);
  return out;
}

/// xhat[k] = mean of z[k+1..k+w], k = 0..n-w.
inline std::vector<double> local_price_hat(const ObservationSeries& series, std::size_t w) {
  if (w == 0 || series.n <= w) throw InsufficientData("local price needs n > window length");
  const std::size_t count = series.n - w + 1;
  std::vector<double> out(count);
  double window_sum = 0.0;
  for (std::size_t j = 1; j <= w; ++j) window_sum += series.z[j];
  const double inv = 1.0 / static_cast<double>(w);
  out[0] = window_sum * inv;
  for (std::size_t k = 1; k < count; ++k) {
    window_sum += series.z[k + w] - series.z[k];
    out[k] = window_sum * inv;
  }
  return out;
}

/// Spot-sigma estimate from the long-window pre-average (window l_n):
///   n^{1/4 - delta/2} |zbar_k| / (sqrt(rho_eff psi2) mu1).
inline std::vector<double> spot_sigma_bar(const PreaveragedSeries& pre_long, const TuningPlan& plan,
                                          double psi2, double mu1) {
  const double n = static_cast<double>(plan.n);
  const double scale =
      std::pow(n, 0.25 - 0.5 * plan.delta) / (std::sqrt(plan.rho_eff() * psi2) * mu1);
  std::vector<double> out(pre_long.zbar.size());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = scale * std::abs(pre_long.zbar[k]);
  return out;
}

}  // namespace volcheck
