#pragma once

// Pre-averaging weight functions and the deterministic constants derived
// from them, plus the Kolmogorov (sup |Brownian bridge|) distribution.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "volcheck/errors.hpp"

namespace volcheck {

class WeightFunction {
 public:
  enum class Kind { MinHat, UserTabulated };

  static WeightFunction min_hat() { return WeightFunction(Kind::MinHat, {}); }

  // Samples of g on the uniform grid i/(size-1), i = 0..size-1; linear
  // interpolation in between.
  static WeightFunction tabulated(std::vector<double> samples) {
    if (samples.size() < 3) {
      throw InvalidArgument("tabulated weight function needs at least 3 samples");
    }
    if (samples.front() != 0.0 || samples.back() != 0.0) {
      throw InvalidArgument("weight function must vanish at 0 and 1");
    }
    const bool nonzero = std::any_of(samples.begin(), samples.end(),
                                     [](double v) { return v != 0.0; });
    if (!nonzero) throw InvalidArgument("weight function is identically zero");
    for (double v : samples) {
      if (!std::isfinite(v)) throw InvalidArgument("non-finite weight sample");
    }
    return WeightFunction(Kind::UserTabulated, std::move(samples));
  }

  Kind kind() const { return kind_; }
  const std::vector<double>& samples() const { return samples_; }

  std::string name() const {
    return kind_ == Kind::MinHat ? "min_hat" : "tabulated";
  }

  double operator()(double x) const {
    if (!(x > 0.0 && x < 1.0)) return 0.0;
    if (kind_ == Kind::MinHat) return std::min(x, 1.0 - x);
    const double pos = x * static_cast<double>(samples_.size() - 1);
    const auto i = static_cast<std::size_t>(pos);
    const double w = pos - static_cast<double>(i);
    return (1.0 - w) * samples_[i] + w * samples_[i + 1];
  }

  // Right derivative; g is only piecewise C1.
  double derivative(double x) const {
    if (!(x >= 0.0 && x < 1.0)) return 0.0;
    if (kind_ == Kind::MinHat) return x < 0.5 ? 1.0 : -1.0;
    const double cells = static_cast<double>(samples_.size() - 1);
    const auto i = std::min(static_cast<std::size_t>(x * cells), samples_.size() - 2);
    return (samples_[i + 1] - samples_[i]) * cells;
  }

 private:
  WeightFunction(Kind kind, std::vector<double> samples)
      : kind_(kind), samples_(std::move(samples)) {}

  Kind kind_;
  std::vector<double> samples_;
};

/// g sampled for one window length m: g_j = g(j/m) and g'_j = g_j - g_{j+1},
/// j = 1..m, stored zero-based.
struct KernelTable {
  std::size_t m = 0;
  std::vector<double> g;
  std::vector<double> gprime;
};

inline KernelTable build_kernel_table(const WeightFunction& w, std::size_t m) {
  if (m < 2) throw InvalidArgument("window length m_n must be at least 2");
  KernelTable table;
  table.m = m;
  table.g.resize(m);
  table.gprime.resize(m);
  const double md = static_cast<double>(m);
  for (std::size_t j = 1; j <= m; ++j) table.g[j - 1] = w(static_cast<double>(j) / md);
  for (std::size_t j = 0; j < m; ++j) {
    const double next = j + 1 < m ? table.g[j + 1] : 0.0;
    table.gprime[j] = table.g[j] - next;
  }
  return table;
}

/// The constants entering the bias correction and the variance estimators.
/// Either the asymptotic integrals or their discrete counterparts for a
/// concrete window length.
struct WindowConstants {
  double psi1 = 0.0;
  double psi2 = 0.0;
  double Phi11 = 0.0;
  double Phi12 = 0.0;
  double Phi22 = 0.0;
};

struct KernelConstants {
  WindowConstants asymptotic;
  double Xi = 0.0;
  double mu1 = 0.0;
  // phi_1, phi_2 tabulated on lag_grid (nonuniform at the last cell only).
  std::vector<double> lag_grid;
  std::vector<double> phi1;
  std::vector<double> phi2;
  std::size_t quadrature_points = 0;
};

inline double f_arcsine(double u) {
  if (!(std::abs(u) <= 1.0)) throw DomainError("f_arcsine: |u| must be <= 1");
  return 2.0 / std::numbers::pi *
         (u * std::asin(u) + std::sqrt(1.0 - u * u) - 1.0);
}

namespace detail {

inline double trapezoid(const std::vector<double>& x, const std::vector<double>& y) {
  double s = 0.0;
  for (std::size_t i = 1; i < x.size(); ++i) s += 0.5 * (x[i] - x[i - 1]) * (y[i] + y[i - 1]);
  return s;
}

// E|N(0,1)| = 2 * int_0^inf x phi(x) dx, truncated at 12 standard deviations.
inline double gaussian_abs_moment(std::size_t points) {
  const double upper = 12.0;
  const double h = upper / static_cast<double>(points);
  double s = 0.0;
  for (std::size_t i = 0; i <= points; ++i) {
    const double x = h * static_cast<double>(i);
    const double v = x * std::exp(-0.5 * x * x);
    s += (i == 0 || i == points) ? 0.5 * v : v;
  }
  return 2.0 * h * s / std::sqrt(2.0 * std::numbers::pi);
}

}  // namespace detail

/// Asymptotic constants by composite trapezoid on a uniform grid of
/// `quadrature_points` cells. phi_i are evaluated on at most ~1000 lags that
/// are multiples of the inner grid step, so each lag integral is exact
/// trapezoid on grid-aligned samples.
inline KernelConstants asymptotic_constants(const WeightFunction& w,
                                            std::size_t quadrature_points = 100000) {
  if (quadrature_points < 1000) {
    throw InvalidArgument("asymptotic_constants needs at least 1000 quadrature points");
  }
  const std::size_t N = quadrature_points;
  const double h = 1.0 / static_cast<double>(N);
  std::vector<double> gv(N + 1), dv(N);
  for (std::size_t i = 0; i <= N; ++i) gv[i] = w(h * static_cast<double>(i));
  // g' as a per-cell slope, sampled at cell midpoints
  for (std::size_t c = 0; c < N; ++c) dv[c] = w.derivative(h * (static_cast<double>(c) + 0.5));

  // int_s^1 g(u) g(u - s) du, s = lag * h, trapezoid on grid nodes
  auto node_lag_integral = [&](std::size_t lag) {
    if (lag >= N) return 0.0;
    double s = 0.0;
    for (std::size_t i = lag; i <= N; ++i) {
      const double v = gv[i] * gv[i - lag];
      s += (i == lag || i == N) ? 0.5 * v : v;
    }
    return s * h;
  };
  // int_s^1 g'(u) g'(u - s) du with g' constant on each cell
  auto cell_lag_integral = [&](std::size_t lag) {
    double s = 0.0;
    for (std::size_t c = lag; c < N; ++c) s += dv[c] * dv[c - lag];
    return s * h;
  };

  KernelConstants kc;
  kc.quadrature_points = N;
  const std::size_t stride = std::max<std::size_t>(1, N / 1000);
  std::vector<std::size_t> lags;
  for (std::size_t l = 0; l < N; l += stride) lags.push_back(l);
  lags.push_back(N);
  for (std::size_t lag : lags) {
    kc.lag_grid.push_back(h * static_cast<double>(lag));
    kc.phi1.push_back(cell_lag_integral(lag));
    kc.phi2.push_back(node_lag_integral(lag));
  }

  auto& a = kc.asymptotic;
  a.psi1 = kc.phi1.front();
  a.psi2 = kc.phi2.front();
  std::vector<double> p11(lags.size()), p12(lags.size()), p22(lags.size()), xi(lags.size());
  for (std::size_t i = 0; i < lags.size(); ++i) {
    p11[i] = kc.phi1[i] * kc.phi1[i];
    p12[i] = kc.phi1[i] * kc.phi2[i];
    p22[i] = kc.phi2[i] * kc.phi2[i];
    xi[i] = f_arcsine(std::clamp(kc.phi2[i] / a.psi2, -1.0, 1.0));
  }
  a.Phi11 = detail::trapezoid(kc.lag_grid, p11);
  a.Phi12 = detail::trapezoid(kc.lag_grid, p12);
  a.Phi22 = detail::trapezoid(kc.lag_grid, p22);
  kc.Xi = detail::trapezoid(kc.lag_grid, xi);
  kc.mu1 = detail::gaussian_abs_moment(N);

  for (double v : {a.psi1, a.psi2, a.Phi11, a.Phi12, a.Phi22, kc.Xi, kc.mu1}) {
    if (!std::isfinite(v)) throw NumericError("non-finite kernel constant");
  }
  return kc;
}

/// Discrete counterparts for a window of length m:
///   psi1^n = m * sum_{j=0}^{m-1} (g_{j+1} - g_j)^2   (g_0 = 0, exact noise variance)
///   psi2^n = (1/m) * sum_j g_j^2
///   phi_i^n(l) are the lag-l autocorrelations on the same normalization and
///   Phi_ij^n the trapezoid rule over lags l/m, l = 0..m.
inline WindowConstants finite_sample_constants(const KernelTable& table) {
  const std::size_t m = table.m;
  const double md = static_cast<double>(m);
  // increments d_j = g_{j+1} - g_j, j = 0..m-1, with g_0 = 0
  std::vector<double> d(m);
  d[0] = table.g[0];
  for (std::size_t j = 1; j < m; ++j) d[j] = -table.gprime[j - 1];

  auto autocorr = [m](const std::vector<double>& a, std::size_t lag) {
    double s = 0.0;
    for (std::size_t j = 0; j + lag < m; ++j) s += a[j] * a[j + lag];
    return s;
  };

  WindowConstants c;
  std::vector<double> phi1(m + 1, 0.0), phi2(m + 1, 0.0);
  for (std::size_t l = 0; l < m; ++l) {
    phi1[l] = md * autocorr(d, l);
    phi2[l] = autocorr(table.g, l) / md;
  }
  c.psi1 = phi1[0];
  c.psi2 = phi2[0];
  auto trap = [&](const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.5 * (a[0] * b[0] + a[m] * b[m]);
    for (std::size_t l = 1; l < m; ++l) s += a[l] * b[l];
    return s / md;
  };
  c.Phi11 = trap(phi1, phi1);
  c.Phi12 = trap(phi1, phi2);
  c.Phi22 = trap(phi2, phi2);
  return c;
}

/// Window lengths and regularisation parameters for one sample size.
struct TuningPlan {
  double kappa = 0.5;
  double rho = 0.5;
  double delta = 0.25;
  std::size_t n = 0;
  std::size_t m_n = 0;
  std::size_t l_n = 0;

  double kappa_eff() const { return static_cast<double>(m_n) / std::sqrt(static_cast<double>(n)); }
  double rho_eff() const {
    return static_cast<double>(l_n) / std::pow(static_cast<double>(n), 0.5 + delta);
  }
};

inline TuningPlan make_plan(std::size_t n, double kappa = 0.5, double rho = 0.5,
                            double delta = 0.25) {
  if (n < 4) throw InvalidArgument("sample size too small for pre-averaging");
  if (!(kappa > 0.0) || !(rho > 0.0)) throw InvalidArgument("kappa and rho must be positive");
  if (!(delta > 1.0 / 6.0 && delta < 0.5)) throw InvalidArgument("delta must lie in (1/6, 1/2)");
  TuningPlan p;
  p.kappa = kappa;
  p.rho = rho;
  p.delta = delta;
  p.n = n;
  const double nd = static_cast<double>(n);
  p.m_n = static_cast<std::size_t>(std::llround(kappa * std::sqrt(nd)));
  p.l_n = static_cast<std::size_t>(std::llround(rho * std::pow(nd, 0.5 + delta)));
  if (p.m_n < 2 || p.m_n >= n) throw InvalidArgument("m_n out of range; adjust kappa");
  if (p.l_n < 2 || p.l_n >= n) throw InvalidArgument("l_n out of range; adjust rho or delta");
  return p;
}

// ---------------------------------------------------------------------------
// Kolmogorov distribution: P(sup_t |B_t| <= x) for a Brownian bridge B.

inline double kolmogorov_cdf(double x) {
  if (x <= 0.0) return 0.0;
  if (x < 1.0) {
    // theta-function form converges fast for small x
    const double pi2 = std::numbers::pi * std::numbers::pi;
    double s = 0.0;
    for (int k = 1; k <= 50; ++k) {
      const double odd = 2.0 * k - 1.0;
      s += std::exp(-odd * odd * pi2 / (8.0 * x * x));
    }
    return std::sqrt(2.0 * std::numbers::pi) / x * s;
  }
  double s = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * x * x);
    s += (k % 2 == 1) ? term : -term;
    if (term < 1e-300) break;
  }
  return 1.0 - 2.0 * s;
}

/// Upper-alpha critical value c with P(sup|B| <= c) = 1 - alpha.
inline double kolmogorov_quantile(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0,1)");
  double lo = 0.0, hi = 10.0;
  while (hi - lo > 1e-12) {
    const double mid = 0.5 * (lo + hi);
    if (kolmogorov_cdf(mid) < 1.0 - alpha) lo = mid; else hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace volcheck
