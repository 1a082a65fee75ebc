#pragma once

// Tests built for noise-free observations: the constant-volatility statistic
// T_n and the squared-increment analogue of the projection test. Both are
// inconsistent under microstructure noise; they are kept to reproduce that
// breakdown.

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "volcheck/functions.hpp"
#include "volcheck/kernel.hpp"
#include "volcheck/projection.hpp"
#include "volcheck/report.hpp"
#include "volcheck/simulate.hpp"

namespace volcheck {

struct NaiveStatistics {
  double T_n = 0.0;
  double realized_var = 0.0;
  ProcessOnGrid partial_process;  // sum_{k<=j} |dZ_k|^2 - (j/n) RV
};

/// T_n = sqrt(n) sup_j |sum_{k<=j} |dZ_k|^2 - (j/n) RV| / (sqrt(2) RV).
inline NaiveStatistics naive_T_n(const ObservationSeries& series) {
  const std::size_t n = series.n;
  if (n < 2) throw InsufficientData("naive statistic needs n >= 2");
  std::vector<double> sq(n + 1, 0.0);
  double rv = 0.0;
  for (std::size_t k = 1; k <= n; ++k) {
    const double d = series.z[k] - series.z[k - 1];
    sq[k] = d * d;
    rv += sq[k];
  }
  if (!(rv > 0.0)) throw DegenerateVariance("realized variance is zero");
  NaiveStatistics s;
  s.realized_var = rv;
  s.partial_process.n = n;
  s.partial_process.kind = ProcessKind::NaiveBridge;
  s.partial_process.value.assign(n + 1, 0.0);
  double acc = 0.0, sup = 0.0;
  const double inv = 1.0 / static_cast<double>(n);
  for (std::size_t j = 1; j < n; ++j) {
    acc += sq[j];
    const double v = acc - static_cast<double>(j) * inv * rv;
    s.partial_process.value[j] = v;
    sup = std::max(sup, std::abs(v));
  }
  s.T_n = std::sqrt(static_cast<double>(n)) * sup / (std::sqrt(2.0) * rv);
  return s;
}

inline TestReport naive_decision(const NaiveStatistics& stats, double alpha) {
  TestReport r;
  r.method = Method::Naive;
  r.functional = Functional::KS;
  r.alpha = alpha;
  r.statistic = stats.T_n;
  r.critical_value = kolmogorov_quantile(alpha);
  r.reject = stats.T_n > r.critical_value;
  r.p_value = 1.0 - kolmogorov_cdf(stats.T_n);
  r.metadata["realized_variance"] = stats.realized_var;
  r.metadata["n"] = stats.partial_process.n;
  return r;
}

struct NoiseFreeTestResult {
  LinearFit fit;
  ProcessOnGrid N;
  ProcessOnGrid s2;
  double rate = 0.0;  // sqrt(n)
  std::size_t first = 1;

  double statistic(Functional f) const { return standardized_functional(N, s2, rate, first, f); }
};

/// Projection test with n |dZ_k|^2 as local estimate of sigma^2_{(k-1)/n}:
///   D_ij = (1/n) sum_{k=1}^n h_i h_j(k/n, Z_k)
///   C_i  = sum_{k=1}^n h_i((k-1)/n, Z_{k-1}) |dZ_k|^2
///   B^0_t = sum_{k<=nt} |dZ_k|^2,  B^i_t = (1/n) sum_{k<=nt} h_i(k/n, Z_k)
/// Conditional variance weights (2/3) n |dZ_k|^4 estimate 2 sigma^4 / n.
inline NoiseFreeTestResult run_noisefree_test(const ObservationSeries& series,
                                              const HypothesisSpec& hyp) {
  hyp.validate();
  const std::size_t n = series.n;
  if (n < 2) throw InsufficientData("noise-free test needs n >= 2");
  std::vector<double> local(n + 1, 0.0), weight(n + 1, 0.0);
  const double nd = static_cast<double>(n);
  for (std::size_t k = 1; k <= n; ++k) {
    const double d = series.z[k] - series.z[k - 1];
    local[k] = nd * d * d;
    weight[k] = (2.0 / 3.0) * nd * d * d * d * d;
  }
  Eigen::MatrixXd H(static_cast<Eigen::Index>(n + 1), static_cast<Eigen::Index>(hyp.dimension()));
  for (std::size_t k = 0; k <= n; ++k) {
    for (std::size_t i = 0; i < hyp.dimension(); ++i) {
      H(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(i)) =
          hyp.basis[i](static_cast<double>(k) / nd, series.z[k]);
    }
  }
  if (!H.allFinite()) throw NumericError("basis function is not finite on the data");

  NoiseFreeTestResult r;
  r.fit.D = gram(H, n);
  const Eigen::Map<const Eigen::VectorXd> y(local.data() + 1, static_cast<Eigen::Index>(n));
  r.fit.C = H.topRows(static_cast<Eigen::Index>(n)).transpose() * y / nd;
  r.fit.cond = symmetric_condition(r.fit.D);
  if (!(r.fit.cond <= kMaxCondition)) throw SingularDesign("design matrix D~ is near-singular", r.fit.cond);
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(r.fit.D);
  r.fit.theta = ldlt.solve(r.fit.C);
  r.fit.D_inv = ldlt.solve(Eigen::MatrixXd::Identity(r.fit.D.rows(), r.fit.D.cols()));

  r.N = partial_process(local, fitted_values(H, r.fit.theta), n, 0, ProcessKind::NoiseFreeN);
  r.s2 = variance_process(H, r.fit.D_inv, weight, n, 0, ProcessKind::NoiseFreeS2);
  r.rate = std::sqrt(nd);
  r.first = 1;
  return r;
}

}  // namespace volcheck
