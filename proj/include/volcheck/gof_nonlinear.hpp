#pragma once

// Test of H0: sigma_t^2 = sigma^2(t, X_t, theta) for a family that is
// nonlinear in theta. theta is fitted by least squares on the corrected spot
// variances; the variance of the test process reuses the linear machinery
// with the gradient d sigma^2 / d theta at theta_hat as the basis and its
// Gram matrix in place of D (exact under H0).

#include <cmath>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "volcheck/gof_linear.hpp"
#include "volcheck/optimize.hpp"

namespace volcheck {

struct NonlinearFamily {
  using Value = std::function<double(double t, double x, std::span<const double> theta)>;
  using Gradient =
      std::function<void(double t, double x, std::span<const double> theta, std::span<double> out)>;

  std::string name;
  std::size_t d = 0;
  Value sigma2;
  Gradient grad_theta;  // optional; central differences otherwise
  std::vector<double> lower;
  std::vector<double> upper;

  double operator()(double t, double x, std::span<const double> theta) const {
    return sigma2(t, x, theta);
  }

  void gradient(double t, double x, std::span<const double> theta, std::span<double> out) const {
    if (grad_theta) {
      grad_theta(t, x, theta, out);
      return;
    }
    std::vector<double> p(theta.begin(), theta.end());
    for (std::size_t i = 0; i < d; ++i) {
      const double h = 1e-5 * std::max(1.0, std::abs(theta[i]));
      const double keep = p[i];
      p[i] = keep + h;
      const double fp = sigma2(t, x, p);
      p[i] = keep - h;
      const double fm = sigma2(t, x, p);
      p[i] = keep;
      out[i] = (fp - fm) / (2.0 * h);
    }
  }
};

/// theta^T h(t, x) for a linear basis; the gradient is the basis itself.
inline NonlinearFamily linear_family(const HypothesisSpec& hyp, std::vector<double> lower,
                                     std::vector<double> upper) {
  NonlinearFamily fam;
  fam.name = "linear(" + hyp.describe() + ")";
  fam.d = hyp.dimension();
  auto basis = hyp.basis;
  fam.sigma2 = [basis](double t, double x, std::span<const double> th) {
    double v = 0.0;
    for (std::size_t i = 0; i < basis.size(); ++i) v += th[i] * basis[i](t, x);
    return v;
  };
  fam.grad_theta = [basis](double t, double x, std::span<const double>, std::span<double> out) {
    for (std::size_t i = 0; i < basis.size(); ++i) out[i] = basis[i](t, x);
  };
  fam.lower = std::move(lower);
  fam.upper = std::move(upper);
  return fam;
}

/// theta_1 |x|^{theta_2}: constant-elasticity variance.
inline NonlinearFamily cev_family(std::vector<double> lower = {0.0, 0.0},
                                  std::vector<double> upper = {10.0, 4.0}) {
  NonlinearFamily fam;
  fam.name = "cev";
  fam.d = 2;
  fam.sigma2 = [](double, double x, std::span<const double> th) {
    return th[0] * std::pow(std::abs(x), th[1]);
  };
  fam.lower = std::move(lower);
  fam.upper = std::move(upper);
  return fam;
}

/// exp(theta_1 + theta_2 x).
inline NonlinearFamily exp_affine_family(std::vector<double> lower = {-20.0, -10.0},
                                         std::vector<double> upper = {5.0, 10.0}) {
  NonlinearFamily fam;
  fam.name = "exp_affine";
  fam.d = 2;
  fam.sigma2 = [](double, double x, std::span<const double> th) { return std::exp(th[0] + th[1] * x); };
  fam.grad_theta = [](double, double x, std::span<const double> th, std::span<double> out) {
    const double v = std::exp(th[0] + th[1] * x);
    out[0] = v;
    out[1] = x * v;
  };
  fam.lower = std::move(lower);
  fam.upper = std::move(upper);
  return fam;
}

/// Catalog lookup: "cev", "exp_affine" or "linear:<basis list>".
inline NonlinearFamily family_from_name(const std::string& name, std::vector<double> lower = {},
                                        std::vector<double> upper = {}) {
  auto with_box = [&](NonlinearFamily f) {
    if (!lower.empty()) f.lower = lower;
    if (!upper.empty()) f.upper = upper;
    if (f.lower.size() != f.d || f.upper.size() != f.d) {
      throw InvalidArgument("parameter box for family '" + name + "' has the wrong dimension");
    }
    return f;
  };
  if (name == "cev") return with_box(cev_family());
  if (name == "exp_affine") return with_box(exp_affine_family());
  if (name.rfind("linear:", 0) == 0) {
    const auto hyp = HypothesisSpec::parse(name.substr(7));
    std::vector<double> lo(hyp.dimension(), -100.0), hi(hyp.dimension(), 100.0);
    return with_box(linear_family(hyp, lo, hi));
  }
  throw InvalidArgument("unknown nonlinear family '" + name + "'");
}

struct NonlinearFit {
  std::vector<double> theta;
  double objective_value = 0.0;
  std::size_t iterations = 0;
  std::size_t starts = 0;
  bool converged = false;
};

/// f_n(theta) = (1/n) sum_{k=1}^{n-m} (sigma2_hat_k - sigma^2(k/n, xhat_k, theta))^2.
inline double objective_fn(const LinearInputs& in, const NonlinearFamily& fam,
                           std::span<const double> theta) {
  const double inv = 1.0 / static_cast<double>(in.n);
  double s = 0.0;
  for (std::size_t k = 1; k < in.sigma2_hat.size(); ++k) {
    const double v = fam(static_cast<double>(k) * inv, in.xhat[k], theta);
    if (!std::isfinite(v)) throw NumericError("family '" + fam.name + "' is not finite on the data");
    const double r = in.sigma2_hat[k] - v;
    s += r * r;
  }
  return s * inv;
}

inline double objective_fn(const ObservationSeries& series, const NonlinearFamily& fam,
                           const Calibration& cal, std::span<const double> theta) {
  return objective_fn(prepare_linear(series, HypothesisSpec{{StateFunction::constant(1.0)}}, cal),
                      fam, theta);
}

inline NonlinearFit fit_nonlinear(const LinearInputs& in, const NonlinearFamily& fam,
                                  const OptimizerConfig& cfg = {}) {
  if (fam.lower.size() != fam.d || fam.upper.size() != fam.d) {
    throw InvalidArgument("parameter box dimension mismatch");
  }
  const Objective f = [&](const std::vector<double>& th) {
    try {
      return objective_fn(in, fam, th);
    } catch (const NumericError&) {
      return std::numeric_limits<double>::infinity();
    }
  };
  const OptimizerResult r = minimize_box(f, fam.lower, fam.upper, cfg);
  return {r.x, r.value, r.iterations, r.starts_tried, r.converged};
}

inline NonlinearFit fit_nonlinear(const ObservationSeries& series, const NonlinearFamily& fam,
                                  const Calibration& cal, const OptimizerConfig& cfg = {}) {
  return fit_nonlinear(
      prepare_linear(series, HypothesisSpec{{StateFunction::constant(1.0)}}, cal), fam, cfg);
}

struct NonlinearTestResult {
  NonlinearFit fit;
  ProcessOnGrid N;
  ProcessOnGrid s2;
  double rate = 0.0;
  std::size_t first = 0;
  double omega2_hat = 0.0;
  double gradient_gram_cond = 0.0;
  // ||residual-weighted Hessian term|| / ||Gram term|| of f''(theta_hat),
  // reported only; flagged when above 0.1.
  double hessian_ratio = 0.0;
  bool hessian_flag = false;

  double statistic(Functional f) const { return standardized_functional(N, s2, rate, first, f); }
};

inline Eigen::MatrixXd gradient_rows(const LinearInputs& in, const NonlinearFamily& fam,
                                     std::span<const double> theta) {
  Eigen::MatrixXd G(static_cast<Eigen::Index>(in.xhat.size()), static_cast<Eigen::Index>(fam.d));
  std::vector<double> row(fam.d);
  const double inv = 1.0 / static_cast<double>(in.n);
  for (std::size_t k = 0; k < in.xhat.size(); ++k) {
    fam.gradient(static_cast<double>(k) * inv, in.xhat[k], theta, row);
    for (std::size_t i = 0; i < fam.d; ++i) {
      G(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(i)) = row[i];
    }
  }
  if (!G.allFinite()) throw NumericError("family gradient is not finite on the data");
  return G;
}

inline NonlinearTestResult run_nonlinear_test(const LinearInputs& in, const NonlinearFamily& fam,
                                              const OptimizerConfig& cfg = {}) {
  NonlinearTestResult r;
  r.fit = fit_nonlinear(in, fam, cfg);
  const std::span<const double> theta(r.fit.theta);
  const double inv = 1.0 / static_cast<double>(in.n);

  std::vector<double> fitted(in.xhat.size());
  for (std::size_t k = 0; k < fitted.size(); ++k) fitted[k] = fam(static_cast<double>(k) * inv, in.xhat[k], theta);
  r.N = partial_process(in.sigma2_hat, fitted, in.n, in.window, ProcessKind::Nhat);

  const Eigen::MatrixXd grad = gradient_rows(in, fam, theta);
  const Eigen::MatrixXd gram_matrix = gram(grad, in.n);
  r.gradient_gram_cond = symmetric_condition(gram_matrix);
  if (!(r.gradient_gram_cond <= kMaxCondition)) {
    throw SingularDesign("gradient Gram matrix is near-singular", r.gradient_gram_cond);
  }
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(gram_matrix);
  const Eigen::MatrixXd inv_gram = ldlt.solve(Eigen::MatrixXd::Identity(gram_matrix.rows(), gram_matrix.cols()));
  r.s2 = variance_process(grad, inv_gram, in.gamma, in.n, in.window, ProcessKind::S2);
  r.rate = std::pow(static_cast<double>(in.n), 0.25);
  r.first = in.window + 1;
  r.omega2_hat = in.omega2_hat;

  // Diagnostic: (1/n) sum_k r_k H_k with H_k by central differences of the gradient.
  Eigen::MatrixXd weighted_hessian = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(fam.d),
                                                           static_cast<Eigen::Index>(fam.d));
  std::vector<double> p(theta.begin(), theta.end()), gp(fam.d), gm(fam.d);
  for (std::size_t k = 1; k < in.xhat.size(); ++k) {
    const double t = static_cast<double>(k) * inv;
    const double resid = in.sigma2_hat[k] - fitted[k];
    for (std::size_t j = 0; j < fam.d; ++j) {
      const double h = 1e-5 * std::max(1.0, std::abs(p[j]));
      const double keep = p[j];
      p[j] = keep + h;
      fam.gradient(t, in.xhat[k], p, gp);
      p[j] = keep - h;
      fam.gradient(t, in.xhat[k], p, gm);
      p[j] = keep;
      for (std::size_t i = 0; i < fam.d; ++i) {
        weighted_hessian(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) +=
            resid * (gp[i] - gm[i]) / (2.0 * h) * inv;
      }
    }
  }
  const double gram_norm = gram_matrix.operatorNorm();
  const double hess_norm = (0.5 * (weighted_hessian + weighted_hessian.transpose())).operatorNorm();
  r.hessian_ratio = gram_norm > 0.0 ? hess_norm / gram_norm : 0.0;
  r.hessian_flag = r.hessian_ratio > 0.1;
  return r;
}

inline NonlinearTestResult run_nonlinear_test(const ObservationSeries& series,
                                              const NonlinearFamily& fam, const Calibration& cal,
                                              const OptimizerConfig& cfg = {}) {
  return run_nonlinear_test(
      prepare_linear(series, HypothesisSpec{{StateFunction::constant(1.0)}}, cal), fam, cfg);
}

inline ProcessOnGrid test_process_N_nonlinear(const ObservationSeries& series,
                                              const NonlinearFamily& fam, const Calibration& cal) {
  return run_nonlinear_test(series, fam, cal).N;
}

inline ProcessOnGrid variance_process_s2_nonlinear(const ObservationSeries& series,
                                                   const NonlinearFamily& fam,
                                                   const Calibration& cal) {
  return run_nonlinear_test(series, fam, cal).s2;
}

}  // namespace volcheck
