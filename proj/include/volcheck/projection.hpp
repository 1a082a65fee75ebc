#pragma once

// L2 projection of local volatility estimates onto a finite basis, the
// resulting test process and the plug-in estimator of its conditional
// variance. Shared by the squared-volatility, sigma-level and nonlinear
// tests; only the local estimates, the basis rows and the variance weights
// differ between them.
//
// Rows of `basis` are h_k = (h_1, .., h_d)(k/n, xhat_k) for k = 0..K with
// K = n - w; local[k] and weight[k] are indexed the same way.

#include <cmath>
#include <limits>
#include <span>
#include <string>

#include <Eigen/Dense>

#include "volcheck/errors.hpp"
#include "volcheck/process.hpp"

namespace volcheck {

inline constexpr double kMaxCondition = 1e12;

struct LinearFit {
  Eigen::MatrixXd D;  // Gram matrix (1/n) sum h_k h_k^T
  Eigen::VectorXd C;  // (1/n) sum h_k y_k
  Eigen::VectorXd theta;
  Eigen::MatrixXd D_inv;
  double cond = 0.0;
};

/// Eigenvalue-ratio condition number of a symmetric PSD matrix; +inf when
/// the smallest eigenvalue is not positive.
inline double symmetric_condition(const Eigen::MatrixXd& A) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A, Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();
  const double lo = ev.minCoeff(), hi = ev.maxCoeff();
  if (!(lo > 0.0) || !(hi > 0.0)) return std::numeric_limits<double>::infinity();
  return hi / lo;
}

inline Eigen::MatrixXd gram(const Eigen::MatrixXd& basis, std::size_t n) {
  const Eigen::Index K = basis.rows() - 1;
  const auto rows = basis.bottomRows(K);
  return (rows.transpose() * rows) / static_cast<double>(n);
}

/// Solves D theta = C with D = gram(basis). Throws SingularDesign when the
/// condition estimate exceeds 1e12; no regularisation is applied.
inline LinearFit fit_projection(const Eigen::MatrixXd& basis, std::span<const double> local,
                                std::size_t n, const std::string& what = "design matrix") {
  const Eigen::Index K = basis.rows() - 1;
  if (K < 1) throw InsufficientData("projection needs at least one summand");
  if (static_cast<Eigen::Index>(local.size()) != basis.rows()) {
    throw InvalidArgument("local estimates and basis rows differ in length");
  }
  for (Eigen::Index k = 0; k < basis.rows(); ++k) {
    for (Eigen::Index i = 0; i < basis.cols(); ++i) {
      if (!std::isfinite(basis(k, i))) throw NumericError("basis function is not finite on the data");
    }
  }
  LinearFit fit;
  fit.D = gram(basis, n);
  const Eigen::Map<const Eigen::VectorXd> y(local.data() + 1, K);
  fit.C = basis.bottomRows(K).transpose() * y / static_cast<double>(n);
  fit.cond = symmetric_condition(fit.D);
  if (!(fit.cond <= kMaxCondition)) throw SingularDesign(what + " is near-singular", fit.cond);
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(fit.D);
  fit.theta = ldlt.solve(fit.C);
  fit.D_inv = ldlt.solve(Eigen::MatrixXd::Identity(fit.D.rows(), fit.D.cols()));
  return fit;
}

/// value[j] = (1/n) sum_{k=1}^{j-w} (local_k - fitted_k); zero while j <= w.
inline ProcessOnGrid partial_process(std::span<const double> local, std::span<const double> fitted,
                                     std::size_t n, std::size_t w, ProcessKind kind) {
  ProcessOnGrid p;
  p.n = n;
  p.kind = kind;
  p.value.assign(n + 1, 0.0);
  const double inv = 1.0 / static_cast<double>(n);
  double acc = 0.0;
  for (std::size_t j = w + 1; j <= n; ++j) {
    const std::size_t k = j - w;
    acc += local[k] - fitted[k];
    p.value[j] = acc * inv;
  }
  return p;
}

inline std::vector<double> fitted_values(const Eigen::MatrixXd& basis, const Eigen::VectorXd& theta) {
  const Eigen::VectorXd f = basis * theta;
  return {f.data(), f.data() + f.size()};
}

/// s^2_j = g0(j) - 2 a^T g(j) + a^T G a with a = D^{-1} B_j, where
///   B_j  = (1/n) sum_{k=1}^{j-w} h_k
///   g0_j = sum_{k=1}^{j-w} weight_k
///   g_j  = sum_{k=1}^{j-w} weight_k h_{k-1}
///   G    = sum_{k=1}^{K}   weight_k h_{k-1} h_{k-1}^T
/// Floored at zero.
inline ProcessOnGrid variance_process(const Eigen::MatrixXd& basis, const Eigen::MatrixXd& D_inv,
                                      std::span<const double> weight, std::size_t n, std::size_t w,
                                      ProcessKind kind) {
  const Eigen::Index d = basis.cols();
  const Eigen::Index K = basis.rows() - 1;
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(d, d);
  for (Eigen::Index k = 1; k <= K; ++k) {
    const auto lag = basis.row(k - 1);
    G.noalias() += weight[k] * lag.transpose() * lag;
  }

  ProcessOnGrid p;
  p.n = n;
  p.kind = kind;
  p.value.assign(n + 1, 0.0);
  const double inv = 1.0 / static_cast<double>(n);
  Eigen::VectorXd B = Eigen::VectorXd::Zero(d);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(d);
  Eigen::VectorXd a(d);
  double g0 = 0.0;
  for (std::size_t j = w + 1; j <= n; ++j) {
    const Eigen::Index k = static_cast<Eigen::Index>(j - w);
    B.noalias() += inv * basis.row(k).transpose();
    g.noalias() += weight[k] * basis.row(k - 1).transpose();
    g0 += weight[k];
    a.noalias() = D_inv * B;
    const double s2 = g0 - 2.0 * a.dot(g) + a.dot(G * a);
    p.value[j] = std::max(0.0, s2);
  }
  return p;
}

}  // namespace volcheck
