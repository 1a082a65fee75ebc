#pragma once

// Box-constrained minimisation for small parameter vectors: Nelder-Mead
// from several Halton-distributed starts, each polished by a projected
// Newton iteration with central-difference derivatives.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

#include "volcheck/errors.hpp"

namespace volcheck {

struct OptimizerConfig {
  std::size_t starts = 5;
  std::size_t simplex_iterations = 400;
  std::size_t newton_iterations = 50;
  double tolerance = 1e-8;  // relative objective decrease
};

struct OptimizerResult {
  std::vector<double> x;
  double value = std::numeric_limits<double>::infinity();
  std::size_t iterations = 0;
  std::size_t starts_tried = 0;
  bool converged = false;
};

using Objective = std::function<double(const std::vector<double>&)>;

namespace detail {

inline double halton(std::size_t index, std::size_t base) {
  double f = 1.0, r = 0.0;
  while (index > 0) {
    f /= static_cast<double>(base);
    r += f * static_cast<double>(index % base);
    index /= base;
  }
  return r;
}

inline constexpr std::size_t kPrimes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29};

inline void project(std::vector<double>& x, const std::vector<double>& lo,
                    const std::vector<double>& hi) {
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::clamp(x[i], lo[i], hi[i]);
}

inline double safe_eval(const Objective& f, const std::vector<double>& x) {
  const double v = f(x);
  return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
}

inline OptimizerResult nelder_mead(const Objective& f, std::vector<double> x0,
                                   const std::vector<double>& lo, const std::vector<double>& hi,
                                   const OptimizerConfig& cfg) {
  const std::size_t d = x0.size();
  std::vector<std::vector<double>> simplex(d + 1, x0);
  std::vector<double> values(d + 1);
  for (std::size_t i = 0; i < d; ++i) {
    const double span = hi[i] - lo[i];
    double step = 0.1 * span;
    if (x0[i] + step > hi[i]) step = -step;
    simplex[i + 1][i] += step;
  }
  for (std::size_t i = 0; i <= d; ++i) {
    project(simplex[i], lo, hi);
    values[i] = safe_eval(f, simplex[i]);
  }

  OptimizerResult r;
  std::vector<std::size_t> order(d + 1);
  for (r.iterations = 0; r.iterations < cfg.simplex_iterations; ++r.iterations) {
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return values[a] < values[b]; });
    const std::size_t best = order.front(), worst = order.back(), second = order[d - 1];
    const double spread = std::abs(values[worst] - values[best]);
    if (std::isfinite(values[worst]) &&
        spread <= cfg.tolerance * std::abs(values[best]) + 1e-300) {
      r.converged = true;
      break;
    }
    std::vector<double> centroid(d, 0.0);
    for (std::size_t i : order) {
      if (i == worst) continue;
      for (std::size_t j = 0; j < d; ++j) centroid[j] += simplex[i][j] / static_cast<double>(d);
    }
    auto along = [&](double coef) {
      std::vector<double> p(d);
      for (std::size_t j = 0; j < d; ++j) p[j] = centroid[j] + coef * (simplex[worst][j] - centroid[j]);
      project(p, lo, hi);
      return p;
    };
    auto reflected = along(-1.0);
    const double fr = safe_eval(f, reflected);
    if (fr < values[best]) {
      auto expanded = along(-2.0);
      const double fe = safe_eval(f, expanded);
      if (fe < fr) {
        simplex[worst] = std::move(expanded);
        values[worst] = fe;
      } else {
        simplex[worst] = std::move(reflected);
        values[worst] = fr;
      }
      continue;
    }
    if (fr < values[second]) {
      simplex[worst] = std::move(reflected);
      values[worst] = fr;
      continue;
    }
    auto contracted = fr < values[worst] ? along(-0.5) : along(0.5);
    const double fc = safe_eval(f, contracted);
    if (fc < std::min(fr, values[worst])) {
      simplex[worst] = std::move(contracted);
      values[worst] = fc;
      continue;
    }
    for (std::size_t i : order) {
      if (i == best) continue;
      for (std::size_t j = 0; j < d; ++j) {
        simplex[i][j] = simplex[best][j] + 0.5 * (simplex[i][j] - simplex[best][j]);
      }
      values[i] = safe_eval(f, simplex[i]);
    }
  }
  const auto it = std::min_element(values.begin(), values.end());
  r.x = simplex[static_cast<std::size_t>(it - values.begin())];
  r.value = *it;
  return r;
}

// Projected Newton with central differences; for a quadratic objective the
// first step lands on the minimiser up to rounding.
inline OptimizerResult newton_polish(const Objective& f, OptimizerResult start,
                                     const std::vector<double>& lo, const std::vector<double>& hi,
                                     const OptimizerConfig& cfg) {
  const std::size_t d = start.x.size();
  std::vector<double> x = start.x;
  double fx = start.value;
  if (!std::isfinite(fx)) return start;
  for (std::size_t it = 0; it < cfg.newton_iterations; ++it) {
    ++start.iterations;
    Eigen::VectorXd grad(static_cast<Eigen::Index>(d));
    Eigen::MatrixXd hess(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
    std::vector<double> h(d);
    for (std::size_t i = 0; i < d; ++i) h[i] = 1e-4 * std::max(1.0, std::abs(x[i]));
    auto at = [&](std::initializer_list<std::pair<std::size_t, double>> shifts) {
      std::vector<double> p = x;
      for (auto [i, s] : shifts) p[i] += s;
      return f(p);
    };
    for (std::size_t i = 0; i < d; ++i) {
      const double fp = at({{i, h[i]}}), fm = at({{i, -h[i]}});
      grad(static_cast<Eigen::Index>(i)) = (fp - fm) / (2.0 * h[i]);
      hess(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = (fp - 2.0 * fx + fm) / (h[i] * h[i]);
      for (std::size_t j = 0; j < i; ++j) {
        const double v = (at({{i, h[i]}, {j, h[j]}}) - at({{i, h[i]}, {j, -h[j]}}) -
                          at({{i, -h[i]}, {j, h[j]}}) + at({{i, -h[i]}, {j, -h[j]}})) /
                         (4.0 * h[i] * h[j]);
        hess(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
        hess(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = v;
      }
    }
    if (!grad.allFinite() || !hess.allFinite()) break;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(hess);
    Eigen::VectorXd step;
    if (ldlt.info() == Eigen::Success && ldlt.isPositive() && ldlt.vectorD().minCoeff() > 0.0) {
      step = -ldlt.solve(grad);
    } else {
      step = -grad;  // fall back to steepest descent
    }
    double scale = 1.0;
    bool improved = false;
    std::vector<double> trial(d);
    double ft = fx;
    for (int ls = 0; ls < 30; ++ls, scale *= 0.5) {
      for (std::size_t i = 0; i < d; ++i) trial[i] = x[i] + scale * step(static_cast<Eigen::Index>(i));
      project(trial, lo, hi);
      ft = safe_eval(f, trial);
      if (ft <= fx) {
        improved = true;
        break;
      }
    }
    if (!improved) {
      start.converged = true;
      break;
    }
    double moved = 0.0;
    for (std::size_t i = 0; i < d; ++i) moved = std::max(moved, std::abs(trial[i] - x[i]) / std::max(1.0, std::abs(x[i])));
    const double decrease = fx - ft;
    x = trial;
    fx = ft;
    if (decrease <= cfg.tolerance * std::abs(fx) || moved < 1e-12) {
      start.converged = true;
      break;
    }
  }
  start.x = x;
  start.value = fx;
  return start;
}

}  // namespace detail

/// Minimises f over the box [lo, hi]. Throws FitFailure when the box is
/// empty or no start yields a finite objective.
inline OptimizerResult minimize_box(const Objective& f, const std::vector<double>& lo,
                                    const std::vector<double>& hi, const OptimizerConfig& cfg = {},
                                    const std::vector<double>* initial = nullptr) {
  const std::size_t d = lo.size();
  if (d == 0 || hi.size() != d) throw InvalidArgument("parameter box has inconsistent dimensions");
  if (d > std::size(detail::kPrimes)) throw InvalidArgument("too many parameters for the optimizer");
  for (std::size_t i = 0; i < d; ++i) {
    if (!(std::isfinite(lo[i]) && std::isfinite(hi[i]) && lo[i] < hi[i])) {
      throw FitFailure("parameter box must be bounded with nonempty interior");
    }
  }
  OptimizerResult best;
  std::size_t tried = 0;
  auto run_from = [&](std::vector<double> x0) {
    detail::project(x0, lo, hi);
    const double v0 = detail::safe_eval(f, x0);
    ++tried;
    if (!std::isfinite(v0)) return;
    auto r = detail::nelder_mead(f, x0, lo, hi, cfg);
    r = detail::newton_polish(f, std::move(r), lo, hi, cfg);
    if (r.value < best.value) best = std::move(r);
  };
  if (initial) run_from(*initial);
  for (std::size_t s = 0; s < cfg.starts; ++s) {
    std::vector<double> x0(d);
    for (std::size_t i = 0; i < d; ++i) {
      x0[i] = lo[i] + (hi[i] - lo[i]) * (0.05 + 0.9 * detail::halton(s + 1, detail::kPrimes[i]));
    }
    run_from(std::move(x0));
  }
  if (!std::isfinite(best.value)) throw FitFailure("no start produced a finite objective");
  best.starts_tried = tried;
  return best;
}

}  // namespace volcheck
