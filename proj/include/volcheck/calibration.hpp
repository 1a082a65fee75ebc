#pragma once

// Everything a test pipeline needs that depends only on (g, n, kappa, rho,
// delta): window lengths, kernel tables and the constants actually used.

#include <memory>
#include <string>

#include "volcheck/kernel.hpp"

namespace volcheck {

struct Calibration {
  WeightFunction g = WeightFunction::min_hat();
  std::shared_ptr<const KernelConstants> kernel;
  TuningPlan plan;
  KernelTable short_table;  // window m_n
  KernelTable long_table;  // window l_n
  WindowConstants short_window;  // constants in use for m_n
  WindowConstants long_window;  // constants in use for l_n
  bool finite_sample = true;

  double Xi() const { return kernel->Xi; }
  double mu1() const { return kernel->mu1; }
};

/// Asymptotic constants of the min-hat kernel, computed once per process.
inline std::shared_ptr<const KernelConstants> min_hat_constants() {
  static const auto constants =
      std::make_shared<const KernelConstants>(asymptotic_constants(WeightFunction::min_hat()));
  return constants;
}

inline Calibration make_calibration(std::size_t n, double kappa = 0.5, double rho = 0.5,
                                    double delta = 0.25, bool finite_sample = true,
                                    const WeightFunction& g = WeightFunction::min_hat(),
                                    std::shared_ptr<const KernelConstants> kernel = nullptr) {
  Calibration c;
  c.g = g;
  if (!kernel) {
    kernel = g.kind() == WeightFunction::Kind::MinHat
                 ? min_hat_constants()
                 : std::make_shared<const KernelConstants>(asymptotic_constants(g));
  }
  c.kernel = std::move(kernel);
  c.plan = make_plan(n, kappa, rho, delta);
  c.short_table = build_kernel_table(g, c.plan.m_n);
  c.long_table = build_kernel_table(g, c.plan.l_n);
  c.finite_sample = finite_sample;
  if (finite_sample) {
    c.short_window = finite_sample_constants(c.short_table);
    c.long_window = finite_sample_constants(c.long_table);
  } else {
    c.short_window = c.kernel->asymptotic;
    c.long_window = c.kernel->asymptotic;
  }
  return c;
}

}  // namespace volcheck
