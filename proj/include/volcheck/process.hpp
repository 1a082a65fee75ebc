#pragma once

// Step processes on the grid t = j/n and the Kolmogorov-Smirnov /
// Cramer-von Mises functionals of their standardized versions.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "volcheck/errors.hpp"

namespace volcheck {

enum class ProcessKind { Nhat, Mhat, S2, R2, Standardized, NaiveBridge, NoiseFreeN, NoiseFreeS2 };
enum class Functional { KS, CvM };

inline std::string functional_name(Functional f) { return f == Functional::KS ? "KS" : "CvM"; }

inline Functional functional_from_name(const std::string& s) {
  if (s == "KS" || s == "ks") return Functional::KS;
  if (s == "CvM" || s == "cvm" || s == "CVM") return Functional::CvM;
  throw InvalidArgument("unknown functional '" + s + "'");
}

/// value[j] is the process at t = j/n, j = 0..n.
struct ProcessOnGrid {
  std::size_t n = 0;
  ProcessKind kind = ProcessKind::Nhat;
  std::vector<double> value;

  double t(std::size_t j) const { return static_cast<double>(j) / static_cast<double>(n); }
};

/// Functional of |rate * N_t| / max(s_t, eps) over grid points j >= first.
/// eps = floor_fraction * max_{j >= first} s_j; s_t is sqrt of the variance
/// process `s2` (already floored at 0).
inline double standardized_functional(const ProcessOnGrid& N, const ProcessOnGrid& s2, double rate,
                                      std::size_t first, Functional functional,
                                      double floor_fraction = 1e-6) {
  if (N.value.size() != s2.value.size() || N.n != s2.n) {
    throw InvalidArgument("process and variance grids differ");
  }
  const std::size_t size = N.value.size();
  if (first >= size) throw InsufficientData("standardization range is empty");
  double s_max = 0.0;
  for (std::size_t j = first; j < size; ++j) s_max = std::max(s_max, std::sqrt(std::max(0.0, s2.value[j])));
  if (!(s_max > 0.0)) throw DegenerateVariance("estimated variance process is identically zero");
  const double eps = floor_fraction * s_max;
  double sup = 0.0, sum = 0.0;
  for (std::size_t j = first; j < size; ++j) {
    const double s = std::max(std::sqrt(std::max(0.0, s2.value[j])), eps);
    const double r = std::abs(rate * N.value[j]) / s;
    sup = std::max(sup, r);
    sum += r * r;
  }
  return functional == Functional::KS ? sup : sum / static_cast<double>(N.n);
}

}  // namespace volcheck
