#pragma once

// Latent diffusion paths (Euler-Maruyama local volatility and full-truncation
// Heston), additive i.i.d. noise, and CSV ingestion of observation series.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "volcheck/errors.hpp"
#include "volcheck/functions.hpp"

namespace volcheck {

struct HestonParams {
  double mu = 0.05 / 252.0;
  double kappa = 5.0 / 252.0;  // mean-reversion speed
  double theta = 0.04 / 252.0;  // long-run variance
  double xi = 0.05 / 252.0;  // vol of variance
  double eta = -0.5;  // Corr(W, B)
  double nu0 = 0.04 / 252.0;
};

struct ModelSpec {
  enum class Kind { LocalVol, Heston };
  using Fn = std::function<double(double, double)>;

  Kind kind = Kind::LocalVol;
  Fn drift;
  Fn sigma2;
  std::string drift_descriptor;
  std::string sigma2_descriptor;
  double x0 = 1.0;
  HestonParams heston;

  static ModelSpec local_vol(const StateFunction& drift, const StateFunction& sigma2, double x0) {
    ModelSpec m;
    m.kind = Kind::LocalVol;
    m.drift = drift;
    m.sigma2 = sigma2;
    m.drift_descriptor = drift.describe();
    m.sigma2_descriptor = sigma2.describe();
    m.x0 = x0;
    return m;
  }

  static ModelSpec local_vol(Fn drift, Fn sigma2, double x0, std::string drift_desc,
                             std::string sigma2_desc) {
    ModelSpec m;
    m.kind = Kind::LocalVol;
    m.drift = std::move(drift);
    m.sigma2 = std::move(sigma2);
    m.drift_descriptor = std::move(drift_desc);
    m.sigma2_descriptor = std::move(sigma2_desc);
    m.x0 = x0;
    return m;
  }

  static ModelSpec heston_model(const HestonParams& p, double x0) {
    if (!(p.nu0 >= 0.0)) throw InvalidArgument("Heston nu0 must be nonnegative");
    if (!(std::abs(p.eta) <= 1.0)) throw InvalidArgument("Heston correlation outside [-1,1]");
    ModelSpec m;
    m.kind = Kind::Heston;
    m.heston = p;
    m.x0 = x0;
    m.drift_descriptor = "heston";
    m.sigma2_descriptor = "heston";
    return m;
  }

  std::string describe() const {
    if (kind == Kind::Heston) return "heston";
    return "localvol(b=" + drift_descriptor + ", sigma2=" + sigma2_descriptor + ")";
  }
};

enum class NegativeVariancePolicy { Error, Clamp };

struct LatentPath {
  std::size_t n = 0;
  std::vector<double> x;  // X_{i/n}, i = 0..n
  std::vector<double> sigma2_spot;  // true sigma^2 at i/n
  std::size_t clamp_events = 0;
};

struct ObservationSeries {
  std::size_t n = 0;
  std::vector<double> z;  // Z_{i/n}, i = 0..n

  static ObservationSeries from_values(std::vector<double> values) {
    if (values.size() < 2) throw InsufficientData("observation series needs at least 2 values");
    for (double v : values) {
      if (!std::isfinite(v)) throw InvalidArgument("non-finite observation");
    }
    ObservationSeries s;
    s.n = values.size() - 1;
    s.z = std::move(values);
    return s;
  }
};

struct NoiseSpec {
  enum class Kind { Gaussian, UniformSymmetric, None };
  Kind kind = Kind::Gaussian;
  double omega2 = 0.0;

  static NoiseSpec none() { return {Kind::None, 0.0}; }
  static NoiseSpec gaussian(double omega2) { return {Kind::Gaussian, omega2}; }
  static NoiseSpec uniform(double omega2) { return {Kind::UniformSymmetric, omega2}; }

  // The n * omega^2 = const convention used to compare sample sizes.
  static NoiseSpec gaussian_scaled(double n_omega2, std::size_t n) {
    return gaussian(n_omega2 / static_cast<double>(n));
  }

  std::string kind_name() const {
    switch (kind) {
      case Kind::Gaussian: return "gaussian";
      case Kind::UniformSymmetric: return "uniform";
      case Kind::None: return "none";
    }
    return "?";
  }
};

inline LatentPath simulate_local_vol(const ModelSpec& model, std::size_t n, std::size_t substeps,
                                     std::uint64_t seed,
                                     NegativeVariancePolicy policy = NegativeVariancePolicy::Error) {
  if (model.kind != ModelSpec::Kind::LocalVol) throw InvalidArgument("expected a local-vol model");
  if (n == 0 || substeps == 0) throw InvalidArgument("n and substeps must be positive");
  if (!model.drift || !model.sigma2) throw InvalidArgument("local-vol model lacks drift or sigma2");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const std::size_t steps = n * substeps;
  const double dt = 1.0 / static_cast<double>(steps);
  const double sqdt = std::sqrt(dt);

  LatentPath path;
  path.n = n;
  path.x.resize(n + 1);
  path.sigma2_spot.resize(n + 1);

  auto variance_at = [&](double t, double x) {
    double v = model.sigma2(t, x);
    if (!std::isfinite(v)) throw ModelViolation("sigma2 evaluated to a non-finite value");
    if (v < 0.0) {
      if (policy == NegativeVariancePolicy::Error) {
        throw ModelViolation("sigma2(t,x) < 0 at t=" + std::to_string(t) +
                             ", x=" + std::to_string(x));
      }
      ++path.clamp_events;
      v = 0.0;
    }
    return v;
  };

  double x = model.x0;
  path.x[0] = x;
  path.sigma2_spot[0] = variance_at(0.0, x);
  for (std::size_t step = 0; step < steps; ++step) {
    const double t = static_cast<double>(step) * dt;
    const double v = step % substeps == 0 ? path.sigma2_spot[step / substeps] : variance_at(t, x);
    x += model.drift(t, x) * dt + std::sqrt(v) * sqdt * normal(rng);
    if ((step + 1) % substeps == 0) {
      const std::size_t i = (step + 1) / substeps;
      path.x[i] = x;
      path.sigma2_spot[i] = variance_at(static_cast<double>(i) / static_cast<double>(n), x);
    }
  }
  return path;
}

/// Euler scheme with full truncation: nu^+ = max(nu, 0) replaces nu in the
/// drift and diffusion of both equations. X is the log-price.
inline LatentPath simulate_heston(const ModelSpec& model, std::size_t n, std::size_t substeps,
                                  std::uint64_t seed) {
  if (model.kind != ModelSpec::Kind::Heston) throw InvalidArgument("expected a Heston model");
  if (n == 0 || substeps == 0) throw InvalidArgument("n and substeps must be positive");
  const HestonParams& p = model.heston;
  if (!(p.nu0 >= 0.0)) throw InvalidArgument("Heston nu0 must be nonnegative");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const std::size_t steps = n * substeps;
  const double dt = 1.0 / static_cast<double>(steps);
  const double sqdt = std::sqrt(dt);
  const double orth = std::sqrt(std::max(0.0, 1.0 - p.eta * p.eta));

  LatentPath path;
  path.n = n;
  path.x.resize(n + 1);
  path.sigma2_spot.resize(n + 1);
  double x = model.x0;
  double nu = p.nu0;
  path.x[0] = x;
  path.sigma2_spot[0] = std::max(nu, 0.0);
  for (std::size_t step = 0; step < steps; ++step) {
    const double w = normal(rng);
    const double w_perp = normal(rng);
    const double b = p.eta * w + orth * w_perp;
    const double nu_plus = std::max(nu, 0.0);
    const double vol = std::sqrt(nu_plus);
    x += (p.mu - 0.5 * nu_plus) * dt + vol * sqdt * w;
    nu += p.kappa * (p.theta - nu_plus) * dt + p.xi * vol * sqdt * b;
    if ((step + 1) % substeps == 0) {
      const std::size_t i = (step + 1) / substeps;
      path.x[i] = x;
      path.sigma2_spot[i] = std::max(nu, 0.0);
    }
  }
  return path;
}

inline LatentPath simulate(const ModelSpec& model, std::size_t n, std::size_t substeps,
                           std::uint64_t seed,
                           NegativeVariancePolicy policy = NegativeVariancePolicy::Error) {
  return model.kind == ModelSpec::Kind::Heston ? simulate_heston(model, n, substeps, seed)
                                               : simulate_local_vol(model, n, substeps, seed, policy);
}

inline ObservationSeries add_noise(const LatentPath& path, const NoiseSpec& noise,
                                   std::uint64_t seed) {
  if (!(noise.omega2 >= 0.0)) throw InvalidArgument("noise variance must be nonnegative");
  ObservationSeries s;
  s.n = path.n;
  s.z = path.x;
  if (noise.kind == NoiseSpec::Kind::None || noise.omega2 == 0.0) return s;
  std::mt19937_64 rng(seed);
  if (noise.kind == NoiseSpec::Kind::Gaussian) {
    std::normal_distribution<double> normal(0.0, std::sqrt(noise.omega2));
    for (double& v : s.z) v += normal(rng);
  } else {
    const double half_width = std::sqrt(3.0 * noise.omega2);
    std::uniform_real_distribution<double> uniform(-half_width, half_width);
    for (double& v : s.z) v += uniform(rng);
  }
  return s;
}

/// Reads a one-column (values) or two-column (time,value) CSV. A
/// non-numeric first line is treated as a header.
inline ObservationSeries load_observations(const std::string& file) {
  std::ifstream in(file);
  if (!in) throw InvalidArgument("cannot open '" + file + "'");
  std::vector<double> times, values;
  std::string line;
  std::size_t line_no = 0;
  int columns = 0;
  auto parse = [&](const std::string& cell, double& out) {
    try {
      std::size_t used = 0;
      out = std::stod(cell, &used);
      while (used < cell.size() && std::isspace(static_cast<unsigned char>(cell[used]))) ++used;
      return used == cell.size();
    } catch (const std::exception&) {
      return false;
    }
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    std::vector<double> nums(cells.size());
    bool ok = !cells.empty() && cells.size() <= 2;
    for (std::size_t i = 0; ok && i < cells.size(); ++i) ok = parse(cells[i], nums[i]);
    if (!ok) {
      if (times.empty() && values.empty() && columns == 0) {
        columns = -1;  // header
        continue;
      }
      throw InvalidArgument(file + ":" + std::to_string(line_no) + ": parse error");
    }
    const int c = static_cast<int>(cells.size());
    if (columns <= 0) columns = c;
    if (c != columns) throw InvalidArgument(file + ":" + std::to_string(line_no) + ": ragged row");
    if (c == 2) {
      times.push_back(nums[0]);
      values.push_back(nums[1]);
    } else {
      values.push_back(nums[0]);
    }
  }
  if (values.size() < 3) throw InsufficientData("observation file needs at least 3 rows");
  if (!times.empty()) {
    const double span = times.back() - times.front();
    if (!(span > 0.0)) throw InvalidArgument("observation times must increase");
    const double step = span / static_cast<double>(times.size() - 1);
    for (std::size_t i = 1; i < times.size(); ++i) {
      const double d = times[i] - times[i - 1];
      if (std::abs(d - step) > 1e-9 * std::abs(step)) {
        throw InvalidArgument("observation times are not equally spaced (row " +
                              std::to_string(i + 1) + ")");
      }
    }
  }
  return ObservationSeries::from_values(std::move(values));
}

}  // namespace volcheck
