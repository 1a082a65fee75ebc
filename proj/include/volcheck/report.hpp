#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "volcheck/calibration.hpp"
#include "volcheck/process.hpp"

namespace volcheck {

enum class Method { Asymptotic, Bootstrap, Naive, NoiseFreeBootstrap };

inline std::string method_name(Method m) {
  switch (m) {
    case Method::Asymptotic: return "asymptotic";
    case Method::Bootstrap: return "bootstrap";
    case Method::Naive: return "naive";
    case Method::NoiseFreeBootstrap: return "noisefree_bootstrap";
  }
  return "?";
}

struct TestReport {
  double statistic = 0.0;
  Functional functional = Functional::KS;
  double alpha = 0.05;
  bool reject = false;
  double critical_value = 0.0;
  std::optional<double> p_value;
  Method method = Method::Asymptotic;
  nlohmann::json metadata = nlohmann::json::object();
  std::vector<double> bootstrap_sample;  // serialized only when non-empty

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["statistic"] = statistic;
    j["functional"] = functional_name(functional);
    j["alpha"] = alpha;
    j["decision"] = reject ? "reject" : "accept";
    j["critical_value"] = critical_value;
    j["p_value"] = p_value ? nlohmann::json(*p_value) : nlohmann::json(nullptr);
    j["method"] = method_name(method);
    j["metadata"] = metadata;
    if (!bootstrap_sample.empty()) j["bootstrap_sample"] = bootstrap_sample;
    return j;
  }
};

/// Plan, constants and conventions, echoed into every report.
inline nlohmann::json calibration_metadata(const Calibration& cal) {
  nlohmann::json j;
  j["n"] = cal.plan.n;
  j["kappa"] = cal.plan.kappa;
  j["rho"] = cal.plan.rho;
  j["delta"] = cal.plan.delta;
  j["m_n"] = cal.plan.m_n;
  j["l_n"] = cal.plan.l_n;
  j["kappa_eff"] = cal.plan.kappa_eff();
  j["rho_eff"] = cal.plan.rho_eff();
  j["weight_function"] = cal.g.name();
  j["finite_sample_constants"] = cal.finite_sample;
  auto window = [](const WindowConstants& c) {
    return nlohmann::json{{"psi1", c.psi1}, {"psi2", c.psi2}, {"Phi11", c.Phi11},
                          {"Phi12", c.Phi12}, {"Phi22", c.Phi22}};
  };
  j["constants_m"] = window(cal.short_window);
  j["constants_l"] = window(cal.long_window);
  j["Xi"] = cal.Xi();
  j["mu1"] = cal.mu1();
  j["index_convention"] = "k=0..n-w stored; sums over k=1..n-w";
  j["standardization"] = "t >= (w+1)/n; s_t floored at 1e-6 * max s_t";
  return j;
}

}  // namespace volcheck
