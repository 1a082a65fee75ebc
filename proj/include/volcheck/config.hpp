#pragma once

// Declarative experiment configuration: JSON parsing, the table presets and
// the expansion of a preset into concrete scenarios.

#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "volcheck/bootstrap.hpp"

namespace volcheck {

class ConfigError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

enum class DecisionRule { Naive, Asymptotic, Bootstrap };

inline std::string rule_name(DecisionRule r) {
  switch (r) {
    case DecisionRule::Naive: return "naive";
    case DecisionRule::Asymptotic: return "asymptotic";
    case DecisionRule::Bootstrap: return "bootstrap";
  }
  return "?";
}

inline DecisionRule rule_from_name(const std::string& s) {
  if (s == "naive") return DecisionRule::Naive;
  if (s == "asymptotic") return DecisionRule::Asymptotic;
  if (s == "bootstrap") return DecisionRule::Bootstrap;
  throw ConfigError("unknown decision rule '" + s + "'");
}

/// One table cell group: a data-generating process, a sample size and the test applied.
struct Scenario {
  std::string row;
  std::string column;
  std::size_t n = 0;
  ModelSpec model;
  NoiseSpec noise;
  DecisionRule rule = DecisionRule::Bootstrap;
  StatisticSpec statistic;
  nlohmann::json source;  // the scenario as written, echoed into reports
};

struct ExperimentConfig {
  std::string preset = "custom";
  std::string based_on;  // preset a resolved custom config came from
  std::string title;
  std::string row_label = "row";
  std::vector<Scenario> scenarios;
  std::size_t mc_runs = 500;
  std::size_t bootstrap_replications = 200;
  std::vector<double> alphas{0.025, 0.05, 0.1};
  std::uint64_t master_seed = 20110301;
  double kappa = 0.5;
  double rho = 0.5;
  double delta = 0.25;
  bool finite_sample = true;
  std::size_t substeps = 10;
  std::size_t workers = 0;  // 0: VOLCHECK_WORKERS or hardware concurrency
  bool paper_scale = false;
  double max_failure_fraction = 0.05;
  std::string output_path;
  std::string output_format = "text";

  std::size_t resolved_workers() const { return workers > 0 ? workers : default_workers(); }
};

namespace detail {

template <class T>
T get_or(const nlohmann::json& j, const char* key, T fallback) {
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

inline const nlohmann::json& require(const nlohmann::json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw ConfigError(where + ": missing field '" + key + "'");
  return j.at(key);
}

}  // namespace detail

inline ModelSpec model_from_json(const nlohmann::json& j) {
  const std::string kind = detail::get_or<std::string>(j, "kind", "localvol");
  const double x0 = detail::require(j, "x0", "model").get<double>();
  if (kind == "heston") {
    HestonParams p;
    p.mu = detail::get_or(j, "mu", p.mu);
    p.kappa = detail::get_or(j, "kappa", p.kappa);
    p.theta = detail::get_or(j, "theta", p.theta);
    p.xi = detail::get_or(j, "xi", p.xi);
    p.eta = detail::get_or(j, "eta", p.eta);
    p.nu0 = detail::get_or(j, "nu0", p.theta);
    return ModelSpec::heston_model(p, x0);
  }
  if (kind != "localvol") throw ConfigError("unknown model kind '" + kind + "'");
  return ModelSpec::local_vol(StateFunction::parse(detail::require(j, "drift", "model").get<std::string>()),
                              StateFunction::parse(detail::require(j, "sigma2", "model").get<std::string>()),
                              x0);
}

/// Accepts {"kind", "omega"}, {"kind", "omega2"} or {"kind", "n_omega2"};
/// the last is converted with the scenario's n.
inline NoiseSpec noise_from_json(const nlohmann::json& j, std::size_t n) {
  const std::string kind = detail::get_or<std::string>(j, "kind", "gaussian");
  if (kind == "none") return NoiseSpec::none();
  const int given = static_cast<int>(j.contains("omega")) + static_cast<int>(j.contains("omega2")) +
                    static_cast<int>(j.contains("n_omega2"));
  if (given != 1) throw ConfigError("noise: give exactly one of omega, omega2, n_omega2");
  double omega2 = 0.0;
  if (j.contains("omega")) {
    const double w = j.at("omega").get<double>();
    omega2 = w * w;
  } else if (j.contains("omega2")) {
    omega2 = j.at("omega2").get<double>();
  } else {
    omega2 = j.at("n_omega2").get<double>() / static_cast<double>(n);
  }
  if (!(omega2 >= 0.0)) throw ConfigError("noise variance must be nonnegative");
  if (kind == "gaussian") return NoiseSpec::gaussian(omega2);
  if (kind == "uniform") return NoiseSpec::uniform(omega2);
  throw ConfigError("unknown noise kind '" + kind + "'");
}

inline StatisticSpec statistic_from_json(const nlohmann::json& j) {
  StatisticSpec s;
  s.pipeline = pipeline_from_name(detail::get_or<std::string>(j, "pipeline", "linear"));
  s.functional = functional_from_name(detail::get_or<std::string>(j, "functional", "KS"));
  if (s.pipeline == Pipeline::Nonlinear) {
    const std::string fam = detail::require(j, "family", "statistic").get<std::string>();
    s.family = family_from_name(fam, detail::get_or<std::vector<double>>(j, "lower", {}),
                                detail::get_or<std::vector<double>>(j, "upper", {}));
    s.hypothesis = HypothesisSpec::parse("one");
  } else {
    s.hypothesis = HypothesisSpec::parse(detail::require(j, "basis", "statistic").get<std::string>());
  }
  return s;
}

inline Scenario scenario_from_json(const nlohmann::json& j) {
  Scenario s;
  s.source = j;
  s.n = detail::require(j, "n", "scenario").get<std::size_t>();
  s.row = detail::get_or<std::string>(j, "row", "n=" + std::to_string(s.n));
  s.column = detail::get_or<std::string>(j, "column", "");
  s.model = model_from_json(detail::require(j, "model", "scenario"));
  s.noise = noise_from_json(detail::require(j, "noise", "scenario"), s.n);
  s.rule = rule_from_name(detail::require(j, "rule", "scenario").get<std::string>());
  s.statistic = statistic_from_json(detail::require(j, "statistic", "scenario"));
  if (s.rule == DecisionRule::Asymptotic) {
    const bool homoscedastic = s.statistic.pipeline == Pipeline::Linear &&
                               s.statistic.hypothesis.dimension() == 1 &&
                               s.statistic.hypothesis.basis[0] == StateFunction::constant(1.0);
    if (!homoscedastic) {
      throw ConfigError("asymptotic critical values exist only for the linear test with basis {one}");
    }
  }
  return s;
}

namespace detail {

inline nlohmann::json localvol(const std::string& drift, const std::string& sigma2, double x0 = 1.0) {
  return {{"kind", "localvol"}, {"drift", drift}, {"sigma2", sigma2}, {"x0", x0}};
}

inline std::string fmt(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

inline nlohmann::json scenario(const std::string& row, const std::string& column, std::size_t n,
                               nlohmann::json model, nlohmann::json noise, const std::string& rule,
                               nlohmann::json statistic) {
  return {{"row", row}, {"column", column}, {"n", n}, {"model", std::move(model)},
          {"noise", std::move(noise)}, {"rule", rule}, {"statistic", std::move(statistic)}};
}

inline constexpr double kNOmega2 = 0.1024;

}  // namespace detail

inline const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names{"table1", "table2", "table3", "table4", "table5", "table6"};
  return names;
}

/// Scenario list of a preset. Desk scale caps n at 4096; for the n = 16384
/// design of table1 it keeps n omega^2 fixed, so omega doubles.
inline nlohmann::json preset_scenarios(const std::string& preset, bool paper_scale,
                                       std::string* title = nullptr, std::string* row_label = nullptr) {
  using detail::fmt;
  using detail::localvol;
  using detail::scenario;
  nlohmann::json list = nlohmann::json::array();
  const nlohmann::json n_omega2 = {{"kind", "gaussian"}, {"n_omega2", detail::kNOmega2}};
  auto set = [&](const char* t, const char* r) {
    if (title) *title = t;
    if (row_label) *row_label = r;
  };
  if (preset == "table1") {
    set("Level of the noise-free constant-volatility test T_n under noise", "theta");
    const std::size_t n = paper_scale ? 16384 : 4096;
    const double scale = std::sqrt(16384.0 / static_cast<double>(n));
    for (double theta : {1.0, 0.75, 0.5, 0.25, 0.0}) {
      for (double omega : {0.01, 0.0025, 0.000625}) {
        const double w = omega * scale;
        const std::string sigma2 = fmt(theta) + "*one+" + fmt(1.0 - theta) + "*x2";
        list.push_back(scenario("theta=" + fmt(theta), "omega=" + fmt(w), n, localvol("0", sigma2),
                                {{"kind", "gaussian"}, {"omega", w}}, "naive",
                                {{"pipeline", "linear"}, {"basis", "one"}}));
      }
    }
  } else if (preset == "table2") {
    set("Level of the noise-free bootstrap test for theta x^2 under noise", "omega");
    for (double omega : {0.001, 0.002, 0.004, 0.005, 0.01}) {
      for (std::size_t n : {256u, 1024u}) {
        list.push_back(scenario("omega=" + fmt(omega), "n=" + std::to_string(n), n, localvol("0.1*x", "x2"),
                                {{"kind", "gaussian"}, {"omega", omega}}, "bootstrap",
                                {{"pipeline", "noisefree"}, {"basis", "x2"}}));
      }
    }
  } else if (preset == "table3") {
    set("Level of the asymptotic homoscedasticity test", "n");
    std::vector<std::size_t> ns{256, 1024, 4096};
    if (paper_scale) ns.push_back(16384);
    for (std::size_t n : ns) {
      list.push_back(scenario("n=" + std::to_string(n), "", n, localvol("0.1*x", "one"), n_omega2, "asymptotic",
                              {{"pipeline", "linear"}, {"basis", "one"}}));
    }
  } else if (preset == "table4") {
    set("Level of the bootstrap test based on N_t", "n");
    for (std::size_t n : {256u, 1024u, 4096u}) {
      for (const char* basis : {"one", "x2"}) {
        list.push_back(scenario("n=" + std::to_string(n), std::string("sigma2=") + basis, n,
                                localvol("0.1*x", basis), n_omega2, "bootstrap",
                                {{"pipeline", "linear"}, {"basis", basis}}));
      }
    }
  } else if (preset == "table5") {
    set("Level of the bootstrap test based on M_t for sigma = theta |x|", "n");
    for (std::size_t n : {256u, 1024u}) {
      list.push_back(scenario("n=" + std::to_string(n), "sigma=absx", n, localvol("0.1*x", "x2"), n_omega2,
                              "bootstrap", {{"pipeline", "abs"}, {"basis", "absx"}}));
    }
  } else if (preset == "table6") {
    set("Power of the bootstrap test of sigma^2 = theta x^2", "n");
    for (std::size_t n : {256u, 1024u}) {
      const std::string row = "n=" + std::to_string(n);
      const nlohmann::json stat = {{"pipeline", "linear"}, {"basis", "x2"}};
      list.push_back(scenario(row, "alt=one", n, localvol("0.1*x", "one"), n_omega2, "bootstrap", stat));
      list.push_back(scenario(row, "alt=one_plus_absx", n, localvol("0.1*x", "one_plus_absx"), n_omega2,
                              "bootstrap", stat));
      list.push_back(scenario(row, "alt=heston", n, {{"kind", "heston"}, {"x0", 1.0}}, n_omega2, "bootstrap",
                              stat));
    }
  } else {
    throw ConfigError("unknown preset '" + preset + "'");
  }
  return list;
}

/// Command-line overrides; unset fields keep the file's (or preset's) value.
struct ConfigOverrides {
  std::optional<std::string> preset;
  std::optional<std::size_t> mc_runs;
  std::optional<std::size_t> bootstrap_replications;
  std::optional<std::uint64_t> master_seed;
  std::optional<bool> paper_scale;
  std::optional<std::string> output_path;
  std::optional<std::string> output_format;
};

inline ExperimentConfig config_from_json(const nlohmann::json& j, const ConfigOverrides& ov = {}) {
  static const std::vector<std::string> known{
      "preset", "title", "row_label", "scenarios", "mc_runs", "bootstrap", "alphas", "master_seed", "plan",
      "substeps", "workers", "paper_scale", "max_failure_fraction", "output", "based_on"};
  for (const auto& [key, value] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw ConfigError("unknown configuration field '" + key + "'");
    }
  }
  ExperimentConfig c;
  c.preset = ov.preset.value_or(detail::get_or<std::string>(j, "preset", "custom"));
  c.paper_scale = ov.paper_scale.value_or(detail::get_or(j, "paper_scale", false));
  if (c.paper_scale) {
    c.mc_runs = 1000;
    c.bootstrap_replications = 500;
  }
  c.mc_runs = detail::get_or(j, "mc_runs", c.mc_runs);
  if (j.contains("bootstrap")) {
    c.bootstrap_replications = detail::get_or(j.at("bootstrap"), "replications", c.bootstrap_replications);
  }
  c.alphas = detail::get_or(j, "alphas", c.alphas);
  c.master_seed = detail::get_or(j, "master_seed", c.master_seed);
  if (j.contains("plan")) {
    const auto& p = j.at("plan");
    c.kappa = detail::get_or(p, "kappa", c.kappa);
    c.rho = detail::get_or(p, "rho", c.rho);
    c.delta = detail::get_or(p, "delta", c.delta);
    c.finite_sample = detail::get_or(p, "finite_sample", c.finite_sample);
  }
  c.substeps = detail::get_or(j, "substeps", c.substeps);
  c.workers = detail::get_or(j, "workers", c.workers);
  c.max_failure_fraction = detail::get_or(j, "max_failure_fraction", c.max_failure_fraction);
  if (j.contains("output")) {
    c.output_path = detail::get_or<std::string>(j.at("output"), "path", "");
    c.output_format = detail::get_or<std::string>(j.at("output"), "format", c.output_format);
  }
  if (ov.mc_runs) c.mc_runs = *ov.mc_runs;
  if (ov.bootstrap_replications) c.bootstrap_replications = *ov.bootstrap_replications;
  if (ov.master_seed) c.master_seed = *ov.master_seed;
  if (ov.output_path) c.output_path = *ov.output_path;
  if (ov.output_format) c.output_format = *ov.output_format;

  nlohmann::json scenarios;
  if (c.preset == "custom") {
    scenarios = detail::require(j, "scenarios", "custom configuration");
    if (!scenarios.is_array() || scenarios.empty()) throw ConfigError("custom configuration needs scenarios");
    c.title = detail::get_or<std::string>(j, "title", "custom study");
    c.row_label = detail::get_or<std::string>(j, "row_label", "row");
    c.based_on = detail::get_or<std::string>(j, "based_on", "");
  } else {
    for (const char* key : {"scenarios", "title", "row_label"}) {
      if (j.contains(key)) {
        throw ConfigError(std::string("preset '") + c.preset + "' conflicts with custom field '" + key + "'");
      }
    }
    scenarios = preset_scenarios(c.preset, c.paper_scale, &c.title, &c.row_label);
    c.based_on = c.preset;
  }
  for (const auto& s : scenarios) c.scenarios.push_back(scenario_from_json(s));

  if (c.mc_runs < 1) throw ConfigError("mc_runs must be at least 1");
  if (c.bootstrap_replications < 1) throw ConfigError("bootstrap replications must be positive");
  if (c.alphas.empty()) throw ConfigError("at least one alpha is required");
  for (double a : c.alphas) {
    if (!(a > 0.0 && a < 1.0)) throw ConfigError("alphas must lie in (0, 1)");
  }
  if (c.substeps < 1) throw ConfigError("substeps must be positive");
  if (c.output_format != "json" && c.output_format != "csv" && c.output_format != "text") {
    throw ConfigError("output format must be json, csv or text");
  }
  return c;
}

inline nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open configuration file '" + path + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("configuration file '" + path + "' is not valid JSON: " + e.what());
  }
}

/// The configuration with presets expanded, as echoed into every table.
inline nlohmann::json config_to_json(const ExperimentConfig& c) {
  // The resolved form lists every scenario, so it reads back as a custom study.
  nlohmann::json j;
  j["preset"] = "custom";
  if (!c.based_on.empty()) j["based_on"] = c.based_on;
  j["title"] = c.title;
  j["row_label"] = c.row_label;
  j["mc_runs"] = c.mc_runs;
  j["bootstrap"] = {{"replications", c.bootstrap_replications}};
  j["alphas"] = c.alphas;
  j["master_seed"] = c.master_seed;
  j["plan"] = {{"kappa", c.kappa}, {"rho", c.rho}, {"delta", c.delta}, {"finite_sample", c.finite_sample}};
  j["substeps"] = c.substeps;
  j["paper_scale"] = c.paper_scale;
  j["max_failure_fraction"] = c.max_failure_fraction;
  nlohmann::json list = nlohmann::json::array();
  for (const auto& s : c.scenarios) list.push_back(s.source);
  j["scenarios"] = list;
  return j;
}

}  // namespace volcheck
