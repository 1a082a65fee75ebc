#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "volcheck/volcheck.hpp"

using namespace volcheck;
using nlohmann::json;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 1;

void write_output(const std::string& text, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << text;
}

std::string report_text(const TestReport& r) {
  std::ostringstream os;
  os << std::setprecision(6);
  os << "method          " << method_name(r.method) << '\n'
     << "functional      " << functional_name(r.functional) << '\n'
     << "statistic       " << r.statistic << '\n'
     << "critical value  " << r.critical_value << '\n'
     << "alpha           " << r.alpha << '\n'
     << "p-value         " << (r.p_value ? std::to_string(*r.p_value) : std::string("n/a")) << '\n'
     << "decision        " << (r.reject ? "reject" : "accept") << '\n';
  for (const char* key : {"hypothesis", "theta_hat", "omega2_hat", "failed_replications", "m_n", "l_n"}) {
    if (r.metadata.contains(key)) os << std::left << std::setw(16) << key << r.metadata[key].dump() << '\n';
  }
  return os.str();
}

struct TestOptions {
  std::string config;
  std::string data;
  std::string rule;
  std::string pipeline;
  std::string basis;
  std::string family;
  std::string functional;
  std::optional<double> alpha;
  std::optional<std::size_t> replications;
  std::optional<std::uint64_t> seed;
  bool verbose = false;
  std::string format = "json";
  std::string output;
};

int run_test(const TestOptions& o) {
  json j = o.config.empty() ? json::object() : read_json_file(o.config);
  if (!o.data.empty()) j["data"] = {{"file", o.data}};
  json& test = j["test"];
  if (test.is_null()) test = json::object();
  if (!o.rule.empty()) test["rule"] = o.rule;
  if (!o.pipeline.empty()) test["pipeline"] = o.pipeline;
  if (!o.basis.empty()) test["basis"] = o.basis;
  if (!o.family.empty()) test["family"] = o.family;
  if (!o.functional.empty()) test["functional"] = o.functional;
  if (o.alpha) test["alpha"] = *o.alpha;
  if (o.replications) j["bootstrap"]["replications"] = *o.replications;
  if (o.seed) j["bootstrap"]["seed"] = *o.seed;
  if (o.verbose) j["bootstrap"]["verbose"] = true;
  if (!test.contains("basis") && !test.contains("family") && test.value("rule", "bootstrap") != "naive") {
    test["basis"] = "one";
  }

  const TestReport r = run_single_test(single_test_from_json(j));
  if (o.format == "json") {
    write_output(r.to_json().dump(2) + "\n", o.output);
  } else if (o.format == "text") {
    write_output(report_text(r), o.output);
  } else {
    throw ConfigError("test output format must be json or text");
  }
  return 0;
}

struct StudyOptions {
  std::string config;
  std::optional<std::string> preset;
  std::optional<std::size_t> mc_runs;
  std::optional<std::size_t> replications;
  std::optional<std::uint64_t> seed;
  bool paper_scale = false;
  std::optional<std::string> format;
  std::optional<std::string> output;
  bool quiet = false;
  bool dry_run = false;
};

int run_study(const StudyOptions& o) {
  json j = o.config.empty() ? json::object() : read_json_file(o.config);
  ConfigOverrides ov;
  ov.preset = o.preset;
  ov.mc_runs = o.mc_runs;
  ov.bootstrap_replications = o.replications;
  ov.master_seed = o.seed;
  if (o.paper_scale) ov.paper_scale = true;
  ov.output_format = o.format;
  ov.output_path = o.output;
  if (o.config.empty() && !o.preset) throw ConfigError("study needs --config or --preset");

  const ExperimentConfig cfg = config_from_json(j, ov);
  if (o.dry_run) {
    std::cout << config_to_json(cfg).dump(2) << '\n';
    return 0;
  }
  const ReportTable table = run_mc_study(cfg, o.quiet ? nullptr : &std::cerr);
  if (cfg.output_path.empty() || cfg.output_path == "-") {
    emit_table(table, cfg.output_format, std::cout);
  } else {
    emit_table(table, cfg.output_format, cfg.output_path);
  }
  return table.aborted ? kExitRuntime : 0;
}

int run_constants(std::size_t n, std::optional<std::size_t> m, double kappa, double rho, double delta,
                  bool asymptotic_only, const std::string& format) {
  json j;
  const auto& k = *min_hat_constants();
  j["weight_function"] = "min_hat";
  j["asymptotic"] = {{"psi1", k.asymptotic.psi1}, {"psi2", k.asymptotic.psi2}, {"Phi11", k.asymptotic.Phi11},
                     {"Phi12", k.asymptotic.Phi12}, {"Phi22", k.asymptotic.Phi22}, {"Xi", k.Xi}, {"mu1", k.mu1}};
  if (!asymptotic_only) {
    if (m) {
      const auto c = finite_sample_constants(build_kernel_table(WeightFunction::min_hat(), *m));
      j["window"] = {{"m", *m}, {"psi1", c.psi1}, {"psi2", c.psi2}, {"Phi11", c.Phi11},
                     {"Phi12", c.Phi12}, {"Phi22", c.Phi22}};
    } else {
      j["plan"] = calibration_metadata(make_calibration(n, kappa, rho, delta, true));
    }
  }
  if (format == "json") {
    std::cout << j.dump(2) << '\n';
    return 0;
  }
  if (format != "text") throw ConfigError("constants output format must be json or text");
  std::cout << std::setprecision(10);
  auto block = [](const std::string& title, const json& b) {
    std::cout << title << '\n';
    for (const auto& [key, value] : b.items()) {
      std::cout << "  " << std::left << std::setw(26) << key << value.dump() << '\n';
    }
  };
  block("asymptotic (min_hat)", j["asymptotic"]);
  if (j.contains("window")) block("finite window", j["window"]);
  if (j.contains("plan")) block("plan for n = " + std::to_string(n), j["plan"]);
  return 0;
}

int run_quantile(const std::vector<double>& alphas, const std::vector<double>& cdf_points,
                 const std::string& format) {
  json j = json::array();
  for (double a : alphas) j.push_back({{"alpha", a}, {"quantile", kolmogorov_quantile(a)}});
  for (double x : cdf_points) j.push_back({{"x", x}, {"cdf", kolmogorov_cdf(x)}});
  if (format == "json") {
    std::cout << j.dump(2) << '\n';
  } else if (format == "csv") {
    for (double a : alphas) std::cout << a << ',' << std::setprecision(10) << kolmogorov_quantile(a) << '\n';
    for (double x : cdf_points) std::cout << x << ',' << std::setprecision(10) << kolmogorov_cdf(x) << '\n';
  } else if (format == "text") {
    std::cout << std::setprecision(7) << std::fixed;
    for (double a : alphas) std::cout << "alpha " << a << "  quantile " << kolmogorov_quantile(a) << '\n';
    for (double x : cdf_points) std::cout << "x " << x << "  cdf " << kolmogorov_cdf(x) << '\n';
  } else {
    throw ConfigError("quantile output format must be json, csv or text");
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"volcheck: goodness-of-fit tests for volatility under microstructure noise"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "volcheck 1.0.0");

  TestOptions topt;
  auto* test = app.add_subcommand("test", "test one observation series");
  test->add_option("-c,--config", topt.config, "JSON test configuration")->check(CLI::ExistingFile);
  test->add_option("-d,--data", topt.data, "CSV file with observations (overrides data in the config)");
  test->add_option("--rule", topt.rule, "bootstrap, asymptotic or naive");
  test->add_option("--pipeline", topt.pipeline, "linear, abs, nonlinear or noisefree");
  test->add_option("--basis", topt.basis, "comma-separated basis, e.g. one,x2");
  test->add_option("--family", topt.family, "nonlinear family: cev, exp_affine or linear:<basis>");
  test->add_option("--functional", topt.functional, "KS or CvM");
  test->add_option("--alpha", topt.alpha, "significance level");
  test->add_option("--replications", topt.replications, "bootstrap replications");
  test->add_option("--seed", topt.seed, "bootstrap master seed");
  test->add_flag("--verbose", topt.verbose, "include the bootstrap sample in the report");
  test->add_option("--format", topt.format, "json or text")->capture_default_str();
  test->add_option("-o,--output", topt.output, "output file (stdout by default)");

  StudyOptions sopt;
  auto* study = app.add_subcommand("study", "run a Monte Carlo study");
  study->add_option("-c,--config", sopt.config, "JSON experiment configuration")->check(CLI::ExistingFile);
  study->add_option("--preset", sopt.preset, "table1 ... table6");
  study->add_option("--mc-runs", sopt.mc_runs, "Monte Carlo runs per scenario");
  study->add_option("--replications", sopt.replications, "bootstrap replications");
  study->add_option("--seed", sopt.seed, "master seed");
  study->add_flag("--paper-scale", sopt.paper_scale, "1000 runs, 500 replications, n up to 16384");
  study->add_option("--format", sopt.format, "json, csv or text");
  study->add_option("-o,--output", sopt.output, "output file (stdout by default)");
  study->add_flag("-q,--quiet", sopt.quiet, "no progress lines");
  study->add_flag("--dry-run", sopt.dry_run, "print the resolved configuration and exit");

  std::size_t cn = 1024;
  std::optional<std::size_t> cm;
  double kappa = 0.5, rho = 0.5, delta = 0.25;
  bool asymptotic_only = false;
  std::string cformat = "text";
  auto* constants = app.add_subcommand("constants", "print kernel constants and window lengths");
  constants->add_option("-n,--n", cn, "sample size")->capture_default_str();
  constants->add_option("-m,--window", cm, "finite-sample constants for this window length");
  constants->add_option("--kappa", kappa)->capture_default_str();
  constants->add_option("--rho", rho)->capture_default_str();
  constants->add_option("--delta", delta)->capture_default_str();
  constants->add_flag("--asymptotic", asymptotic_only, "only the limiting constants");
  constants->add_option("--format", cformat, "json or text")->capture_default_str();

  std::vector<double> qalphas;
  std::vector<double> qcdf;
  std::string qformat = "text";
  auto* quantile = app.add_subcommand("quantile", "Kolmogorov distribution quantiles");
  quantile->add_option("alphas", qalphas, "upper-tail probabilities");
  quantile->add_option("--cdf", qcdf, "evaluate the distribution function at these points");
  quantile->add_option("--format", qformat, "json, csv or text")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*test) return run_test(topt);
    if (*study) return run_study(sopt);
    if (*constants) return run_constants(cn, cm, kappa, rho, delta, asymptotic_only, cformat);
    if (*quantile) {
      if (qalphas.empty() && qcdf.empty()) qalphas = {0.025, 0.05, 0.1};
      return run_quantile(qalphas, qcdf, qformat);
    }
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const InvalidArgument& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return 0;
}
