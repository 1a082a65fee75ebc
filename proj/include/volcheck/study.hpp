#pragma once

// Monte Carlo studies over a list of scenarios and their report tables
// (rejection frequency and standard error per scenario and alpha).

#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "volcheck/config.hpp"

namespace volcheck {

struct ReportCell {
  std::string row;
  std::string column;
  double alpha = 0.0;
  double frequency = 0.0;
  double std_error = 0.0;
  std::size_t runs = 0;  // successful replications
  std::size_t failures = 0;

  bool operator==(const ReportCell&) const = default;
};

struct ReportTable {
  std::string title;
  std::string row_label = "row";
  std::vector<std::string> rows;  // first-appearance order
  std::vector<std::string> columns;
  std::vector<double> alphas;
  std::vector<ReportCell> cells;
  bool aborted = false;
  std::string abort_reason;
  nlohmann::json config = nlohmann::json::object();
  nlohmann::json runtime = nlohmann::json::object();  // timings; not part of the data

  bool operator==(const ReportTable& o) const {
    return title == o.title && row_label == o.row_label && rows == o.rows && columns == o.columns &&
           alphas == o.alphas && cells == o.cells && aborted == o.aborted && abort_reason == o.abort_reason &&
           config == o.config && runtime == o.runtime;
  }

  void add(const ReportCell& cell) {
    if (std::find(rows.begin(), rows.end(), cell.row) == rows.end()) rows.push_back(cell.row);
    if (std::find(columns.begin(), columns.end(), cell.column) == columns.end()) columns.push_back(cell.column);
    if (std::find(alphas.begin(), alphas.end(), cell.alpha) == alphas.end()) alphas.push_back(cell.alpha);
    cells.push_back(cell);
  }

  const ReportCell* find(const std::string& row, const std::string& column, double alpha) const {
    for (const auto& c : cells) {
      if (c.row == row && c.column == column && c.alpha == alpha) return &c;
    }
    return nullptr;
  }
};

inline double binomial_se(double p, std::size_t runs) {
  return runs > 0 ? std::sqrt(p * (1.0 - p) / static_cast<double>(runs)) : 0.0;
}

/// Decisions of one replication at every alpha, or nothing if it failed.
struct ReplicationOutcome {
  bool ok = false;
  std::vector<bool> reject;
  std::string error;
};

inline ObservationSeries simulate_scenario(const Scenario& s, std::size_t substeps, std::uint64_t seed) {
  const LatentPath path =
      simulate(s.model, s.n, substeps, derive_seed(seed, SeedDomain::Path, 0), NegativeVariancePolicy::Error);
  return add_noise(path, s.noise, derive_seed(seed, SeedDomain::Noise, 0));
}

inline std::vector<bool> decide(const Scenario& s, const ObservationSeries& series, const Calibration* cal,
                                const std::vector<double>& alphas, std::size_t replications,
                                std::size_t substeps, std::uint64_t seed) {
  std::vector<bool> out(alphas.size());
  switch (s.rule) {
    case DecisionRule::Naive: {
      const NaiveStatistics stats = naive_T_n(series);
      for (std::size_t a = 0; a < alphas.size(); ++a) out[a] = stats.T_n > kolmogorov_quantile(alphas[a]);
      break;
    }
    case DecisionRule::Asymptotic: {
      const double ks = bridge_statistic(series, *cal).ks;
      for (std::size_t a = 0; a < alphas.size(); ++a) out[a] = ks > kolmogorov_quantile(alphas[a]);
      break;
    }
    case DecisionRule::Bootstrap: {
      BootstrapConfig bc;
      bc.replications = replications;
      bc.master_seed = derive_seed(seed, SeedDomain::BootstrapPath, 0);
      bc.statistic = s.statistic;
      bc.substeps = substeps;
      bc.workers = 1;
      const BootstrapOutcome outcome = bootstrap_distribution(series, bc, *cal);
      for (std::size_t a = 0; a < alphas.size(); ++a) out[a] = outcome.reject(alphas[a]);
      break;
    }
  }
  return out;
}

/// Progress lines go to `progress` (stderr by default); pass nullptr to silence.
inline ReportTable run_mc_study(const ExperimentConfig& cfg, std::ostream* progress = &std::cerr) {
  if (cfg.mc_runs < 1) throw ConfigError("mc_runs must be at least 1");
  ReportTable table;
  table.title = cfg.title;
  table.row_label = cfg.row_label;
  table.config = config_to_json(cfg);
  const auto started = std::chrono::steady_clock::now();
  const std::size_t workers = cfg.resolved_workers();
  nlohmann::json timings = nlohmann::json::array();

  for (std::size_t si = 0; si < cfg.scenarios.size(); ++si) {
    const Scenario& s = cfg.scenarios[si];
    const auto t0 = std::chrono::steady_clock::now();
    std::optional<Calibration> cal;
    if (s.rule != DecisionRule::Naive) {
      cal = make_calibration(s.n, cfg.kappa, cfg.rho, cfg.delta, cfg.finite_sample);
    }
    std::vector<ReplicationOutcome> outcomes(cfg.mc_runs);
    parallel_for(cfg.mc_runs, workers, [&](std::size_t run) {
      const std::uint64_t seed =
          derive_seed(cfg.master_seed, SeedDomain::Replication, (static_cast<std::uint64_t>(si) << 32) | run);
      ReplicationOutcome& o = outcomes[run];
      try {
        const ObservationSeries series = simulate_scenario(s, cfg.substeps, seed);
        o.reject = decide(s, series, cal ? &*cal : nullptr, cfg.alphas, cfg.bootstrap_replications,
                          cfg.substeps, seed);
        o.ok = true;
      } catch (const InvalidArgument& e) {
        o.error = e.what();
      } catch (const NumericError& e) {
        o.error = e.what();
      }
    });

    std::size_t ok = 0;
    std::vector<std::size_t> rejections(cfg.alphas.size(), 0);
    std::string first_error;
    for (const auto& o : outcomes) {
      if (!o.ok) {
        if (first_error.empty()) first_error = o.error;
        continue;
      }
      ++ok;
      for (std::size_t a = 0; a < cfg.alphas.size(); ++a) rejections[a] += o.reject[a] ? 1 : 0;
    }
    const std::size_t failed = cfg.mc_runs - ok;
    for (std::size_t a = 0; a < cfg.alphas.size(); ++a) {
      ReportCell cell;
      cell.row = s.row;
      cell.column = s.column;
      cell.alpha = cfg.alphas[a];
      cell.runs = ok;
      cell.failures = failed;
      cell.frequency = ok > 0 ? static_cast<double>(rejections[a]) / static_cast<double>(ok) : 0.0;
      cell.std_error = binomial_se(cell.frequency, ok);
      table.add(cell);
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    timings.push_back({{"row", s.row}, {"column", s.column}, {"seconds", secs}});
    if (progress) {
      *progress << "[" << si + 1 << "/" << cfg.scenarios.size() << "] " << s.row
                << (s.column.empty() ? "" : " " + s.column) << ": " << ok << " runs, " << failed << " failed, "
                << std::fixed << std::setprecision(1) << secs << "s" << std::defaultfloat << std::endl;
    }
    if (static_cast<double>(failed) > cfg.max_failure_fraction * static_cast<double>(cfg.mc_runs)) {
      table.aborted = true;
      table.abort_reason = std::to_string(failed) + " of " + std::to_string(cfg.mc_runs) +
                           " replications failed in scenario '" + s.row + " " + s.column + "': " + first_error;
      break;
    }
  }
  table.runtime["seconds"] =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  table.runtime["workers"] = workers;
  table.runtime["scenarios"] = timings;
  return table;
}

// ---------------------------------------------------------------------------
// Serialization

inline nlohmann::json table_to_json(const ReportTable& t, bool include_runtime = true) {
  nlohmann::json j;
  j["title"] = t.title;
  j["row_label"] = t.row_label;
  j["rows"] = t.rows;
  j["columns"] = t.columns;
  j["alphas"] = t.alphas;
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& c : t.cells) {
    cells.push_back({{"row", c.row}, {"column", c.column}, {"alpha", c.alpha}, {"frequency", c.frequency},
                     {"std_error", c.std_error}, {"runs", c.runs}, {"failures", c.failures}});
  }
  j["cells"] = cells;
  j["aborted"] = t.aborted;
  j["abort_reason"] = t.abort_reason;
  j["config"] = t.config;
  if (include_runtime) j["runtime"] = t.runtime;
  return j;
}

inline ReportTable table_from_json(const nlohmann::json& j) {
  ReportTable t;
  t.title = j.at("title").get<std::string>();
  t.row_label = j.at("row_label").get<std::string>();
  t.rows = j.at("rows").get<std::vector<std::string>>();
  t.columns = j.at("columns").get<std::vector<std::string>>();
  t.alphas = j.at("alphas").get<std::vector<double>>();
  for (const auto& c : j.at("cells")) {
    t.cells.push_back({c.at("row").get<std::string>(), c.at("column").get<std::string>(),
                       c.at("alpha").get<double>(), c.at("frequency").get<double>(),
                       c.at("std_error").get<double>(), c.at("runs").get<std::size_t>(),
                       c.at("failures").get<std::size_t>()});
  }
  t.aborted = j.at("aborted").get<bool>();
  t.abort_reason = j.at("abort_reason").get<std::string>();
  t.config = j.at("config");
  t.runtime = j.contains("runtime") ? j.at("runtime") : nlohmann::json::object();
  return t;
}

namespace detail {

inline std::string fixed3(double v) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(3) << v;
  return os.str();
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace detail

inline void write_csv(const ReportTable& t, std::ostream& os) {
  os << "row,column,alpha,frequency,std_error,runs,failures\n";
  for (const auto& c : t.cells) {
    os << detail::csv_field(c.row) << ',' << detail::csv_field(c.column) << ',' << c.alpha << ','
       << detail::fixed3(c.frequency) << ',' << detail::fixed3(c.std_error) << ',' << c.runs << ','
       << c.failures << '\n';
  }
}

/// Wide layout: one line per row key, column groups side by side with one
/// sub-column per alpha.
inline void write_text(const ReportTable& t, std::ostream& os) {
  if (!t.title.empty()) os << t.title << '\n';
  const std::size_t label_width = [&] {
    std::size_t w = t.row_label.size() + 8;
    for (const auto& r : t.rows) w = std::max(w, r.size() + 2);
    return w;
  }();
  const std::size_t cell_width = 8;
  std::ostringstream head1, head2;
  head1 << std::left << std::setw(static_cast<int>(label_width)) << "";
  head2 << std::left << std::setw(static_cast<int>(label_width)) << (t.row_label + " / alpha");
  for (const auto& col : t.columns) {
    const std::size_t group = cell_width * t.alphas.size();
    head1 << std::left << std::setw(static_cast<int>(group)) << col.substr(0, group - 1);
    for (double a : t.alphas) {
      std::ostringstream as;
      as << a;
      head2 << std::right << std::setw(static_cast<int>(cell_width)) << as.str();
    }
  }
  if (!(t.columns.size() == 1 && t.columns.front().empty())) os << head1.str() << '\n';
  os << head2.str() << '\n';
  for (const auto& row : t.rows) {
    os << std::left << std::setw(static_cast<int>(label_width)) << row;
    for (const auto& col : t.columns) {
      for (double a : t.alphas) {
        const ReportCell* c = t.find(row, col, a);
        os << std::right << std::setw(static_cast<int>(cell_width)) << (c ? detail::fixed3(c->frequency) : "-");
      }
    }
    os << '\n';
  }
  if (!t.cells.empty()) {
    double max_se = 0.0;
    std::size_t min_runs = t.cells.front().runs;
    for (const auto& c : t.cells) {
      max_se = std::max(max_se, c.std_error);
      min_runs = std::min(min_runs, c.runs);
    }
    os << "max standard error " << detail::fixed3(max_se) << ", at least " << min_runs << " runs per cell\n";
  }
  if (t.aborted) os << "ABORTED: " << t.abort_reason << '\n';
}

inline void emit_table(const ReportTable& t, const std::string& format, std::ostream& os) {
  if (format == "json") {
    os << table_to_json(t).dump(2) << '\n';
  } else if (format == "csv") {
    write_csv(t, os);
  } else if (format == "text") {
    write_text(t, os);
  } else {
    throw ConfigError("output format must be json, csv or text");
  }
}

inline void emit_table(const ReportTable& t, const std::string& format, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  emit_table(t, format, out);
  if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

// ---------------------------------------------------------------------------
// Single test

/// Configuration of `volcheck test`: data from a file or one simulated draw,
/// one statistic and one decision rule.
struct SingleTestConfig {
  std::optional<std::string> data_file;
  std::optional<Scenario> simulated;  // used when no file is given
  std::uint64_t data_seed = 1;
  DecisionRule rule = DecisionRule::Bootstrap;
  StatisticSpec statistic;
  double alpha = 0.05;
  std::size_t replications = 500;
  std::uint64_t master_seed = 20110301;
  double kappa = 0.5, rho = 0.5, delta = 0.25;
  bool finite_sample = true;
  std::size_t substeps = 10;
  std::size_t workers = 0;
  bool verbose = false;
};

inline SingleTestConfig single_test_from_json(const nlohmann::json& j) {
  SingleTestConfig c;
  const auto& data = detail::require(j, "data", "test configuration");
  if (data.contains("file")) {
    c.data_file = data.at("file").get<std::string>();
  } else if (data.contains("simulate")) {
    nlohmann::json sim = data.at("simulate");
    sim["rule"] = "naive";
    sim["statistic"] = {{"pipeline", "linear"}, {"basis", "one"}};
    c.simulated = scenario_from_json(sim);
    c.data_seed = detail::get_or<std::uint64_t>(data.at("simulate"), "seed", c.data_seed);
  } else {
    throw ConfigError("data needs either 'file' or 'simulate'");
  }
  const auto& test = detail::require(j, "test", "test configuration");
  c.rule = rule_from_name(detail::get_or<std::string>(test, "rule", "bootstrap"));
  if (c.rule != DecisionRule::Naive || test.contains("basis") || test.contains("family")) {
    c.statistic = statistic_from_json(test);
  }
  c.alpha = detail::get_or(test, "alpha", c.alpha);
  if (j.contains("bootstrap")) {
    c.replications = detail::get_or(j.at("bootstrap"), "replications", c.replications);
    c.master_seed = detail::get_or(j.at("bootstrap"), "seed", c.master_seed);
    c.verbose = detail::get_or(j.at("bootstrap"), "verbose", c.verbose);
  }
  if (j.contains("plan")) {
    const auto& p = j.at("plan");
    c.kappa = detail::get_or(p, "kappa", c.kappa);
    c.rho = detail::get_or(p, "rho", c.rho);
    c.delta = detail::get_or(p, "delta", c.delta);
    c.finite_sample = detail::get_or(p, "finite_sample", c.finite_sample);
  }
  c.substeps = detail::get_or(j, "substeps", c.substeps);
  c.workers = detail::get_or(j, "workers", c.workers);
  return c;
}

inline TestReport run_single_test(const SingleTestConfig& c) {
  if (!(c.alpha > 0.0 && c.alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
  ObservationSeries series;
  nlohmann::json source;
  if (c.data_file) {
    series = load_observations(*c.data_file);
    source = {{"file", *c.data_file}};
  } else if (c.simulated) {
    series = simulate_scenario(*c.simulated, c.substeps, c.data_seed);
    source = {{"simulate", c.simulated->source}, {"seed", c.data_seed}};
  } else {
    throw ConfigError("no data source configured");
  }

  TestReport r;
  switch (c.rule) {
    case DecisionRule::Naive:
      r = naive_decision(naive_T_n(series), c.alpha);
      break;
    case DecisionRule::Asymptotic: {
      const bool homoscedastic = c.statistic.pipeline == Pipeline::Linear &&
                                 c.statistic.hypothesis.dimension() == 1 &&
                                 c.statistic.hypothesis.basis[0] == StateFunction::constant(1.0);
      if (!homoscedastic) {
        throw ConfigError("asymptotic critical values exist only for the linear test with basis {one}");
      }
      r = asymptotic_homoscedasticity_test(
          series, make_calibration(series.n, c.kappa, c.rho, c.delta, c.finite_sample), c.alpha);
      break;
    }
    case DecisionRule::Bootstrap: {
      if (c.replications < 50) throw ConfigError("bootstrap decisions need at least 50 replications");
      BootstrapConfig bc;
      bc.replications = c.replications;
      bc.master_seed = c.master_seed;
      bc.statistic = c.statistic;
      bc.alpha = c.alpha;
      bc.substeps = c.substeps;
      bc.workers = c.workers > 0 ? c.workers : default_workers();
      bc.verbose = c.verbose;
      if (c.statistic.pipeline == Pipeline::NoiseFree) {
        r = noisefree_bootstrap_test(series, c.statistic.hypothesis, c.alpha, bc);
      } else {
        r = bootstrap_test(series, bc, make_calibration(series.n, c.kappa, c.rho, c.delta, c.finite_sample));
      }
      break;
    }
  }
  r.metadata["data"] = source;
  r.metadata["rule"] = rule_name(c.rule);
  return r;
}

}  // namespace volcheck
