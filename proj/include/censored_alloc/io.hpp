#pragma once

// File formats and experiment orchestration behind the CLI.
//
// Instances and configs are versioned JSON; results are CSV with floats at
// 12 significant digits, so identical (config, seed) pairs produce
// byte-identical files.

#include <cstdint>
#include <string>
#include <vector>

#include "censored_alloc/calibration.hpp"
#include "censored_alloc/simulator.hpp"

#include "json.hpp"

namespace censored_alloc {

nlohmann::json instance_to_json(const InstanceSpec& instance);
InstanceSpec instance_from_json(const nlohmann::json& j);
InstanceSpec load_instance(const std::string& path);
void save_instance(const InstanceSpec& instance, const std::string& path);

struct ExperimentConfig {
  InstanceSpec instance;
  std::vector<PolicyConfig> policies;
  std::size_t T = 0;  // 0: instance horizon
  std::size_t replications = 1;
  std::uint64_t seed = 1;
  double delta = 0.0;  // default MG-UCB-Delta step when a policy omits it
  std::string output_dir = ".";
  bool emit_allocations = false;
  bool realized_regret = false;
  double exploration_scale = 1.0;
  unsigned threads = 1;

  void validate() const;
};

nlohmann::json config_to_json(const ExperimentConfig& config);
ExperimentConfig config_from_json(const nlohmann::json& j,
                                  const std::string& base_dir);
ExperimentConfig load_config(const std::string& path);

// Formats a double at 12 significant digits (CSV cell convention).
std::string csv_double(double v);

struct ExperimentOutcome {
  std::vector<std::string> files_written;
  // one row per failed policy: (policy name, error message)
  std::vector<std::pair<std::string, std::string>> errors;
};

// Runs every configured policy, writes regret_trace.csv and summary.csv
// (plus allocations.csv when asked) under config.output_dir. A numerical
// failure aborts that policy, records an error row, and the others continue.
ExperimentOutcome run_experiment(const ExperimentConfig& config);

// CSV log ingestion for `calibrate`; the header must match the mode schema
// exactly and diagnostics name the first offending column or row.
std::vector<InteractionRecord> read_interaction_csv(const std::string& path,
                                                    CalibrationMode mode);
void write_fit_report(const CalibrationResult& result,
                      const std::string& path);

}  // namespace censored_alloc
