// censored-alloc: budget-allocation bandit simulator under censored
// threshold feedback.
//
//   run                   simulate configured policies, emit regret CSVs
//   calibrate             build an instance JSON from an interaction log
//   oracle                print the clairvoyant allocation for an instance
//   lower-bound-instance  emit the hard-instance family for (K, T)

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "censored_alloc/io.hpp"

namespace {

namespace fs = std::filesystem;
using namespace censored_alloc;

unsigned thread_override(unsigned from_flag) {
  // CENSORED_ALLOC_THREADS overrides --threads when set
  const char* env = std::getenv("CENSORED_ALLOC_THREADS");
  if (env == nullptr || *env == '\0') return from_flag;
  const long v = std::strtol(env, nullptr, 10);
  return v > 0 ? static_cast<unsigned>(v) : from_flag;
}

int cmd_run(const std::string& config_path, std::uint64_t seed_override,
            bool has_seed, const std::string& out_override, unsigned threads,
            bool has_threads) {
  ExperimentConfig config = load_config(config_path);
  if (has_seed) config.seed = seed_override;
  if (!out_override.empty()) config.output_dir = out_override;
  if (has_threads) config.threads = threads;
  config.threads = thread_override(config.threads);

  const ExperimentOutcome outcome = run_experiment(config);
  for (const std::string& f : outcome.files_written) {
    std::cout << "wrote " << f << "\n";
  }
  for (const auto& [policy, error] : outcome.errors) {
    std::cerr << "policy " << policy << " aborted: " << error << "\n";
  }
  return outcome.errors.empty() ? 0 : 1;
}

int cmd_calibrate(const std::string& input_csv, const std::string& mode_name,
                  const std::string& out_instance, std::size_t arms) {
  const CalibrationMode mode =
      mode_name == "ednet" ? CalibrationMode::EdNet : CalibrationMode::Criteo;
  const std::vector<InteractionRecord> records =
      read_interaction_csv(input_csv, mode);
  const CalibrationResult result = build_instance(records, arms, mode);

  save_instance(result.instance, out_instance);
  const fs::path report_path =
      fs::path(out_instance).parent_path() /
      (fs::path(out_instance).stem().string() + "_fit_report.csv");
  write_fit_report(result, report_path.string());

  std::cout << "wrote " << out_instance << "\n";
  std::cout << "wrote " << report_path.string() << "\n";
  std::cout << "selected " << result.selected_arm_ids.size()
            << " arms, shared shape k = " << csv_double(result.shared_k)
            << "\n";
  for (const std::string& w : result.warnings) {
    std::cerr << "warning: " << w << "\n";
  }
  return 0;
}

int cmd_oracle(const std::string& instance_path, double budget, bool as_json) {
  const InstanceSpec instance = load_instance(instance_path);
  const double B = budget > 0.0 ? budget : instance.budget.cap();
  const Allocation oracle = oracle_allocation(instance, B);

  double objective = 0.0;
  for (std::size_t i = 0; i < instance.K; ++i) {
    objective += instance.p[i] *
                 cdf(instance.family, oracle.x[i], instance.lambda[i]);
  }
  if (as_json) {
    nlohmann::json j;
    j["budget"] = B;
    j["x"] = oracle.x;
    j["objective"] = objective;
    std::cout << j.dump(2) << "\n";
  } else {
    std::printf("budget %.6f\n", B);
    for (std::size_t i = 0; i < instance.K; ++i) {
      std::printf("x[%zu] = %.6f\n", i + 1, oracle.x[i]);
    }
    std::printf("objective = %.6f\n", objective);
  }
  return 0;
}

int cmd_lower_bound(std::size_t K, std::size_t T, const std::string& out_dir) {
  const LowerBoundFamily family = lower_bound_instance(K, T);
  fs::create_directories(out_dir);
  for (std::size_t i = 0; i < family.instances.size(); ++i) {
    const std::string name =
        i == 0 ? "base.json" : "perturbed_" + std::to_string(i) + ".json";
    save_instance(family.instances[i], (fs::path(out_dir) / name).string());
  }
  std::printf("epsilon = %.12g\n", family.epsilon);
  std::printf("lambda  = %.12g\n", family.lambda_base);
  if (!family.feasible) {
    std::cerr << "warning: epsilon > 1/8, the construction needs epsilon <= "
                 "lambda and is flagged infeasible\n";
  }
  std::cout << "wrote " << family.instances.size() << " instances under "
            << out_dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"budget-allocation bandit simulator under censored feedback"};
  app.require_subcommand(1);

  std::string config_path, out_dir, input_csv, mode_name = "ednet";
  std::string instance_path;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  double budget = 0.0;
  bool as_json = false;
  std::size_t arms = 20, lb_K = 4, lb_T = 10000;

  CLI::App* run_cmd = app.add_subcommand("run", "simulate configured policies");
  run_cmd->add_option("--config", config_path, "experiment config JSON")
      ->required();
  CLI::Option* seed_opt =
      run_cmd->add_option("--seed", seed, "override the config seed");
  run_cmd->add_option("--out", out_dir, "override the output directory");
  CLI::Option* threads_opt =
      run_cmd->add_option("--threads", threads, "replication worker threads");

  CLI::App* cal_cmd =
      app.add_subcommand("calibrate", "fit an instance from a log");
  cal_cmd->add_option("--input", input_csv, "interaction log CSV")->required();
  cal_cmd->add_option("--mode", mode_name, "ednet or criteo")
      ->check(CLI::IsMember({"ednet", "criteo"}));
  std::string out_instance = "instance.json";
  cal_cmd->add_option("--out", out_instance, "output instance JSON path");
  cal_cmd->add_option("--arms", arms, "number of arms to select");

  CLI::App* oracle_cmd =
      app.add_subcommand("oracle", "clairvoyant allocation for an instance");
  oracle_cmd->add_option("--instance", instance_path, "instance JSON")
      ->required();
  oracle_cmd->add_option("--budget", budget,
                         "round budget (default: the instance cap)");
  oracle_cmd->add_flag("--json", as_json, "machine-readable output");

  CLI::App* lb_cmd = app.add_subcommand("lower-bound-instance",
                                        "emit the hard-instance family");
  lb_cmd->add_option("--K", lb_K, "number of arms")->required();
  lb_cmd->add_option("--T", lb_T, "horizon")->required();
  lb_cmd->add_option("--out", out_dir, "output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_cmd->parsed()) {
      return cmd_run(config_path, seed, seed_opt->count() > 0, out_dir,
                     threads, threads_opt->count() > 0);
    }
    if (cal_cmd->parsed()) {
      return cmd_calibrate(input_csv, mode_name, out_instance, arms);
    }
    if (oracle_cmd->parsed()) {
      return cmd_oracle(instance_path, budget, as_json);
    }
    if (lb_cmd->parsed()) {
      return cmd_lower_bound(lb_K, lb_T, out_dir);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
