#include "censored_alloc/io.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace censored_alloc {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr int kSchemaVersion = 1;

[[noreturn]] void config_fail(const std::string& what) {
  throw std::invalid_argument("config error: " + what);
}

[[noreturn]] void calibration_file_fail(const std::string& path,
                                        std::size_t line_no,
                                        const std::string& what) {
  throw std::runtime_error("calibration error: " + path + ":" +
                           std::to_string(line_no) + ": " + what);
}

std::string family_name(FamilyKind kind) {
  return kind == FamilyKind::Exponential ? "exponential"
                                         : "weibull_fixed_shape";
}

FamilyKind family_from_name(const std::string& name) {
  if (name == "exponential") return FamilyKind::Exponential;
  if (name == "weibull_fixed_shape") return FamilyKind::WeibullFixedShape;
  config_fail("unknown family kind '" + name + "'");
}

std::string schedule_name(ScheduleType type) {
  switch (type) {
    case ScheduleType::Constant: return "constant";
    case ScheduleType::KnownSequence: return "known_sequence";
    case ScheduleType::UnknownBounded: return "unknown_bounded";
  }
  return "constant";
}

}  // namespace

std::string csv_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

nlohmann::json instance_to_json(const InstanceSpec& instance) {
  json j;
  j["version"] = kSchemaVersion;
  j["K"] = instance.K;
  j["family"]["kind"] = family_name(instance.family.kind);
  if (instance.family.kind == FamilyKind::WeibullFixedShape) {
    j["family"]["k"] = instance.family.k;
  }
  j["bounds"]["m"] = instance.family.bounds.m;
  j["bounds"]["M"] = instance.family.bounds.M;
  j["bounds"]["B_ref"] = instance.family.bounds.B_ref;
  j["p"] = instance.p;
  j["lambda"] = instance.lambda;
  j["budget"]["type"] = schedule_name(instance.budget.type);
  switch (instance.budget.type) {
    case ScheduleType::Constant:
      j["budget"]["B"] = instance.budget.B;
      break;
    case ScheduleType::KnownSequence:
      j["budget"]["values"] = instance.budget.values;
      break;
    case ScheduleType::UnknownBounded:
      j["budget"]["values"] = instance.budget.values;
      j["budget"]["B_max"] = instance.budget.B_max;
      break;
  }
  j["horizon"] = instance.horizon;
  return j;
}

InstanceSpec instance_from_json(const nlohmann::json& j) {
  InstanceSpec inst;
  try {
    if (j.at("version").get<int>() != kSchemaVersion) {
      config_fail("unsupported instance schema version");
    }
    inst.K = j.at("K").get<std::size_t>();
    const std::string kind = j.at("family").at("kind").get<std::string>();
    inst.family.kind = family_from_name(kind);
    if (inst.family.kind == FamilyKind::WeibullFixedShape) {
      inst.family.k = j.at("family").at("k").get<double>();
    }
    inst.family.bounds.m = j.at("bounds").at("m").get<double>();
    inst.family.bounds.M = j.at("bounds").at("M").get<double>();
    inst.family.bounds.B_ref = j.at("bounds").at("B_ref").get<double>();
    inst.p = j.at("p").get<std::vector<double>>();
    inst.lambda = j.at("lambda").get<std::vector<double>>();
    const std::string sched = j.at("budget").at("type").get<std::string>();
    if (sched == "constant") {
      inst.budget.type = ScheduleType::Constant;
      inst.budget.B = j.at("budget").at("B").get<double>();
    } else if (sched == "known_sequence") {
      inst.budget.type = ScheduleType::KnownSequence;
      inst.budget.values =
          j.at("budget").at("values").get<std::vector<double>>();
    } else if (sched == "unknown_bounded") {
      inst.budget.type = ScheduleType::UnknownBounded;
      inst.budget.values =
          j.at("budget").at("values").get<std::vector<double>>();
      inst.budget.B_max = j.at("budget").at("B_max").get<double>();
    } else {
      config_fail("unknown budget schedule '" + sched + "'");
    }
    inst.horizon = j.at("horizon").get<std::size_t>();
  } catch (const json::exception& e) {
    config_fail(std::string("instance JSON: ") + e.what());
  }
  return inst;
}

InstanceSpec load_instance(const std::string& path) {
  std::ifstream in(path);
  if (!in) config_fail("cannot open instance file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    config_fail("instance '" + path + "': " + e.what());
  }
  return instance_from_json(j);
}

void save_instance(const InstanceSpec& instance, const std::string& path) {
  std::ofstream out(path);
  if (!out) config_fail("cannot write instance file '" + path + "'");
  out << instance_to_json(instance).dump(2) << "\n";
}

void ExperimentConfig::validate() const {
  instance.validate();
  if (policies.empty()) config_fail("no policies configured");
  if (replications == 0) config_fail("replications must be >= 1");
  const std::size_t horizon = T > 0 ? T : instance.horizon;
  const std::size_t log_T = static_cast<std::size_t>(
      std::floor(std::log(static_cast<double>(horizon))));
  if (horizon < instance.K * log_T + instance.K) {
    config_fail("T must be at least K*floor(log T) + K");
  }
  for (const PolicyConfig& p : policies) {
    if (p.kind == PolicyKind::MgUcbDelta) {
      const double d = p.delta > 0.0 ? p.delta : delta;
      if (d > 0.0 && d >= instance.budget.cap()) {
        config_fail("delta must lie in (0, B_max)");
      }
    }
  }
}

nlohmann::json config_to_json(const ExperimentConfig& config) {
  json j;
  j["version"] = kSchemaVersion;
  j["instance"] = instance_to_json(config.instance);
  j["policies"] = json::array();
  for (const PolicyConfig& p : config.policies) {
    json jp;
    jp["kind"] = policy_name(p.kind);
    if (p.delta > 0.0) jp["delta"] = p.delta;
    if (p.exploration_scale != 1.0) {
      jp["exploration_scale"] = p.exploration_scale;
    }
    j["policies"].push_back(jp);
  }
  if (config.T > 0) j["T"] = config.T;
  j["replications"] = config.replications;
  j["seed"] = config.seed;
  if (config.delta > 0.0) j["delta"] = config.delta;
  j["output_dir"] = config.output_dir;
  j["emit_allocations"] = config.emit_allocations;
  j["realized_regret"] = config.realized_regret;
  if (config.exploration_scale != 1.0) {
    j["exploration_scale"] = config.exploration_scale;
  }
  j["threads"] = config.threads;
  return j;
}

ExperimentConfig config_from_json(const nlohmann::json& j,
                                  const std::string& base_dir) {
  ExperimentConfig c;
  try {
    if (j.at("version").get<int>() != kSchemaVersion) {
      config_fail("unsupported config schema version");
    }
    if (j.at("instance").is_string()) {
      fs::path p = j.at("instance").get<std::string>();
      if (p.is_relative() && !base_dir.empty()) p = fs::path(base_dir) / p;
      c.instance = load_instance(p.string());
    } else {
      c.instance = instance_from_json(j.at("instance"));
    }
    if (j.contains("exploration_scale")) {
      c.exploration_scale = j.at("exploration_scale").get<double>();
    }
    for (const json& jp : j.at("policies")) {
      PolicyConfig p;
      p.kind = policy_from_name(jp.at("kind").get<std::string>());
      if (jp.contains("delta")) p.delta = jp.at("delta").get<double>();
      p.exploration_scale = jp.contains("exploration_scale")
                                ? jp.at("exploration_scale").get<double>()
                                : c.exploration_scale;
      c.policies.push_back(p);
    }
    if (j.contains("T")) c.T = j.at("T").get<std::size_t>();
    c.replications = j.at("replications").get<std::size_t>();
    c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("delta")) c.delta = j.at("delta").get<double>();
    if (j.contains("output_dir")) {
      c.output_dir = j.at("output_dir").get<std::string>();
    }
    if (j.contains("emit_allocations")) {
      c.emit_allocations = j.at("emit_allocations").get<bool>();
    }
    if (j.contains("realized_regret")) {
      c.realized_regret = j.at("realized_regret").get<bool>();
    }
    if (j.contains("threads")) c.threads = j.at("threads").get<unsigned>();
  } catch (const json::exception& e) {
    config_fail(std::string("config JSON: ") + e.what());
  }
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) config_fail("cannot open config file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    config_fail("config '" + path + "': " + e.what());
  }
  return config_from_json(j, fs::path(path).parent_path().string());
}

ExperimentOutcome run_experiment(const ExperimentConfig& config) {
  config.validate();
  fs::create_directories(config.output_dir);
  ExperimentOutcome outcome;

  const fs::path trace_path = fs::path(config.output_dir) / "regret_trace.csv";
  const fs::path summary_path = fs::path(config.output_dir) / "summary.csv";
  std::ofstream trace(trace_path);
  std::ofstream summary(summary_path);
  if (!trace || !summary) config_fail("cannot write under output_dir");
  trace << "policy,replication,t,instant_regret,cum_regret\n";
  summary << "policy,t,mean_cum_regret,std_cum_regret\n";

  std::ofstream alloc_out;
  if (config.emit_allocations) {
    const fs::path p = fs::path(config.output_dir) / "allocations.csv";
    alloc_out.open(p);
    alloc_out << "policy,replication,t";
    for (std::size_t i = 1; i <= config.instance.K; ++i) {
      alloc_out << ",x_" << i;
    }
    alloc_out << "\n";
    outcome.files_written.push_back(p.string());
  }

  for (const PolicyConfig& pc : config.policies) {
    const std::string name = policy_name(pc.kind);
    RunOptions options;
    options.policy = pc;
    if (pc.kind == PolicyKind::MgUcbDelta && options.policy.delta <= 0.0) {
      options.policy.delta = config.delta;
    }
    options.T = config.T;
    options.replications = config.replications;
    options.seed = config.seed;
    options.threads = config.threads;
    options.record_realized = config.realized_regret;
    options.record_allocations = config.emit_allocations;

    RegretTrace result;
    try {
      result = run(config.instance, options);
    } catch (const std::exception& e) {
      outcome.errors.emplace_back(name, e.what());
      continue;
    }

    for (std::size_t rep = 0; rep < result.reps.size(); ++rep) {
      const ReplicationTrace& r = result.reps[rep];
      for (std::size_t t = 1; t <= result.T; ++t) {
        trace << name << ',' << rep << ',' << t << ','
              << csv_double(r.instant[t - 1]) << ','
              << csv_double(r.cum[t - 1]) << '\n';
        if (config.emit_allocations) {
          alloc_out << name << ',' << rep << ',' << t;
          for (double xi : r.allocations[t - 1]) {
            alloc_out << ',' << csv_double(xi);
          }
          alloc_out << '\n';
        }
      }
    }
    for (std::size_t t = 1; t <= result.T; ++t) {
      summary << name << ',' << t << ',' << csv_double(result.mean_cum[t - 1])
              << ',' << csv_double(result.std_cum[t - 1]) << '\n';
    }
  }

  outcome.files_written.push_back(trace_path.string());
  outcome.files_written.push_back(summary_path.string());
  if (!outcome.errors.empty()) {
    const fs::path err_path = fs::path(config.output_dir) / "run_errors.csv";
    std::ofstream err(err_path);
    err << "policy,error\n";
    for (const auto& [policy, message] : outcome.errors) {
      std::string quoted = message;
      for (char& ch : quoted) {
        if (ch == ',' || ch == '\n') ch = ';';
      }
      err << policy << ',' << quoted << '\n';
    }
    outcome.files_written.push_back(err_path.string());
  }
  return outcome;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

std::vector<InteractionRecord> read_interaction_csv(const std::string& path,
                                                    CalibrationMode mode) {
  const std::vector<std::string> expected =
      mode == CalibrationMode::EdNet
          ? std::vector<std::string>{"pseudo_user_id", "question_id",
                                     "response_time_ms", "is_correct"}
          : std::vector<std::string>{"uid", "campaign",
                                     "exposures_before_click", "clicked"};

  std::ifstream in(path);
  if (!in) calibration_file_fail(path, 0, "cannot open file");
  std::string line;
  if (!std::getline(in, line)) calibration_file_fail(path, 0, "empty file");
  const std::vector<std::string> header = split_csv_line(line);
  for (std::size_t i = 0; i < expected.size(); ++i) {
    if (i >= header.size() || header[i] != expected[i]) {
      throw std::runtime_error(
          "schema error: column " + std::to_string(i + 1) + " of '" + path +
          "' should be '" + expected[i] + "', got '" +
          (i < header.size() ? header[i] : std::string("<missing>")) + "'");
    }
  }
  if (header.size() != expected.size()) {
    throw std::runtime_error("schema error: expected " +
                             std::to_string(expected.size()) + " columns, got " +
                             std::to_string(header.size()));
  }

  std::vector<InteractionRecord> records;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    line_no += 1;
    if (line.empty()) continue;
    const std::vector<std::string> f = split_csv_line(line);
    if (f.size() != expected.size()) {
      calibration_file_fail(path, line_no, "expected 4 fields");
    }
    InteractionRecord r;
    r.user_id = f[0];
    r.arm_id = f[1];
    try {
      r.threshold_obs = std::stod(f[2]);
      const int flag = std::stoi(f[3]);
      if (flag != 0 && flag != 1) throw std::invalid_argument("not 0/1");
      r.success = flag == 1;
    } catch (const std::exception&) {
      calibration_file_fail(path, line_no, "cannot parse numeric fields");
    }
    records.push_back(r);
  }
  return records;
}

void write_fit_report(const CalibrationResult& result,
                      const std::string& path) {
  std::ofstream out(path);
  if (!out) config_fail("cannot write fit report '" + path + "'");
  out << "arm_id,k,lambda,p,ks_stat,n_samples\n";
  for (const FittedArm& f : result.report) {
    out << f.arm_id << ',' << csv_double(f.k) << ',' << csv_double(f.lambda)
        << ',' << csv_double(f.p) << ',' << csv_double(f.ks_stat) << ','
        << f.n_samples << '\n';
  }
}

}  // namespace censored_alloc
