#pragma once

// Environment dynamics and regret accounting.
//
// A round draws, independently per arm, an activation Y_i ~ Bernoulli(p_i)
// and a threshold X_i ~ G(., lambda_i); arm i succeeds iff Y_i = 1 and the
// allocation covers the threshold. The threshold is revealed only on
// success. The primary metric is per-round pseudo-regret
//
//   r_t = sum_i p_i [ G(x*_i, lambda_i) - G(x_{t,i}, lambda_i) ]
//
// against the clairvoyant optimum x* for the round's budget. Realized
// (indicator-difference) regret under common random numbers is recorded
// alongside when asked.
//
// RNG discipline: one master seed; replication r draws its environment
// stream from derive_stream_seed(seed, r, 0). Policies are deterministic.
// Replications are embarrassingly parallel and are reduced in replication
// order, so the thread count never changes the output.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "censored_alloc/allocation.hpp"
#include "censored_alloc/policy.hpp"

namespace censored_alloc {

enum class ScheduleType { Constant, KnownSequence, UnknownBounded };

struct BudgetSchedule {
  ScheduleType type = ScheduleType::Constant;
  double B = 1.0;               // Constant
  std::vector<double> values;   // KnownSequence / UnknownBounded (replayed)
  double B_max = 0.0;           // UnknownBounded

  double at(std::size_t t) const;  // t is 1-based
  double cap() const;              // B, max(values), or B_max
  bool known_in_advance() const { return type != ScheduleType::UnknownBounded; }
  void validate(std::size_t horizon) const;
};

struct InstanceSpec {
  std::size_t K = 0;
  ThresholdFamily family;
  std::vector<double> p;
  std::vector<double> lambda;
  BudgetSchedule budget;
  std::size_t horizon = 0;

  void validate() const;
};

struct StepResult {
  std::vector<CensoredFeedback> feedback;
  int reward = 0;
  int reference_reward = 0;  // same draws scored against `reference`
};

// One environment transition; draws 2 uniforms per arm in arm order so the
// stream stays aligned across policies under common random numbers. When
// `reference` is given, the same draws also score that allocation (used for
// realized regret against the oracle).
StepResult step(const InstanceSpec& instance, const Allocation& allocation,
                double round_budget, RngStream& rng,
                const Allocation* reference = nullptr);

double pseudo_regret(const InstanceSpec& instance, const Allocation& played,
                     const Allocation& oracle);

// Clairvoyant solve of P(lambda, p) at the given budget (KKT for the
// exponential family, greedy water-filling at B * 1e-4 otherwise).
Allocation oracle_allocation(const InstanceSpec& instance, double B);

struct ReplicationTrace {
  std::vector<double> instant;       // pseudo-regret per round
  std::vector<double> cum;           // prefix sums
  std::vector<double> realized_cum;  // optional, empty unless requested
  std::vector<std::vector<double>> allocations;  // optional
};

struct RegretTrace {
  std::size_t T = 0;
  std::vector<ReplicationTrace> reps;
  std::vector<double> mean_cum;  // across replications, per round
  std::vector<double> std_cum;   // sample std (N - 1)

  void aggregate();
};

struct RunOptions {
  PolicyConfig policy;
  std::size_t T = 0;  // 0: use instance horizon
  std::size_t replications = 1;
  std::uint64_t seed = 1;
  unsigned threads = 1;
  bool record_realized = false;
  bool record_allocations = false;
};

RegretTrace run(const InstanceSpec& instance, const RunOptions& options);

// Theorem-1 hard family: budget 1, every p_i = 1, base scale solving
// (lambda + eps)^2 = eps / 2 with eps = (1/12) (K/T)^{2/3}, plus the K
// instances with one coordinate raised to lambda + eps.
struct LowerBoundFamily {
  std::vector<InstanceSpec> instances;  // [0] = base, [j] perturbs arm j-1
  double epsilon = 0.0;
  double lambda_base = 0.0;
  // eps <= 1/8 is required for eps <= lambda; larger eps is flagged here.
  bool feasible = true;
};

LowerBoundFamily lower_bound_instance(std::size_t K, std::size_t T);

}  // namespace censored_alloc
