#pragma once

// Decision-making agents behind one interface: act() returns the round's
// allocation, observe() consumes the censored feedback.
//
// RA-UCB     init phase of K * floor(log T) full-budget rounds, then a main
//            phase that cycles a boosted arm: the boosted arm i solves the
//            surrogate with (lambda_i^-, lambda_i^+, p_i^+), every other arm
//            with (lambda_k^+, lambda_k^-, p_k^-). Only the boosted arm's
//            estimator is updated; the estimation index t' advances once per
//            full cycle.
// MG-UCB-D   same estimation and boosting, but the within-round allocation
//            is executed through a budget meter in steps of Delta (never
//            reads the round budget).
// NO-UCB     RA-UCB with point estimates (lambda_hat, lambda_hat, p_hat).
// RA-ETC     round-robin full-budget exploration for ceil(T^{2/3}) rounds,
//            then commits to the plug-in solve of the final estimates.
// ORACLE     clairvoyant static solve with the true parameters.

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "censored_alloc/allocation.hpp"
#include "censored_alloc/estimation.hpp"

namespace censored_alloc {

enum class PolicyKind { RaUcb, MgUcbDelta, RaEtc, NoUcb, StaticOracle };

std::string policy_name(PolicyKind kind);
PolicyKind policy_from_name(const std::string& name);

struct PolicyConfig {
  PolicyKind kind = PolicyKind::RaUcb;
  double delta = 0.0;  // MG-UCB-Delta step; <= 0 selects B_cap * 1e-4
  double exploration_scale = 1.0;
};

struct PolicySetup {
  ThresholdFamily family;
  std::size_t K = 0;
  std::size_t T = 0;
  double B_cap = 0.0;  // constant budget, max known budget, or B_max
  // clairvoyant parameters; read only by StaticOracle
  std::vector<double> true_p;
  std::vector<double> true_lambda;
};

enum class PolicyPhase { Init, Main };

class Policy {
 public:
  Policy(const PolicySetup& setup, const PolicyConfig& config);

  // Known-budget policies require round_budget; MG-UCB-Delta requires a
  // meter and never reads round_budget.
  Allocation act(std::optional<double> round_budget,
                 BudgetMeter* meter = nullptr);
  void observe(const Allocation& played,
               const std::vector<CensoredFeedback>& fb);

  PolicyKind kind() const { return config_.kind; }
  std::size_t t() const { return t_; }
  std::size_t t_prime() const { return t_prime_; }
  std::size_t boost_arm() const { return boost_; }  // 0-based
  PolicyPhase phase() const;
  std::size_t init_rounds() const { return init_rounds_; }
  std::size_t explore_rounds() const { return explore_rounds_; }
  const ArmEstimator& estimator(std::size_t i) const { return estimators_[i]; }
  double step_delta() const { return delta_; }

 private:
  Allocation full_budget_on(std::size_t arm, double B) const;
  SurrogateParams boosted_surrogate(std::size_t boosted) const;
  SurrogateParams point_surrogate() const;
  Allocation solve_plugin(const SurrogateParams& params, double B) const;
  void refresh_brackets(std::size_t arm);
  std::size_t init_schedule_arm(std::size_t t) const;

  PolicySetup setup_;
  PolicyConfig config_;
  double delta_ = 0.0;
  std::size_t init_rounds_ = 0;     // K * floor(log T) (UCB family)
  std::size_t explore_rounds_ = 0;  // ceil(T^{2/3})    (RA-ETC)
  std::size_t t_ = 1;
  std::size_t t_prime_ = 1;
  std::size_t boost_ = 0;
  std::vector<ArmEstimator> estimators_;
  std::vector<BoostedParams> brackets_;
  std::map<double, Allocation> static_cache_;  // per-budget memoized solves
};

}  // namespace censored_alloc
