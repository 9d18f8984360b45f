#include "censored_alloc/policy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace censored_alloc {

std::string policy_name(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::RaUcb: return "ra_ucb";
    case PolicyKind::MgUcbDelta: return "mg_ucb_delta";
    case PolicyKind::RaEtc: return "ra_etc";
    case PolicyKind::NoUcb: return "no_ucb";
    case PolicyKind::StaticOracle: return "static_oracle";
  }
  return "unknown";
}

PolicyKind policy_from_name(const std::string& name) {
  if (name == "ra_ucb") return PolicyKind::RaUcb;
  if (name == "mg_ucb_delta") return PolicyKind::MgUcbDelta;
  if (name == "ra_etc") return PolicyKind::RaEtc;
  if (name == "no_ucb") return PolicyKind::NoUcb;
  if (name == "static_oracle") return PolicyKind::StaticOracle;
  throw std::invalid_argument("unknown policy kind: " + name);
}

Policy::Policy(const PolicySetup& setup, const PolicyConfig& config)
    : setup_(setup), config_(config) {
  if (setup_.K == 0 || setup_.T == 0 || !(setup_.B_cap > 0.0)) {
    throw std::invalid_argument("Policy: bad setup");
  }
  setup_.family.validate();
  delta_ = config_.delta > 0.0 ? config_.delta : setup_.B_cap * 1e-4;

  const std::size_t log_T =
      static_cast<std::size_t>(std::floor(std::log(
          static_cast<double>(setup_.T))));
  init_rounds_ = setup_.K * log_T;
  explore_rounds_ = static_cast<std::size_t>(std::ceil(
      std::cbrt(static_cast<double>(setup_.T) * static_cast<double>(setup_.T)) -
      1e-9));
  explore_rounds_ = std::min(explore_rounds_, setup_.T);

  if (config_.kind != PolicyKind::StaticOracle) {
    estimators_.reserve(setup_.K);
    brackets_.resize(setup_.K);
    for (std::size_t i = 0; i < setup_.K; ++i) {
      estimators_.emplace_back(setup_.family, setup_.B_cap);
      refresh_brackets(i);
    }
  } else if (setup_.true_p.size() != setup_.K ||
             setup_.true_lambda.size() != setup_.K) {
    throw std::invalid_argument("StaticOracle needs the true parameters");
  }
}

PolicyPhase Policy::phase() const {
  const std::size_t cut =
      config_.kind == PolicyKind::RaEtc ? explore_rounds_ : init_rounds_;
  return t_ <= cut ? PolicyPhase::Init : PolicyPhase::Main;
}

std::size_t Policy::init_schedule_arm(std::size_t t) const {
  if (config_.kind == PolicyKind::RaEtc) return (t - 1) % setup_.K;
  const std::size_t per_arm = init_rounds_ / setup_.K;  // floor(log T)
  return (t - 1) / per_arm;
}

Allocation Policy::full_budget_on(std::size_t arm, double B) const {
  Allocation a;
  a.x.assign(setup_.K, 0.0);
  a.x[arm] = B;
  return a;
}

void Policy::refresh_brackets(std::size_t arm) {
  const std::size_t t_now = std::max<std::size_t>(t_, 2);
  brackets_[arm] =
      estimators_[arm].transformed_brackets(t_now, config_.exploration_scale);
}

SurrogateParams Policy::boosted_surrogate(std::size_t boosted) const {
  SurrogateParams params;
  params.p_bar.resize(setup_.K);
  params.lambda_bar.resize(setup_.K);
  params.lambda_prime_bar.resize(setup_.K);
  for (std::size_t k = 0; k < setup_.K; ++k) {
    const BoostedParams& br = brackets_[k];
    if (k == boosted) {
      params.lambda_bar[k] = br.lambda_minus;
      params.lambda_prime_bar[k] = br.lambda_plus;
      params.p_bar[k] = br.p_plus;
    } else {
      params.lambda_bar[k] = br.lambda_plus;
      params.lambda_prime_bar[k] = br.lambda_minus;
      params.p_bar[k] = br.p_minus;
    }
  }
  return params;
}

SurrogateParams Policy::point_surrogate() const {
  SurrogateParams params;
  params.p_bar.resize(setup_.K);
  params.lambda_bar.resize(setup_.K);
  params.lambda_prime_bar.resize(setup_.K);
  for (std::size_t k = 0; k < setup_.K; ++k) {
    params.lambda_bar[k] = estimators_[k].lambda_hat();
    params.lambda_prime_bar[k] = estimators_[k].lambda_hat();
    params.p_bar[k] = estimators_[k].p_hat();
  }
  return params;
}

Allocation Policy::solve_plugin(const SurrogateParams& params,
                                double B) const {
  if (setup_.family.kind == FamilyKind::Exponential) {
    return solve_surrogate(setup_.family, params, B,
                           SolveMethod::KktExponential);
  }
  if (!setup_.family.strongly_concave()) {
    throw std::invalid_argument(
        "Policy: Weibull shape k > 1 needs the Assumption-7 oracle path, "
        "which is not implemented");
  }
  return solve_surrogate(setup_.family, params, B, SolveMethod::Greedy,
                         B * 1e-4);
}

Allocation Policy::act(std::optional<double> round_budget,
                       BudgetMeter* meter) {
  if (config_.kind == PolicyKind::MgUcbDelta) {
    if (meter == nullptr) {
      throw std::logic_error(
          "contract violation: MG-UCB-Delta cannot precommit an allocation "
          "without a budget meter");
    }
    if (phase() == PolicyPhase::Init) {
      // pour the whole (unknown) budget onto the scheduled arm
      const std::size_t arm = init_schedule_arm(t_);
      Allocation a;
      a.x.assign(setup_.K, 0.0);
      while (meter->has_more()) a.x[arm] += meter->take(delta_);
      return a;
    }
    const SurrogateParams params = boosted_surrogate(boost_);
    return greedy_waterfill_metered(setup_.family, params, *meter, delta_);
  }

  if (!round_budget.has_value()) {
    throw std::logic_error(
        "contract violation: this policy requires a known round budget");
  }
  const double B = *round_budget;
  if (!(B > 0.0)) throw std::invalid_argument("Policy::act: budget <= 0");

  switch (config_.kind) {
    case PolicyKind::StaticOracle: {
      auto it = static_cache_.find(B);
      if (it == static_cache_.end()) {
        SurrogateParams params;
        params.p_bar = setup_.true_p;
        params.lambda_bar = setup_.true_lambda;
        params.lambda_prime_bar = setup_.true_lambda;
        it = static_cache_.emplace(B, solve_plugin(params, B)).first;
      }
      return it->second;
    }
    case PolicyKind::RaEtc: {
      if (phase() == PolicyPhase::Init) {
        return full_budget_on(init_schedule_arm(t_), B);
      }
      auto it = static_cache_.find(B);
      if (it == static_cache_.end()) {
        it = static_cache_.emplace(B, solve_plugin(point_surrogate(), B))
                 .first;
      }
      return it->second;
    }
    case PolicyKind::RaUcb:
    case PolicyKind::NoUcb: {
      if (phase() == PolicyPhase::Init) {
        return full_budget_on(init_schedule_arm(t_), B);
      }
      const SurrogateParams params = config_.kind == PolicyKind::RaUcb
                                         ? boosted_surrogate(boost_)
                                         : point_surrogate();
      return solve_plugin(params, B);
    }
    case PolicyKind::MgUcbDelta:
      break;  // handled above
  }
  throw std::logic_error("Policy::act: unreachable");
}

void Policy::observe(const Allocation& played,
                     const std::vector<CensoredFeedback>& fb) {
  if (fb.size() != setup_.K) {
    throw std::invalid_argument("Policy::observe: feedback size mismatch");
  }
  const bool was_init = phase() == PolicyPhase::Init;

  switch (config_.kind) {
    case PolicyKind::StaticOracle:
      break;
    case PolicyKind::RaEtc: {
      if (was_init) {
        const std::size_t arm = init_schedule_arm(t_);
        estimators_[arm].update(played.x[arm], fb[arm]);
      }
      break;  // commit phase: estimates frozen
    }
    case PolicyKind::RaUcb:
    case PolicyKind::NoUcb:
    case PolicyKind::MgUcbDelta: {
      if (was_init) {
        const std::size_t arm = init_schedule_arm(t_);
        estimators_[arm].update(played.x[arm], fb[arm]);
        refresh_brackets(arm);
      } else {
        // only the boosted arm learns; other arms' feedback is reward-only
        estimators_[boost_].update(played.x[boost_], fb[boost_]);
        refresh_brackets(boost_);
      }
      break;
    }
  }

  t_ += 1;
  if (config_.kind == PolicyKind::RaUcb ||
      config_.kind == PolicyKind::NoUcb ||
      config_.kind == PolicyKind::MgUcbDelta) {
    if (was_init && phase() == PolicyPhase::Main) {
      // entering the main phase: brackets were computed at early t
      for (std::size_t i = 0; i < setup_.K; ++i) refresh_brackets(i);
    } else if (!was_init) {
      boost_ += 1;
      if (boost_ >= setup_.K) {
        boost_ = 0;
        t_prime_ += 1;
      }
    }
  }
}

}  // namespace censored_alloc
