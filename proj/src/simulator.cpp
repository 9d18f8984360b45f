#include "censored_alloc/simulator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <stdexcept>
#include <thread>

namespace censored_alloc {

double BudgetSchedule::at(std::size_t t) const {
  if (type == ScheduleType::Constant) return B;
  if (t == 0 || t > values.size()) {
    throw std::out_of_range("BudgetSchedule: round beyond sequence length");
  }
  return values[t - 1];
}

double BudgetSchedule::cap() const {
  if (type == ScheduleType::Constant) return B;
  if (type == ScheduleType::UnknownBounded) return B_max;
  double m = 0.0;
  for (double v : values) m = std::max(m, v);
  return m;
}

void BudgetSchedule::validate(std::size_t horizon) const {
  if (type == ScheduleType::Constant) {
    if (!(B > 0.0)) throw std::invalid_argument("config error: budget <= 0");
    return;
  }
  if (values.size() < horizon) {
    throw std::invalid_argument(
        "config error: budget sequence shorter than the horizon");
  }
  const double hi = cap();
  for (double v : values) {
    if (!(v > 0.0) || v > hi * (1.0 + 1e-12)) {
      throw std::invalid_argument("config error: budget outside (0, B_max]");
    }
  }
}

void InstanceSpec::validate() const {
  family.validate();
  if (K == 0 || p.size() != K || lambda.size() != K) {
    throw std::invalid_argument("InstanceSpec: vector lengths must equal K");
  }
  for (double pi : p) {
    if (!(pi >= 0.0) || !(pi <= 1.0)) {
      throw std::invalid_argument("InstanceSpec: p outside [0,1]");
    }
  }
  for (double li : lambda) family.bounds.require_lambda(li);
  budget.validate(horizon);
}

StepResult step(const InstanceSpec& instance, const Allocation& allocation,
                double round_budget, RngStream& rng,
                const Allocation* reference) {
  if (allocation.x.size() != instance.K) {
    throw std::invalid_argument("step: allocation length mismatch");
  }
  double total = 0.0;
  for (double xi : allocation.x) {
    if (!(xi >= 0.0)) {
      throw std::invalid_argument("contract violation: negative allocation");
    }
    total += xi;
  }
  if (total > round_budget * (1.0 + 1e-12) + 1e-12) {
    throw std::invalid_argument("contract violation: allocation over budget");
  }

  StepResult out;
  out.feedback.resize(instance.K);
  for (std::size_t i = 0; i < instance.K; ++i) {
    const bool activated = rng.bernoulli(instance.p[i]);
    const double threshold =
        sample_threshold(instance.family, instance.lambda[i], rng);
    const bool success = activated && allocation.x[i] >= threshold;
    out.feedback[i].success = success;
    if (success) out.feedback[i].threshold = threshold;
    out.reward += success ? 1 : 0;
    if (reference != nullptr) {
      out.reference_reward +=
          (activated && reference->x[i] >= threshold) ? 1 : 0;
    }
  }
  return out;
}

double pseudo_regret(const InstanceSpec& instance, const Allocation& played,
                     const Allocation& oracle) {
  double r = 0.0;
  for (std::size_t i = 0; i < instance.K; ++i) {
    r += instance.p[i] *
         (detail::cdf_unchecked(instance.family, oracle.x[i],
                                instance.lambda[i]) -
          detail::cdf_unchecked(instance.family, played.x[i],
                                instance.lambda[i]));
  }
  return r;
}

Allocation oracle_allocation(const InstanceSpec& instance, double B) {
  if (instance.family.kind == FamilyKind::Exponential) {
    return solve_exponential_kkt(instance.p, instance.lambda, B);
  }
  if (!instance.family.strongly_concave()) {
    throw std::invalid_argument(
        "oracle_allocation: Weibull k > 1 needs the Assumption-7 oracle "
        "path, which is not implemented");
  }
  SurrogateParams params;
  params.p_bar = instance.p;
  params.lambda_bar = instance.lambda;
  params.lambda_prime_bar = instance.lambda;
  return solve_surrogate(instance.family, params, B, SolveMethod::Greedy,
                         B * 1e-4);
}

void RegretTrace::aggregate() {
  const std::size_t n = reps.size();
  mean_cum.assign(T, 0.0);
  std_cum.assign(T, 0.0);
  if (n == 0) return;
  for (const ReplicationTrace& r : reps) {
    for (std::size_t t = 0; t < T; ++t) mean_cum[t] += r.cum[t];
  }
  for (std::size_t t = 0; t < T; ++t) mean_cum[t] /= static_cast<double>(n);
  if (n < 2) return;
  for (const ReplicationTrace& r : reps) {
    for (std::size_t t = 0; t < T; ++t) {
      const double d = r.cum[t] - mean_cum[t];
      std_cum[t] += d * d;
    }
  }
  for (std::size_t t = 0; t < T; ++t) {
    std_cum[t] = std::sqrt(std_cum[t] / static_cast<double>(n - 1));
  }
}

namespace {

ReplicationTrace run_one(const InstanceSpec& instance,
                         const RunOptions& options, std::size_t T,
                         const std::map<double, Allocation>& oracle_cache,
                         std::size_t rep) {
  PolicySetup setup;
  setup.family = instance.family;
  setup.K = instance.K;
  setup.T = T;
  setup.B_cap = instance.budget.cap();
  if (options.policy.kind == PolicyKind::StaticOracle) {
    setup.true_p = instance.p;
    setup.true_lambda = instance.lambda;
  }
  Policy policy(setup, options.policy);
  RngStream env_rng(derive_stream_seed(options.seed, rep, 0));

  ReplicationTrace trace;
  trace.instant.resize(T);
  trace.cum.resize(T);
  if (options.record_realized) trace.realized_cum.resize(T);
  if (options.record_allocations) trace.allocations.resize(T);

  double cum = 0.0;
  double realized = 0.0;
  for (std::size_t t = 1; t <= T; ++t) {
    const double B_t = instance.budget.at(t);
    const Allocation& oracle = oracle_cache.at(B_t);

    Allocation played;
    if (options.policy.kind == PolicyKind::MgUcbDelta) {
      BudgetMeter meter(B_t);
      played = policy.act(std::nullopt, &meter);
    } else {
      if (!instance.budget.known_in_advance()) {
        throw std::invalid_argument(
            "config error: this policy requires budgets known in advance");
      }
      played = policy.act(B_t);
    }

    StepResult sr = step(instance, played, B_t, env_rng,
                         options.record_realized ? &oracle : nullptr);
    policy.observe(played, sr.feedback);

    const double r = pseudo_regret(instance, played, oracle);
    cum += r;
    trace.instant[t - 1] = r;
    trace.cum[t - 1] = cum;
    if (options.record_realized) {
      realized += sr.reference_reward - sr.reward;
      trace.realized_cum[t - 1] = realized;
    }
    if (options.record_allocations) trace.allocations[t - 1] = played.x;
  }
  return trace;
}

}  // namespace

RegretTrace run(const InstanceSpec& instance, const RunOptions& options) {
  instance.validate();
  const std::size_t T = options.T > 0 ? options.T : instance.horizon;
  if (T == 0) throw std::invalid_argument("config error: T = 0");
  const std::size_t log_T = static_cast<std::size_t>(
      std::floor(std::log(static_cast<double>(T))));
  if (T < instance.K * log_T + instance.K) {
    throw std::invalid_argument(
        "config error: horizon too small for init phase plus one cycle");
  }
  if (options.replications == 0) {
    throw std::invalid_argument("config error: replications must be >= 1");
  }
  instance.budget.validate(T);

  // oracle solves precomputed per distinct budget, shared read-only
  std::map<double, Allocation> oracle_cache;
  for (std::size_t t = 1; t <= T; ++t) {
    const double B_t = instance.budget.at(t);
    if (!oracle_cache.count(B_t)) {
      oracle_cache.emplace(B_t, oracle_allocation(instance, B_t));
    }
  }

  RegretTrace trace;
  trace.T = T;
  trace.reps.resize(options.replications);

  const unsigned threads =
      std::max(1u, std::min<unsigned>(options.threads,
                                      static_cast<unsigned>(
                                          options.replications)));
  if (threads == 1) {
    for (std::size_t rep = 0; rep < options.replications; ++rep) {
      trace.reps[rep] = run_one(instance, options, T, oracle_cache, rep);
    }
  } else {
    std::vector<std::thread> pool;
    std::atomic<std::size_t> next{0};
    for (unsigned w = 0; w < threads; ++w) {
      pool.emplace_back([&]() {
        while (true) {
          const std::size_t rep = next.fetch_add(1);
          if (rep >= options.replications) break;
          trace.reps[rep] = run_one(instance, options, T, oracle_cache, rep);
        }
      });
    }
    for (std::thread& th : pool) th.join();
  }

  trace.aggregate();
  return trace;
}

LowerBoundFamily lower_bound_instance(std::size_t K, std::size_t T) {
  if (K == 0 || T == 0 || K > T) {
    throw std::invalid_argument("lower_bound_instance: need 1 <= K <= T");
  }
  const double ratio = static_cast<double>(K) / static_cast<double>(T);
  const double eps = std::pow(ratio, 2.0 / 3.0) / 12.0;
  const double lam = std::sqrt(eps / 2.0) - eps;  // (lam + eps)^2 = eps/2

  LowerBoundFamily fam;
  fam.epsilon = eps;
  fam.lambda_base = lam;
  fam.feasible = eps <= 0.125 && lam > 0.0;  // eps <= lambda requires eps <= 1/8

  InstanceSpec base;
  base.K = K;
  base.family.kind = FamilyKind::Exponential;
  base.family.bounds.B_ref = 1.0;
  base.family.bounds.m = 0.5 * lam;
  base.family.bounds.M = 2.0 * (lam + eps);
  base.p.assign(K, 1.0);
  base.lambda.assign(K, lam);
  base.budget.type = ScheduleType::Constant;
  base.budget.B = 1.0;
  base.horizon = T;

  fam.instances.push_back(base);
  for (std::size_t j = 0; j < K; ++j) {
    InstanceSpec pert = base;
    pert.lambda[j] = lam + eps;
    fam.instances.push_back(pert);
  }
  return fam;
}

}  // namespace censored_alloc
