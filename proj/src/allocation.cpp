#include "censored_alloc/allocation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>
#include <stdexcept>

namespace censored_alloc {

double Allocation::total() const {
  return std::accumulate(x.begin(), x.end(), 0.0);
}

void SurrogateParams::validate(const ParamBounds& bounds) const {
  if (lambda_bar.size() != p_bar.size() ||
      lambda_prime_bar.size() != p_bar.size()) {
    throw std::invalid_argument("SurrogateParams: vector length mismatch");
  }
  for (std::size_t i = 0; i < p_bar.size(); ++i) {
    if (!(p_bar[i] >= 0.0) || !(p_bar[i] <= 1.0)) {
      throw std::invalid_argument("SurrogateParams: p outside [0,1]");
    }
    bounds.require_lambda(lambda_bar[i]);
    bounds.require_lambda(lambda_prime_bar[i]);
  }
}

BudgetMeter::BudgetMeter(double budget) : remaining_(budget) {
  if (!(budget > 0.0)) {
    throw std::invalid_argument("BudgetMeter: budget must be > 0");
  }
}

double BudgetMeter::take(double amount) {
  if (!(amount > 0.0)) {
    throw std::invalid_argument("BudgetMeter::take: amount must be > 0");
  }
  const double granted = std::min(amount, remaining_);
  remaining_ -= granted;
  dispensed_ += granted;
  return granted;
}

namespace {

constexpr double kNuFloor = 1e-15;
constexpr int kNuMaxIter = 200;
constexpr double kBudgetTol = 1e-10;

Allocation uniform_no_signal(std::size_t K, double B) {
  Allocation a;
  a.x.assign(K, B / static_cast<double>(K));
  a.no_signal = true;
  return a;
}

// Water-filling with per-arm weight c_i and decay rate d_i:
//   x_i(nu) = max(0, log(c_i / nu) / d_i),  sum_i x_i(nu) = B.
Allocation kkt_waterfill(const std::vector<double>& c,
                         const std::vector<double>& decay, double B) {
  const std::size_t K = c.size();
  double c_max = 0.0;
  for (double v : c) c_max = std::max(c_max, v);
  if (!(c_max > 0.0)) return uniform_no_signal(K, B);

  auto fill = [&](double nu, std::vector<double>& x) {
    const double log_nu = std::log(nu);
    double total = 0.0;
    for (std::size_t i = 0; i < K; ++i) {
      x[i] = c[i] > 0.0
                 ? std::max(0.0, (std::log(c[i]) - log_nu) / decay[i])
                 : 0.0;
      total += x[i];
    }
    return total;
  };

  std::vector<double> x(K, 0.0);
  double lo = kNuFloor, hi = c_max;
  double nu = hi;
  for (int it = 0; it < kNuMaxIter; ++it) {
    nu = 0.5 * (lo + hi);
    const double total = fill(nu, x);
    if (std::abs(total - B) <= kBudgetTol) break;
    if (total > B) {
      lo = nu;
    } else {
      hi = nu;
    }
  }
  fill(nu, x);
  Allocation a;
  a.x = std::move(x);
  return a;
}

struct HeapEntry {
  double gain;
  std::size_t idx;
};

struct HeapLess {
  bool operator()(const HeapEntry& a, const HeapEntry& b) const {
    if (a.gain != b.gain) return a.gain < b.gain;
    return a.idx > b.idx;  // equal gains: lowest index wins
  }
};

}  // namespace

Allocation solve_exponential_kkt(const std::vector<double>& p,
                                 const std::vector<double>& lambda, double B) {
  if (p.size() != lambda.size() || p.empty()) {
    throw std::invalid_argument("solve_exponential_kkt: size mismatch");
  }
  if (!(B > 0.0)) {
    throw std::invalid_argument("solve_exponential_kkt: B must be > 0");
  }
  std::vector<double> c(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!(lambda[i] > 0.0)) {
      throw std::invalid_argument("solve_exponential_kkt: lambda must be > 0");
    }
    c[i] = p[i] * lambda[i];
  }
  return kkt_waterfill(c, lambda, B);
}

Allocation greedy_waterfill_metered(const ThresholdFamily& family,
                                    const SurrogateParams& params,
                                    BudgetMeter& meter, double delta) {
  if (!(delta > 0.0)) {
    throw std::invalid_argument("greedy_waterfill: delta must be > 0");
  }
  const std::size_t K = params.size();
  Allocation a;
  a.x.assign(K, 0.0);

  // Discrete marginal gain of a `step`-sized increment on arm i:
  //   p_i [G~(x + step) - G~(x)] = p_i (l'_i / l_i) [S(x) - S(x + step)].
  // Concavity makes these non-increasing per arm, which is what makes the
  // greedy solve the step-grid problem exactly.
  auto gain = [&](std::size_t i, double x, double step) {
    const double s = params.lambda_prime_bar[i] / params.lambda_bar[i];
    return params.p_bar[i] * s *
           (detail::survival_unchecked(family, x, params.lambda_bar[i]) -
            detail::survival_unchecked(family, x + step,
                                       params.lambda_bar[i]));
  };

  std::priority_queue<HeapEntry, std::vector<HeapEntry>, HeapLess> heap;
  for (std::size_t i = 0; i < K; ++i) {
    if (params.p_bar[i] <= 0.0) continue;  // zero marginal forever
    heap.push({gain(i, 0.0, delta), i});
  }
  if (heap.empty()) {
    const double whole = meter.take(std::numeric_limits<double>::max());
    return uniform_no_signal(K, whole);
  }

  while (meter.has_more()) {
    const double step = meter.take(delta);
    if (step == delta) {
      HeapEntry top = heap.top();
      heap.pop();
      a.x[top.idx] += step;
      top.gain = gain(top.idx, a.x[top.idx], delta);
      heap.push(top);
    } else {
      // final partial step: rank the arms at the residual step size
      std::size_t best = K;
      double best_gain = -1.0;
      for (std::size_t i = 0; i < K; ++i) {
        if (params.p_bar[i] <= 0.0) continue;
        const double g = gain(i, a.x[i], step);
        if (g > best_gain) {
          best_gain = g;
          best = i;
        }
      }
      a.x[best] += step;
    }
  }
  return a;
}

Allocation greedy_waterfill(const ThresholdFamily& family,
                            const SurrogateParams& params, double B,
                            double delta) {
  BudgetMeter meter(B);
  return greedy_waterfill_metered(family, params, meter, delta);
}

Allocation solve_surrogate(const ThresholdFamily& family,
                           const SurrogateParams& params, double B,
                           SolveMethod method, double delta) {
  params.validate(family.bounds);
  if (method == SolveMethod::KktExponential) {
    if (family.kind != FamilyKind::Exponential) {
      throw std::invalid_argument(
          "solve_surrogate: KKT method requires the exponential family");
    }
    std::vector<double> c(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
      c[i] = params.p_bar[i] * params.lambda_prime_bar[i];
    }
    return kkt_waterfill(c, params.lambda_bar, B);
  }
  if (delta <= 0.0) delta = B * 1e-4;
  return greedy_waterfill(family, params, B, delta);
}

Allocation brute_force_reference(const ThresholdFamily& family,
                                 const SurrogateParams& params, double B,
                                 double grid_step) {
  const std::size_t K = params.size();
  if (K > 4) {
    throw std::invalid_argument("brute_force_reference: refuses K > 4");
  }
  if (!(grid_step > 0.0) || !(B > 0.0)) {
    throw std::invalid_argument("brute_force_reference: bad step or budget");
  }
  const std::size_t M =
      static_cast<std::size_t>(std::llround(std::floor(B / grid_step + 1e-9)));

  // per-arm value tables on the grid
  std::vector<std::vector<double>> val(K, std::vector<double>(M + 1));
  for (std::size_t i = 0; i < K; ++i) {
    for (std::size_t j = 0; j <= M; ++j) {
      const double xi = std::min(B, static_cast<double>(j) * grid_step);
      val[i][j] = params.p_bar[i] *
                  surrogate_cdf(family, xi, params.lambda_bar[i],
                                params.lambda_prime_bar[i]);
    }
  }

  std::vector<std::size_t> best(K, 0), cur(K, 0);
  double best_obj = -std::numeric_limits<double>::infinity();
  // objective is non-decreasing per coordinate, so only saturated grid
  // points (sum j_i = M) need visiting; the last coordinate absorbs the rest
  auto visit = [&](auto&& self, std::size_t arm, std::size_t left,
                   double acc) -> void {
    if (arm == K - 1) {
      cur[arm] = left;
      const double obj = acc + val[arm][left];
      if (obj > best_obj) {
        best_obj = obj;
        best = cur;
      }
      return;
    }
    for (std::size_t j = 0; j <= left; ++j) {
      cur[arm] = j;
      self(self, arm + 1, left - j, acc + val[arm][j]);
    }
  };
  visit(visit, 0, M, 0.0);

  Allocation a;
  a.x.resize(K);
  for (std::size_t i = 0; i < K; ++i) {
    a.x[i] = std::min(B, static_cast<double>(best[i]) * grid_step);
  }
  return a;
}

double surrogate_objective(const ThresholdFamily& family,
                           const SurrogateParams& params,
                           const Allocation& alloc) {
  double obj = 0.0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    obj += params.p_bar[i] * surrogate_cdf(family, alloc.x[i],
                                           params.lambda_bar[i],
                                           params.lambda_prime_bar[i]);
  }
  return obj;
}

}  // namespace censored_alloc
