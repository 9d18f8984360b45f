#pragma once

// Budget-constrained separable concave maximization
//
//   max_x  sum_i p_i * G~(x_i, lambda_i, lambda'_i)   s.t.  sum_i x_i <= B
//
// solved three ways: a closed-form KKT water-filling for the exponential
// surrogate (x_i = max(0, log(p_i lambda'_i / nu) / lambda_i) with nu found
// by bisection), a Delta-discretized greedy that allocates each step to the
// largest marginal gain, and an exhaustive grid reference for K <= 4.
// Ties break toward the lowest arm index everywhere.

#include <cstddef>
#include <vector>

#include "censored_alloc/threshold_model.hpp"

namespace censored_alloc {

struct Allocation {
  std::vector<double> x;
  // Set when every arm has zero surrogate mass (all p_i lambda'_i = 0); the
  // returned split is uniform and any allocation is optimal.
  bool no_signal = false;

  double total() const;
};

struct SurrogateParams {
  std::vector<double> p_bar;
  std::vector<double> lambda_bar;
  std::vector<double> lambda_prime_bar;

  std::size_t size() const { return p_bar.size(); }
  void validate(const ParamBounds& bounds) const;
};

// Hands out budget in requested increments without revealing the total.
// MG-UCB-Delta consumes one of these instead of reading the round budget.
class BudgetMeter {
 public:
  explicit BudgetMeter(double budget);

  bool has_more() const { return remaining_ > 0.0; }
  // Grants min(amount, remaining); never over-draws.
  double take(double amount);
  double dispensed() const { return dispensed_; }

 private:
  double remaining_;
  double dispensed_ = 0.0;
};

enum class SolveMethod { KktExponential, Greedy };

// Closed-form KKT solve of max sum p_i (1 - e^{-lambda_i x_i}).
Allocation solve_exponential_kkt(const std::vector<double>& p,
                                 const std::vector<double>& lambda, double B);

// Greedy water-filling at step delta: each increment goes to the arm whose
// discrete marginal gain p_i [G~(x_i + delta) - G~(x_i)] is largest, lowest
// index on ties, arms with p_i = 0 excluded. Concavity of G~ in x makes the
// per-arm gain sequences non-increasing, so the procedure is optimal on the
// delta grid.
Allocation greedy_waterfill(const ThresholdFamily& family,
                            const SurrogateParams& params, double B,
                            double delta);
Allocation greedy_waterfill_metered(const ThresholdFamily& family,
                                    const SurrogateParams& params,
                                    BudgetMeter& meter, double delta);

// delta is only read for SolveMethod::Greedy; delta <= 0 selects B * 1e-4.
Allocation solve_surrogate(const ThresholdFamily& family,
                           const SurrogateParams& params, double B,
                           SolveMethod method, double delta = 0.0);

// Exhaustive grid search over the budget simplex; refuses K > 4.
Allocation brute_force_reference(const ThresholdFamily& family,
                                 const SurrogateParams& params, double B,
                                 double grid_step);

double surrogate_objective(const ThresholdFamily& family,
                           const SurrogateParams& params,
                           const Allocation& alloc);

}  // namespace censored_alloc
