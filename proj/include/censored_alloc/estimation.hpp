#pragma once

// Per-arm estimation from censored threshold feedback.
//
// An arm's estimation history is the list of (allocation x_u, success f_u)
// pairs from its own estimation rounds. With n = sum f_u successes and
// revealed thresholds summing to S:
//
//   mu_hat     = S / n                      (empirical truncated mean)
//   lambda_hat = mu^{-1}(mu_hat)            (mu(l) = E[X | X <= B_cap])
//   p_hat      = min(1, n / sum_u G(x_u, lambda_hat))
//
// The p_hat denominator is re-evaluated over the *entire* history at the
// current lambda_hat whenever lambda_hat moves. Confidence radii follow the
// Hoeffding rate sqrt(3 log t / (2 n)), i.e. alpha = t^{-3}:
//
//   eps_lambda = (B_cap / L_mu) sqrt(3 log t / (2 n))
//   eps_p      = (L_lambda/L_mu) (B_cap (1+p_hat) / C_hat) sqrt(3 log t/(2n))
//
// with C_hat = G(x_last, m/B_cap). boosted_params() clamps lambda_hat +/-
// eps_lambda into Lambda and p_hat +/- eps_p into [0,1].
//
// transformed_brackets() instead maps the Hoeffding interval
// mu_hat +/- B_cap sqrt(3 log t / (2n)) through the monotone mu^{-1},
// which is the exact confidence set implied by the same concentration
// event (no Lipschitz relaxation), and brackets p by Azuma on the success
// count combined with the lambda bracket:
//
//   p in [ (n - e_f) / sum_u G(x_u, l+),  (n + e_f) / sum_u G(x_u, l-) ],
//   e_f = sqrt(6 tau log t),  tau = history length.
//
// The policies run on these tighter brackets; the worst-case-constant radii
// above are kept as the reference interface.

#include <cstddef>
#include <optional>
#include <vector>

#include "censored_alloc/threshold_model.hpp"

namespace censored_alloc {

struct CensoredFeedback {
  bool success = false;
  std::optional<double> threshold;  // present iff success
};

struct EstimationSample {
  double x = 0.0;
  bool success = false;
};

struct ConfidenceRadii {
  double eps_lambda = 0.0;
  double eps_p = 0.0;
};

struct BoostedParams {
  double lambda_minus = 0.0;
  double lambda_plus = 0.0;
  double p_minus = 0.0;
  double p_plus = 1.0;
};

class ArmEstimator {
 public:
  ArmEstimator(const ThresholdFamily& family, double B_cap);

  // Records one estimation round. Throws on success feedback whose revealed
  // threshold exceeds the allocated budget.
  void update(double x, const CensoredFeedback& fb);

  // Worst-case Lipschitz radii at reward round t >= 2; (+inf, +inf)
  // before the first success.
  ConfidenceRadii confidence_radii(std::size_t t) const;

  // lambda_hat +/- eps_lambda clamped into Lambda, p_hat +/- eps_p into
  // [0, 1].
  BoostedParams boosted_params(std::size_t t) const;

  // mu-space transformed intervals (see file comment). scale multiplies the
  // underlying Hoeffding/Azuma widths; scale = 0 collapses to the point
  // estimates.
  BoostedParams transformed_brackets(std::size_t t, double scale) const;

  // sum_u G(x_u, lambda) over the full history.
  double denominator_at(double lambda) const;

  std::size_t n() const { return n_; }
  double sum_feedback() const { return sum_feedback_; }
  double mu_hat() const { return mu_hat_; }
  double lambda_hat() const { return lambda_hat_; }
  double p_hat() const { return p_hat_; }
  double B_cap() const { return B_cap_; }
  const std::vector<EstimationSample>& history() const { return history_; }
  const ThresholdFamily& family() const { return family_; }
  const ConstantBundle& constants_bundle() const { return consts_; }

 private:
  ThresholdFamily family_;
  double B_cap_;
  ConstantBundle consts_;
  std::vector<EstimationSample> history_;
  std::size_t n_ = 0;
  double sum_feedback_ = 0.0;
  double mu_hat_ = 0.0;
  double lambda_hat_;     // m/B_cap before the first success
  double p_hat_ = 1.0;    // optimistic before the first success
  double denom_hat_ = 0.0;  // sum_u G(x_u, lambda_hat_), kept incrementally
};

}  // namespace censored_alloc
