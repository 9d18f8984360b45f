#include "censored_alloc/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace censored_alloc {

namespace {

double hoeffding_width(std::size_t t, std::size_t n) {
  // sqrt(3 log t / (2 n)); alpha = t^{-3} is baked in
  return std::sqrt(3.0 * std::log(static_cast<double>(t)) /
                   (2.0 * static_cast<double>(n)));
}

}  // namespace

ArmEstimator::ArmEstimator(const ThresholdFamily& family, double B_cap)
    : family_(family), B_cap_(B_cap), consts_(constants(family, B_cap)) {
  family_.validate();
  if (!(B_cap > 0.0)) {
    throw std::invalid_argument("ArmEstimator: B_cap must be > 0");
  }
  lambda_hat_ = family_.bounds.lambda_min();
}

void ArmEstimator::update(double x, const CensoredFeedback& fb) {
  if (!(x >= 0.0)) {
    throw std::invalid_argument("ArmEstimator::update: x must be >= 0");
  }
  if (fb.success) {
    if (!fb.threshold.has_value()) {
      throw std::invalid_argument(
          "inconsistent feedback: success without revealed threshold");
    }
    if (*fb.threshold > x * (1.0 + 1e-12) + 1e-12) {
      throw std::invalid_argument(
          "inconsistent feedback: revealed threshold exceeds allocation");
    }
  }
  history_.push_back({x, fb.success});

  if (fb.success) {
    n_ += 1;
    sum_feedback_ += *fb.threshold;
    mu_hat_ = sum_feedback_ / static_cast<double>(n_);
    lambda_hat_ = invert_truncated_mean(family_, mu_hat_, B_cap_);
    // lambda_hat moved: the p_hat denominator re-evaluates every past round
    denom_hat_ = denominator_at(lambda_hat_);
  } else {
    denom_hat_ += detail::cdf_unchecked(family_, x, lambda_hat_);
  }
  if (n_ >= 1 && denom_hat_ > 0.0) {
    p_hat_ = std::min(1.0, static_cast<double>(n_) / denom_hat_);
  }
}

double ArmEstimator::denominator_at(double lambda) const {
  double s = 0.0;
  for (const EstimationSample& e : history_) {
    s += detail::cdf_unchecked(family_, e.x, lambda);
  }
  return s;
}

ConfidenceRadii ArmEstimator::confidence_radii(std::size_t t) const {
  if (t < 2) {
    throw std::invalid_argument("confidence_radii: t must be >= 2");
  }
  constexpr double inf = std::numeric_limits<double>::infinity();
  if (n_ == 0 || history_.empty()) return {inf, inf};

  const double w = hoeffding_width(t, n_);
  const double eps_lambda = (B_cap_ / consts_.L_mu) * w;
  const double x_last = history_.back().x;
  const double c_hat =
      detail::cdf_unchecked(family_, x_last, family_.bounds.lambda_min());
  if (!(c_hat > 0.0)) return {eps_lambda, inf};
  const double eps_p = (consts_.L_lambda / consts_.L_mu) *
                       (B_cap_ * (1.0 + p_hat_) / c_hat) * w;
  return {eps_lambda, eps_p};
}

BoostedParams ArmEstimator::boosted_params(std::size_t t) const {
  const ConfidenceRadii r = confidence_radii(t);
  const ParamBounds& b = family_.bounds;
  BoostedParams out;
  if (n_ == 0) {
    out.lambda_minus = b.lambda_min();
    out.lambda_plus = b.lambda_max();
    out.p_minus = 0.0;
    out.p_plus = 1.0;
    return out;
  }
  out.lambda_minus = b.clamp_lambda(lambda_hat_ - r.eps_lambda);
  out.lambda_plus = b.clamp_lambda(lambda_hat_ + r.eps_lambda);
  out.p_minus = std::max(0.0, p_hat_ - r.eps_p);
  out.p_plus = std::min(1.0, p_hat_ + r.eps_p);
  return out;
}

BoostedParams ArmEstimator::transformed_brackets(std::size_t t,
                                                 double scale) const {
  const ParamBounds& b = family_.bounds;
  BoostedParams out;
  out.lambda_minus = b.lambda_min();
  out.lambda_plus = b.lambda_max();
  out.p_minus = 0.0;
  out.p_plus = 1.0;
  if (n_ == 0 || history_.empty()) return out;

  const double tt = static_cast<double>(std::max<std::size_t>(t, 2));
  const double eps_mu =
      scale * B_cap_ * std::sqrt(3.0 * std::log(tt) /
                                 (2.0 * static_cast<double>(n_)));
  // mu is decreasing in lambda, so the interval flips through mu^{-1}
  out.lambda_minus = invert_truncated_mean(family_, mu_hat_ + eps_mu, B_cap_);
  out.lambda_plus = invert_truncated_mean(family_, mu_hat_ - eps_mu, B_cap_);

  const double tau = static_cast<double>(history_.size());
  const double eps_f = scale * std::sqrt(6.0 * tau * std::log(tt));
  const double denom_plus = denominator_at(out.lambda_plus);
  const double denom_minus = denominator_at(out.lambda_minus);
  const double n = static_cast<double>(n_);
  out.p_minus = denom_plus > 0.0
                    ? std::min(1.0, std::max(0.0, (n - eps_f) / denom_plus))
                    : 0.0;
  out.p_plus = denom_minus > 0.0
                   ? std::min(1.0, std::max(0.0, (n + eps_f) / denom_minus))
                   : 1.0;
  return out;
}

}  // namespace censored_alloc
