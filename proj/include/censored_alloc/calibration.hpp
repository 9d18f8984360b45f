#pragma once

// Instance construction from interaction logs.
//
// Per arm: nearest-rank quantile trimming, truncated-Weibull maximum
// likelihood (golden-section over the shape, monotone score bisection for
// the rate at each shape), one-sample KS ranking against the fitted
// truncated CDF, and empirical success rates. Per user: the session budget
// is the sum of that user's observed thresholds across the selected arms.
//
// Criteo-style count data is fitted with a discrete Weibull
// P(X >= n) = q^{n^k}, which is the integer grid of the continuous Weibull
// with rate -log(q); the exported instance uses that mapping.

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "censored_alloc/simulator.hpp"

namespace censored_alloc {

struct InteractionRecord {
  std::string user_id;
  std::string arm_id;
  double threshold_obs = 0.0;  // response time (ms) or exposures to click
  bool success = false;
};

struct FittedArm {
  std::string arm_id;
  double k = 0.0;
  double lambda = 0.0;
  double p = 0.0;
  double ks_stat = 0.0;
  std::size_t n_samples = 0;
};

enum class CalibrationMode { EdNet, Criteo };

// Retains samples inside the closed empirical [lo, hi] quantile interval,
// quantiles by the nearest-rank rule (rank ceil(q * n)); input order is
// preserved. lo <= 0 / hi >= 1 disable the respective cut.
std::vector<double> trim_quantiles(const std::vector<double>& samples,
                                   double lo, double hi);

struct WeibullFit {
  double k = 0.0;
  double lambda = 0.0;
  double loglik = 0.0;
};

// MLE of the [a, b]-truncated Weibull with density
// lambda k x^{k-1} e^{-lambda x^k} / (e^{-lambda a^k} - e^{-lambda b^k}).
WeibullFit fit_truncated_weibull(const std::vector<double>& samples, double a,
                                 double b);
// Rate-only MLE at a fixed shape.
double fit_truncated_weibull_fixed_k(const std::vector<double>& samples,
                                     double k, double a, double b);

struct DiscreteWeibullFit {
  double q = 0.0;
  double k = 0.0;
  double loglik = 0.0;
};

// MLE of P(X >= n) = q^{n^k} over nonnegative counts by Nelder-Mead.
DiscreteWeibullFit fit_discrete_weibull(const std::vector<long>& counts);

// One-sample KS statistic of `samples` against `cdf_at` (any monotone CDF).
double ks_statistic(std::vector<double> samples,
                    const std::function<double(double)>& cdf_at);

struct CalibrationResult {
  InstanceSpec instance;
  std::vector<FittedArm> report;  // heterogeneous per-arm fits, all arms kept
  // instance arm i is selected_arm_ids[i] (best-KS arms, id order)
  std::vector<std::string> selected_arm_ids;
  double shared_k = 1.0;  // median of the selected arms' shapes
  std::vector<std::string> warnings;
};

CalibrationResult build_instance(const std::vector<InteractionRecord>& records,
                                 std::size_t K_select, CalibrationMode mode);

}  // namespace censored_alloc
