#include "doctest.h"

#include <cmath>
#include <limits>

#include "censored_alloc/estimation.hpp"
#include "censored_alloc/rng.hpp"

using namespace censored_alloc;

namespace {

ThresholdFamily exponential(double m, double M, double B) {
  ThresholdFamily f;
  f.kind = FamilyKind::Exponential;
  f.bounds = {m, M, B};
  return f;
}

CensoredFeedback success_at(double threshold) {
  return {true, threshold};
}

CensoredFeedback censored() { return {false, std::nullopt}; }

// One synthetic estimation round at full budget.
void simulate_round(ArmEstimator& est, const ThresholdFamily& fam, double p,
                    double lam, double B, RngStream& rng) {
  const bool activated = rng.bernoulli(p);
  const double thr = sample_threshold(fam, lam, rng);
  const bool succ = activated && thr <= B;
  est.update(B, succ ? success_at(thr) : censored());
}

}  // namespace

TEST_CASE("single success sets the sample mean") {
  const ThresholdFamily fam = exponential(1.0, 25.0, 5.0);
  ArmEstimator est(fam, 5.0);
  est.update(5.0, success_at(1.7));
  CHECK(est.n() == 1);
  CHECK(est.mu_hat() == doctest::Approx(1.7));
  CHECK(est.history().size() == 1);
}

TEST_CASE("inconsistent feedback is rejected") {
  const ThresholdFamily fam = exponential(1.0, 25.0, 5.0);
  ArmEstimator est(fam, 5.0);
  CHECK_THROWS_AS(est.update(1.0, success_at(2.0)), std::invalid_argument);
  CHECK_THROWS_AS(est.update(1.0, CensoredFeedback{true, std::nullopt}),
                  std::invalid_argument);
}

TEST_CASE("defaults before the first success") {
  const ThresholdFamily fam = exponential(1.0, 25.0, 5.0);
  ArmEstimator est(fam, 5.0);
  CHECK(est.lambda_hat() == fam.bounds.lambda_min());
  CHECK(est.p_hat() == 1.0);
  est.update(5.0, censored());
  CHECK(est.p_hat() == 1.0);  // still no success
}

TEST_CASE("p_hat clips at one when every round succeeds with G ~ 1") {
  // large allocations and lambda well inside the range: G(x_u, lambda_hat)
  // near 1, so sum f / sum G >= 1 -> clipped
  const ThresholdFamily fam = exponential(1.0, 100.0, 10.0);
  ArmEstimator est(fam, 10.0);
  for (int i = 0; i < 20; ++i) {
    est.update(10.0, success_at(0.2 + 0.01 * i));
  }
  CHECK(est.p_hat() == 1.0);
}

TEST_CASE("re-evaluation semantics: a new lambda_hat rewrites the history") {
  const ThresholdFamily fam = exponential(1.0, 25.0, 5.0);
  ArmEstimator est(fam, 5.0);
  est.update(5.0, success_at(0.5));
  const double lam1 = est.lambda_hat();
  const double denom1 = detail::cdf_unchecked(fam, 5.0, lam1);
  CHECK(est.p_hat() == doctest::Approx(std::min(1.0, 1.0 / denom1)));

  // a much larger second threshold pulls mu_hat up and lambda_hat down;
  // BOTH history entries must be re-discounted at the new lambda_hat
  est.update(5.0, success_at(3.5));
  const double lam2 = est.lambda_hat();
  CHECK(lam2 < lam1);
  const double denom2 = 2.0 * detail::cdf_unchecked(fam, 5.0, lam2);
  CHECK(est.denominator_at(lam2) == doctest::Approx(denom2).epsilon(1e-12));
  CHECK(est.p_hat() == doctest::Approx(std::min(1.0, 2.0 / denom2)));
}

TEST_CASE("monte-carlo consistency: lambda within 0.05, p within 0.02") {
  const ThresholdFamily fam = exponential(1.0, 25.0, 5.0);
  const double p = 0.7, lam = 2.0, B = 5.0;
  ArmEstimator est(fam, B);
  RngStream rng(2024);
  for (int i = 0; i < 10000; ++i) simulate_round(est, fam, p, lam, B, rng);
  CHECK(std::abs(est.lambda_hat() - lam) <= 0.05);
  CHECK(std::abs(est.p_hat() - p) <= 0.02);
}

TEST_CASE("confidence radii: no data, monotonicity, closed form") {
  const ThresholdFamily fam = exponential(1.0, 10.0, 1.0);
  ArmEstimator est(fam, 1.0);
  const ConfidenceRadii empty = est.confidence_radii(10);
  CHECK(std::isinf(empty.eps_lambda));
  CHECK(std::isinf(empty.eps_p));
  CHECK_THROWS_AS(est.confidence_radii(1), std::invalid_argument);

  // n = 100 successes at full budget, t = e^3:
  // eps_lambda = (1/|g'(10)|) sqrt(4.5/100)
  for (int i = 0; i < 100; ++i) est.update(1.0, success_at(0.3));
  const std::size_t t = static_cast<std::size_t>(std::round(std::exp(3.0)));
  const double log_t = std::log(static_cast<double>(t));
  const ConfidenceRadii r = est.confidence_radii(t);
  const double d = std::abs(exp_g_prime(10.0));
  CHECK(r.eps_lambda ==
        doctest::Approx((1.0 / d) * std::sqrt(3.0 * log_t / 200.0))
            .epsilon(1e-12));
  // spot value with log t = 3 exactly (t = e^3 rounds to 20, log 20 != 3;
  // evaluate the formula itself)
  CHECK((1.0 / d) * std::sqrt(4.5 / 100.0) ==
        doctest::Approx(100.4561) .epsilon(1e-3));

  // radius monotonicity: decreasing in n, increasing in t
  ArmEstimator more(fam, 1.0);
  for (int i = 0; i < 400; ++i) more.update(1.0, success_at(0.3));
  CHECK(more.confidence_radii(t).eps_lambda < r.eps_lambda);
  CHECK(est.confidence_radii(4 * t).eps_lambda > r.eps_lambda);
  CHECK(more.confidence_radii(t).eps_p < est.confidence_radii(t).eps_p);
}

TEST_CASE("boosted params: clamps, zero-radius collapse") {
  const ThresholdFamily fam = exponential(1.0, 10.0, 1.0);
  ArmEstimator est(fam, 1.0);
  const BoostedParams vac = est.boosted_params(100);
  CHECK(vac.lambda_minus == fam.bounds.lambda_min());
  CHECK(vac.lambda_plus == fam.bounds.lambda_max());
  CHECK(vac.p_minus == 0.0);
  CHECK(vac.p_plus == 1.0);

  // huge n makes the radii tiny; the interval collapses onto the estimate
  for (int i = 0; i < 200000; ++i) est.update(1.0, success_at(0.35));
  const BoostedParams tight = est.boosted_params(2);
  CHECK(tight.lambda_plus - tight.lambda_minus < 0.2);
  CHECK(tight.lambda_minus <= est.lambda_hat());
  CHECK(tight.lambda_plus >= est.lambda_hat());
}

TEST_CASE("transformed brackets: vacuous without data, exact at scale 0") {
  const ThresholdFamily fam = exponential(1.0, 10.0, 1.0);
  ArmEstimator est(fam, 1.0);
  const BoostedParams vac = est.transformed_brackets(50, 1.0);
  CHECK(vac.lambda_minus == fam.bounds.lambda_min());
  CHECK(vac.lambda_plus == fam.bounds.lambda_max());

  for (int i = 0; i < 50; ++i) {
    est.update(1.0, i % 3 == 0 ? censored() : success_at(0.25 + 0.002 * i));
  }
  const BoostedParams pt = est.transformed_brackets(1000, 0.0);
  CHECK(pt.lambda_minus == doctest::Approx(est.lambda_hat()).epsilon(1e-9));
  CHECK(pt.lambda_plus == doctest::Approx(est.lambda_hat()).epsilon(1e-9));
  CHECK(pt.p_minus == doctest::Approx(est.p_hat()).epsilon(1e-9));
  CHECK(pt.p_plus == doctest::Approx(est.p_hat()).epsilon(1e-9));

  const BoostedParams br = est.transformed_brackets(1000, 1.0);
  CHECK(br.lambda_minus <= est.lambda_hat());
  CHECK(br.lambda_plus >= est.lambda_hat());
  CHECK(br.p_minus <= est.p_hat());
  CHECK(br.p_plus + 1e-12 >= est.p_hat());
  // contained in the worst-case Lipschitz interval
  const BoostedParams wc = est.boosted_params(1000);
  CHECK(br.lambda_minus + 1e-12 >= wc.lambda_minus);
  CHECK(br.lambda_plus <= wc.lambda_plus + 1e-12);
}

TEST_CASE("coverage smoke: true lambda inside the brackets (300 reps)") {
  const ThresholdFamily fam = exponential(1.0, 25.0, 5.0);
  const double p = 0.7, lam = 2.0, B = 5.0;
  int cover_wc = 0, cover_tr = 0;
  const int reps = 300;
  for (int rep = 0; rep < reps; ++rep) {
    ArmEstimator est(fam, B);
    RngStream rng(derive_stream_seed(77, rep, 0));
    int rounds = 0;
    while (est.n() < 200 && rounds < 600) {
      simulate_round(est, fam, p, lam, B, rng);
      rounds += 1;
    }
    const BoostedParams wc = est.boosted_params(10000);
    const BoostedParams tr = est.transformed_brackets(10000, 1.0);
    cover_wc += (wc.lambda_minus <= lam && lam <= wc.lambda_plus) ? 1 : 0;
    cover_tr += (tr.lambda_minus <= lam && lam <= tr.lambda_plus) ? 1 : 0;
  }
  CHECK(cover_wc == reps);
  CHECK(cover_tr >= static_cast<int>(0.99 * reps));
}
