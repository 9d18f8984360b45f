#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <vector>

#include "censored_alloc/threshold_model.hpp"
#include "test_oracles.hpp"

using namespace censored_alloc;

namespace {

ThresholdFamily exponential(double m, double M, double B) {
  ThresholdFamily f;
  f.kind = FamilyKind::Exponential;
  f.bounds = {m, M, B};
  return f;
}

ThresholdFamily weibull(double k, double m, double M, double B) {
  ThresholdFamily f;
  f.kind = FamilyKind::WeibullFixedShape;
  f.k = k;
  f.bounds = {m, M, B};
  return f;
}

}  // namespace

TEST_CASE("cdf closed forms") {
  const ThresholdFamily fe = exponential(0.5, 10.0, 1.0);
  CHECK(cdf(fe, 0.0, 1.0) == 0.0);
  CHECK(cdf(fe, 1.0, 1.0) == doctest::Approx(1.0 - std::exp(-1.0)).epsilon(1e-12));

  const ThresholdFamily fw = weibull(0.5, 0.5, 10.0, 4.0);
  CHECK(cdf(fw, 4.0, 1.0) == doctest::Approx(1.0 - std::exp(-2.0)).epsilon(1e-12));

  CHECK_THROWS_AS(cdf(fe, -0.5, 1.0), std::domain_error);
  CHECK_THROWS_AS(cdf(fe, 0.5, 100.0), std::domain_error);
}

TEST_CASE("quantile inverts the cdf") {
  const ThresholdFamily fe = exponential(0.5, 10.0, 2.0);
  CHECK(quantile(fe, 1.0, 0.0) == 0.0);
  CHECK(quantile(fe, 2.0, 1.0 - std::exp(-2.0)) == doctest::Approx(1.0).epsilon(1e-12));

  const ThresholdFamily fw = weibull(0.5, 0.5, 10.0, 4.0);
  test_oracle::XorShift rng(7);
  for (int i = 0; i < 200; ++i) {
    const double lam = rng.uniform(fw.bounds.lambda_min(), fw.bounds.lambda_max());
    const double u = rng.uniform();
    const double x = quantile(fw, lam, u);
    const double back = 1.0 - std::exp(-lam * std::pow(x, fw.k));
    CHECK(back == doctest::Approx(u).epsilon(1e-9));
  }
}

TEST_CASE("sampled thresholds follow the law (KS < 0.01 at 1e5 draws)") {
  const ThresholdFamily fe = exponential(0.5, 10.0, 1.0);
  const double lam = 2.0;
  RngStream rng(12345);
  const int n = 100000;
  std::vector<double> draws(n);
  for (int i = 0; i < n; ++i) draws[i] = sample_threshold(fe, lam, rng);
  std::sort(draws.begin(), draws.end());
  double ks = 0.0;
  for (int i = 0; i < n; ++i) {
    const double F = 1.0 - std::exp(-lam * draws[i]);
    ks = std::max(ks, std::abs(F - (i + 1.0) / n));
    ks = std::max(ks, std::abs(F - static_cast<double>(i) / n));
  }
  CHECK(ks < 0.01);
}

TEST_CASE("truncated mean: quadrature oracle and closed form agree") {
  const ThresholdFamily fe = exponential(0.5, 10.0, 1.0);
  const double mu = truncated_mean(fe, 1.0, 1.0);
  CHECK(mu == doctest::Approx(test_oracle::exp_truncated_mean(1.0, 1.0)).epsilon(1e-9));
  CHECK(mu == doctest::Approx(0.418023).epsilon(1e-5));

  // untruncated limit: mean -> 1/lambda for large B
  const ThresholdFamily fb = exponential(0.5, 40.0, 20.0);
  CHECK(std::abs(truncated_mean(fb, 1.0, 20.0) - 1.0) < 1e-4);

  // strictly decreasing in lambda on a grid
  const ThresholdFamily fg = exponential(0.5, 10.0, 1.0);
  double prev = truncated_mean(fg, fg.bounds.lambda_min(), 1.0);
  for (int i = 1; i <= 50; ++i) {
    const double lam = fg.bounds.lambda_min() +
                       (fg.bounds.lambda_max() - fg.bounds.lambda_min()) * i / 50.0;
    const double cur = truncated_mean(fg, lam, 1.0);
    CHECK(cur < prev);
    prev = cur;
  }
}

TEST_CASE("weibull truncated mean matches an independent quadrature") {
  const ThresholdFamily fw = weibull(0.7, 0.5, 10.0, 2.0);
  const double lam = 1.3, B = 2.0;
  auto xdg = [&](double x) {
    return lam * fw.k * std::pow(x, fw.k) * std::exp(-lam * std::pow(x, fw.k));
  };
  const double oracle = test_oracle::integrate(xdg, 0.0, B, 1e-12) /
                        (1.0 - std::exp(-lam * std::pow(B, fw.k)));
  CHECK(truncated_mean(fw, lam, B) == doctest::Approx(oracle).epsilon(1e-8));
}

TEST_CASE("invert_truncated_mean round trip and clamping") {
  const ThresholdFamily fe = exponential(0.5, 10.0, 2.0);
  const double B = 2.0;
  const double lam = (fe.bounds.m + fe.bounds.M) / (2.0 * B);
  CHECK(invert_truncated_mean(fe, truncated_mean(fe, lam, B), B) ==
        doctest::Approx(lam).epsilon(1e-8));

  // mu decreasing in lambda: below-range mu -> M/B, above-range -> m/B
  CHECK(invert_truncated_mean(fe, -1.0, B) ==
        doctest::Approx(fe.bounds.lambda_max()).epsilon(1e-8));
  CHECK(invert_truncated_mean(fe, B, B) ==
        doctest::Approx(fe.bounds.lambda_min()).epsilon(1e-8));

  const ThresholdFamily fw = weibull(0.8, 0.5, 8.0, 2.0);
  const double lw = 1.1;
  CHECK(invert_truncated_mean(fw, truncated_mean(fw, lw, B), B) ==
        doctest::Approx(lw).epsilon(1e-7));
}

TEST_CASE("surrogate consistency, closed form, and bias bound") {
  const ThresholdFamily fe = exponential(0.5, 10.0, 1.0);
  CHECK(surrogate_cdf(fe, 0.0, 2.0, 1.0) == doctest::Approx(0.5).epsilon(1e-12));

  test_oracle::XorShift rng(11);
  const double L_delta = 1.0 / fe.bounds.lambda_min();  // B/m
  for (int i = 0; i < 1000; ++i) {
    const double x = rng.uniform(0.0, 1.0);
    const double lam = rng.uniform(fe.bounds.lambda_min(), fe.bounds.lambda_max());
    const double lamp = rng.uniform(fe.bounds.lambda_min(), fe.bounds.lambda_max());
    CHECK(surrogate_cdf(fe, x, lam, lam) == cdf(fe, x, lam));
    CHECK(std::abs(surrogate_cdf(fe, x, lam, lamp) - cdf(fe, x, lam)) <=
          L_delta * std::abs(lam - lamp) + 1e-12);
    CHECK(surrogate_cdf(fe, x, lam, lamp) <= 1.0);
  }
}

TEST_CASE("surrogate marginal: formula, monotonicity, central differences") {
  const ThresholdFamily fe = exponential(0.5, 10.0, 1.0);
  CHECK(surrogate_marginal(fe, 0.0, 1.0, 1.0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(surrogate_marginal(fe, 0.3, 1.2, 2.0) ==
        doctest::Approx(2.0 * surrogate_marginal(fe, 0.3, 1.2, 1.0)).epsilon(1e-12));

  test_oracle::XorShift rng(23);
  for (int i = 0; i < 500; ++i) {
    const double x = rng.uniform(1e-4, 1.0 - 1e-4);
    const double lam = rng.uniform(fe.bounds.lambda_min(), fe.bounds.lambda_max());
    const double lamp = rng.uniform(fe.bounds.lambda_min(), fe.bounds.lambda_max());
    const double h = 1e-5;
    const double fd = (surrogate_cdf(fe, x + h, lam, lamp) -
                       surrogate_cdf(fe, x - h, lam, lamp)) /
                      (2.0 * h);
    CHECK(std::abs(fd - surrogate_marginal(fe, x, lam, lamp)) <= 1e-6);

    // boosting monotonicity
    const double l1 = rng.uniform(fe.bounds.lambda_min(), fe.bounds.lambda_max());
    const double l2 = rng.uniform(fe.bounds.lambda_min(), fe.bounds.lambda_max());
    const double lo = std::min(l1, l2), hi = std::max(l1, l2);
    CHECK(surrogate_marginal(fe, x, lam, lo) <= surrogate_marginal(fe, x, lam, hi));
    CHECK(surrogate_marginal(fe, x, lo, lamp) + 1e-15 >=
          surrogate_marginal(fe, x, hi, lamp));
  }

  // Weibull marginal with k < 1 is capped at x = 1e-9
  const ThresholdFamily fw = weibull(0.5, 0.5, 10.0, 4.0);
  CHECK(std::isfinite(surrogate_marginal(fw, 0.0, 1.0, 1.0)));
  CHECK(surrogate_marginal(fw, 0.0, 1.0, 1.0) ==
        surrogate_marginal(fw, 1e-9, 1.0, 1.0));
  test_oracle::XorShift r2(41);
  for (int i = 0; i < 200; ++i) {
    const double x = r2.uniform(0.05, 3.9);
    const double lam = r2.uniform(fw.bounds.lambda_min(), fw.bounds.lambda_max());
    const double lamp = r2.uniform(fw.bounds.lambda_min(), fw.bounds.lambda_max());
    const double h = 1e-5;
    const double fd = (surrogate_cdf(fw, x + h, lam, lamp) -
                       surrogate_cdf(fw, x - h, lam, lamp)) /
                      (2.0 * h);
    CHECK(std::abs(fd - surrogate_marginal(fw, x, lam, lamp)) <= 1e-6);
  }
}

TEST_CASE("surrogate cdf bounded and non-decreasing in x") {
  const ThresholdFamily fw = weibull(0.9, 0.5, 6.0, 3.0);
  test_oracle::XorShift rng(31);
  for (int i = 0; i < 200; ++i) {
    const double lam = rng.uniform(fw.bounds.lambda_min(), fw.bounds.lambda_max());
    const double lamp = rng.uniform(fw.bounds.lambda_min(), fw.bounds.lambda_max());
    double prev = surrogate_cdf(fw, 0.0, lam, lamp);
    CHECK(prev <= 1.0);
    for (int j = 1; j <= 40; ++j) {
      const double cur = surrogate_cdf(fw, 3.0 * j / 40.0, lam, lamp);
      CHECK(cur + 1e-15 >= prev);
      CHECK(cur <= 1.0);
      prev = cur;
    }
  }
}

TEST_CASE("exp_g shape: decreasing, convex, correct limits") {
  // g(0+) = 1/2, g'(0+) = -1/12
  CHECK(exp_g(1e-8) == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(exp_g_prime(1e-8) == doctest::Approx(-1.0 / 12.0).epsilon(1e-6));
  double prev_g = exp_g(0.01), prev_gp = exp_g_prime(0.01);
  for (int i = 1; i <= 10000; ++i) {
    const double v = 0.01 + i * (20.0 - 0.01) / 10000.0;
    const double g = exp_g(v), gp = exp_g_prime(v);
    CHECK(g < prev_g);    // strictly decreasing
    CHECK(gp > prev_gp);  // g'' > 0
    CHECK(gp < 0.0);
    prev_g = g;
    prev_gp = gp;
  }
}

TEST_CASE("constants: exponential closed forms") {
  const ThresholdFamily fe = exponential(1.0, 10.0, 1.0);
  const ConstantBundle c = constants(fe, 1.0);

  // D = |g'(10)| = |1/(4 sinh^2 5) - 1/100|
  const double sinh5 = std::sinh(5.0);
  const double d_oracle = std::abs(1.0 / (4.0 * sinh5 * sinh5) - 0.01);
  CHECK(c.D == doctest::Approx(d_oracle).epsilon(1e-12));
  CHECK(c.D == doctest::Approx(0.0099546).epsilon(1e-4));
  CHECK(c.L_mu == doctest::Approx(d_oracle).epsilon(1e-12));  // B = 1
  CHECK(c.L_lambda == 1.0);
  CHECK(c.L_Delta == 1.0);
  CHECK(c.L_tilde_lambda == doctest::Approx(10.0 * 1.0 * 2.0 / 1.0));
  CHECK(c.L_tilde_lambda_prime == 1.0);
  CHECK(c.G_max == 10.0);
  CHECK(c.mu_G == doctest::Approx(std::exp(-10.0)).epsilon(1e-12));
  CHECK(c.L_G == 100.0);
  CHECK_FALSE(c.numeric);
  c.require_positive();

  // -dxx G~ = lam lam' e^{-lam x} stays inside [mu_G, L_G] on a grid
  test_oracle::XorShift rng(5);
  for (int i = 0; i < 2000; ++i) {
    const double x = rng.uniform(0.0, 1.0);
    const double lam = rng.uniform(1.0, 10.0);
    const double lamp = rng.uniform(1.0, 10.0);
    const double curv = lam * lamp * std::exp(-lam * x);
    CHECK(curv >= c.mu_G - 1e-12);
    CHECK(curv <= c.L_G + 1e-12);
  }
}

TEST_CASE("constants: weibull numeric bundle is positive and flagged") {
  const ThresholdFamily fw = weibull(0.8, 0.5, 6.0, 3.0);
  const ConstantBundle c = constants(fw, 3.0);
  CHECK(c.numeric);
  c.require_positive();
  CHECK(c.L_Delta == doctest::Approx(3.0 / 0.5));
  CHECK(c.mu_G < c.L_G);
}

TEST_CASE("validity condition") {
  const ThresholdFamily fe = exponential(1.0, 10.0, 1.0);
  CHECK(check_validity_condition(fe, 1.0));
  // |g'| <= 1/12 < sqrt(3/8) everywhere: the exponential family always passes
  const ThresholdFamily tiny = exponential(1e-6, 1e-3, 1.0);
  CHECK(check_validity_condition(tiny, 1.0));
  CHECK(std::abs(exp_g_prime(1e-3)) < std::sqrt(3.0 / 8.0));
  // pure function: repeated calls agree
  CHECK(check_validity_condition(fe, 1.0) == check_validity_condition(fe, 1.0));
}
