#include "censored_alloc/threshold_model.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

namespace censored_alloc {

namespace {

[[noreturn]] void domain_fail(const std::string& what) {
  throw std::domain_error("domain error: " + what);
}

// Adaptive Simpson with absolute tolerance, depth-limited.
double simpson(double a, double b, double fa, double fm, double fb) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

double adaptive_simpson_rec(const std::function<double(double)>& f, double a,
                            double b, double fa, double fm, double fb,
                            double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = simpson(a, m, fa, flm, fm);
  const double right = simpson(m, b, fm, frm, fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) {
    return left + right + delta / 15.0;
  }
  return adaptive_simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol,
                              depth - 1) +
         adaptive_simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol,
                              depth - 1);
}

double adaptive_simpson(const std::function<double(double)>& f, double a,
                        double b, double tol) {
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  const double whole = simpson(a, b, fa, fm, fb);
  return adaptive_simpson_rec(f, a, b, fa, fm, fb, whole, tol, 48);
}

constexpr double kWeibullMarginalEps = 1e-9;  // cap point for k < 1 at x = 0
constexpr double kQuadTol = 1e-10;

}  // namespace

void ParamBounds::validate() const {
  if (!(m > 0.0) || !(M > m)) {
    throw std::invalid_argument("ParamBounds: need 0 < m < M");
  }
  if (!(B_ref > 0.0)) {
    throw std::invalid_argument("ParamBounds: need B_ref > 0");
  }
}

void ParamBounds::require_lambda(double lambda) const {
  const double lo = lambda_min(), hi = lambda_max();
  const double slack = 1e-9 * hi + 1e-300;
  if (!(lambda >= lo - slack) || !(lambda <= hi + slack)) {
    domain_fail("lambda outside [m/B_ref, M/B_ref]");
  }
}

double ParamBounds::clamp_lambda(double lambda) const {
  return std::min(lambda_max(), std::max(lambda_min(), lambda));
}

void ThresholdFamily::validate() const {
  bounds.validate();
  if (kind == FamilyKind::WeibullFixedShape && !(k > 0.0)) {
    throw std::invalid_argument("ThresholdFamily: Weibull shape must be > 0");
  }
}

void ConstantBundle::require_positive() const {
  const double vals[] = {L_lambda, L_mu,  L_Delta, L_tilde_lambda,
                         L_tilde_lambda_prime, G_max, mu_G,    L_G,
                         D};
  for (double v : vals) {
    if (!(v > 0.0)) {
      throw std::runtime_error("ConstantBundle: non-positive constant");
    }
  }
}

double exp_g(double v) {
  if (!(v > 0.0)) domain_fail("exp_g needs v > 0");
  if (v < 1e-3) {
    // 1/v - 1/(e^v - 1) = 1/2 - v/12 + v^3/720 - ...
    return 0.5 - v / 12.0 + v * v * v / 720.0;
  }
  return 1.0 / v - 1.0 / std::expm1(v);
}

double exp_g_prime(double v) {
  if (!(v > 0.0)) domain_fail("exp_g_prime needs v > 0");
  if (v < 1e-2) {
    // -1/12 + v^2/240 - v^4/6048
    return -1.0 / 12.0 + v * v / 240.0 - v * v * v * v / 6048.0;
  }
  const double q = std::exp(-v);
  const double om = -std::expm1(-v);  // 1 - e^{-v}
  return q / (om * om) - 1.0 / (v * v);
}

namespace {

void require_x(const ThresholdFamily& f, double x) {
  const double hi = f.bounds.B_ref;
  if (!(x >= -1e-12) || !(x <= hi * (1.0 + 1e-9) + 1e-12)) {
    domain_fail("x outside [0, B_ref]");
  }
}

}  // namespace

double cdf(const ThresholdFamily& family, double x, double lambda) {
  family.bounds.require_lambda(lambda);
  require_x(family, x);
  return detail::cdf_unchecked(family, std::max(x, 0.0), lambda);
}

double quantile(const ThresholdFamily& family, double lambda, double u) {
  family.bounds.require_lambda(lambda);
  if (!(u >= 0.0) || !(u < 1.0)) domain_fail("quantile needs u in [0,1)");
  const double base = -std::log1p(-u) / lambda;
  if (family.kind == FamilyKind::Exponential) return base;
  return std::pow(base, 1.0 / family.k);
}

double sample_threshold(const ThresholdFamily& family, double lambda,
                        RngStream& rng) {
  return quantile(family, lambda, rng.uniform01());
}

double truncated_mean(const ThresholdFamily& family, double lambda, double B) {
  family.bounds.require_lambda(lambda);
  if (!(B > 0.0)) domain_fail("truncated_mean needs B > 0");
  if (family.kind == FamilyKind::Exponential) {
    return B * exp_g(lambda * B);
  }
  const double GB = detail::cdf_unchecked(family, B, lambda);
  if (!(GB > 0.0)) {
    throw std::invalid_argument("degenerate input: G(B, lambda) = 0");
  }
  const double k = family.k;
  // integrand x dG = lambda k x^k e^{-lambda x^k} dx, finite on [0, B]
  auto f = [&](double x) {
    const double xk = std::pow(x, k);
    return lambda * k * xk * std::exp(-lambda * xk);
  };
  return adaptive_simpson(f, 0.0, B, kQuadTol) / GB;
}

double invert_truncated_mean(const ThresholdFamily& family, double mu_hat,
                             double B) {
  if (!(B > 0.0)) domain_fail("invert_truncated_mean needs B > 0");
  const double lam_lo = family.bounds.lambda_min();
  const double lam_hi = family.bounds.lambda_max();
  // mu is decreasing in lambda: attainable range is [mu(hi), mu(lo)].
  const double mu_min = truncated_mean(family, lam_hi, B);
  const double mu_max = truncated_mean(family, lam_lo, B);
  const double target = std::min(mu_max, std::max(mu_min, mu_hat));

  if (family.kind == FamilyKind::Exponential) {
    // bisect g(v) = target / B on v in [m', M'] with v = lambda * B
    double lo = lam_lo * B, hi = lam_hi * B;
    const double goal = target / B;
    for (int it = 0; it < 200 && (hi - lo) > 1e-10 * B * 0.5; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (exp_g(mid) > goal) {
        lo = mid;  // g decreasing: value too large -> lambda larger
      } else {
        hi = mid;
      }
    }
    return 0.5 * (lo + hi) / B;
  }

  double lo = lam_lo, hi = lam_hi;
  for (int it = 0; it < 200 && (hi - lo) > 1e-10 * 0.5; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (truncated_mean(family, mid, B) > target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

double surrogate_cdf(const ThresholdFamily& family, double x, double lambda,
                     double lambda_prime) {
  family.bounds.require_lambda(lambda);
  family.bounds.require_lambda(lambda_prime);
  require_x(family, x);
  const double s = lambda_prime / lambda;
  if (s == 1.0) {
    // bit-exact consistency with cdf at lambda' = lambda
    return detail::cdf_unchecked(family, std::max(x, 0.0), lambda);
  }
  return 1.0 - s * detail::survival_unchecked(family, std::max(x, 0.0), lambda);
}

double surrogate_marginal(const ThresholdFamily& family, double x,
                          double lambda, double lambda_prime) {
  family.bounds.require_lambda(lambda);
  family.bounds.require_lambda(lambda_prime);
  require_x(family, x);
  if (family.kind == FamilyKind::Exponential) {
    return lambda_prime * std::exp(-lambda * std::max(x, 0.0));
  }
  const double k = family.k;
  const double xs = std::max(x, kWeibullMarginalEps);
  return lambda_prime * k * std::pow(xs, k - 1.0) *
         std::exp(-lambda * std::pow(xs, k));
}

namespace {

ConstantBundle exponential_constants(const ParamBounds& b, double B) {
  const double m = b.m, M = b.M;
  ConstantBundle c;
  c.D = std::abs(exp_g_prime(M));
  c.L_lambda = B;
  c.L_mu = B * B * c.D;
  c.L_Delta = B / m;
  c.L_tilde_lambda = M * B * (m + 1.0) / (m * m);
  c.L_tilde_lambda_prime = B / m;
  c.G_max = M / B;
  c.mu_G = m * m * std::exp(-M) / (B * B);
  c.L_G = M * M / (B * B);
  c.L_g_lambda = M;
  c.L_g_lambda_prime = 1.0;
  c.numeric = false;
  return c;
}

// Weibull constants by extremization over a 10x10x10 grid of (x, lambda,
// lambda'); x is log-spaced on [B * 1e-3, B] to stay clear of the k < 1
// singularity at 0, lambda and lambda' are linear on Lambda.
ConstantBundle weibull_constants(const ThresholdFamily& fam, double B) {
  const ParamBounds& b = fam.bounds;
  const double k = fam.k;
  const int N = 10;
  std::vector<double> xs(N), ls(N);
  for (int i = 0; i < N; ++i) {
    xs[i] = B * std::pow(1e-3, 1.0 - static_cast<double>(i) / (N - 1));
    ls[i] = b.lambda_min() +
            (b.lambda_max() - b.lambda_min()) * i / (N - 1);
  }

  ConstantBundle c;
  c.numeric = true;
  c.L_Delta = B / b.m;                // exact for the scaling surrogate
  c.L_tilde_lambda_prime = B / b.m;   // sup (1/lambda) e^{-lambda x^k}

  double L_lambda = 0, L_tl = 0, G_max = 0, mu_G =
      std::numeric_limits<double>::infinity(), L_G = 0, L_gl = 0, L_glp = 0;
  for (double x : xs) {
    const double xk = std::pow(x, k);
    for (double lam : ls) {
      const double e = std::exp(-lam * xk);
      L_lambda = std::max(L_lambda, xk * e);          // |d/dlambda G|
      L_glp = std::max(L_glp, k * std::pow(x, k - 1.0) * e);
      for (double lp : ls) {
        const double s = lp / lam;
        // d/dlambda G~ = s e^{-lam x^k} (1/lam + x^k)
        L_tl = std::max(L_tl, s * e * (1.0 / lam + xk));
        const double marg = lp * k * std::pow(x, k - 1.0) * e;
        G_max = std::max(G_max, marg);
        // -d2/dx2 G~ = s lam k e^{-lam x^k} ((1-k) x^{k-2} + lam k x^{2k-2})
        const double curv =
            s * lam * k * e *
            ((1.0 - k) * std::pow(x, k - 2.0) +
             lam * k * std::pow(x, 2.0 * k - 2.0));
        mu_G = std::min(mu_G, curv);
        L_G = std::max(L_G, curv);
        // |d/dlambda g~| = lp k x^{k-1} x^k e^{-lam x^k}
        L_gl = std::max(L_gl, lp * k * std::pow(x, k - 1.0) * xk * e);
      }
    }
  }
  c.L_lambda = L_lambda;
  c.L_tilde_lambda = L_tl;
  c.G_max = G_max;
  c.mu_G = mu_G;
  c.L_G = L_G;
  c.L_g_lambda = L_gl;
  c.L_g_lambda_prime = L_glp;

  // L_mu = min |d mu / d lambda| over Lambda, central differences.
  double min_slope = std::numeric_limits<double>::infinity();
  const double h = (b.lambda_max() - b.lambda_min()) * 1e-5;
  for (double lam : ls) {
    const double l1 = std::max(b.lambda_min(), lam - h);
    const double l2 = std::min(b.lambda_max(), lam + h);
    const double slope = std::abs(truncated_mean(fam, l2, B) -
                                  truncated_mean(fam, l1, B)) /
                         (l2 - l1);
    min_slope = std::min(min_slope, slope);
  }
  c.L_mu = min_slope;
  c.D = c.L_mu / (B * B);
  return c;
}

}  // namespace

ConstantBundle constants(const ThresholdFamily& family, double B) {
  family.validate();
  if (!(B > 0.0)) domain_fail("constants need B > 0");
  if (family.kind == FamilyKind::Exponential) {
    return exponential_constants(family.bounds, B);
  }
  return weibull_constants(family, B);
}

bool check_validity_condition(const ThresholdFamily& family, double B) {
  if (family.kind == FamilyKind::Exponential) {
    return std::abs(exp_g_prime(family.bounds.M)) <= std::sqrt(3.0 / 8.0);
  }
  const ConstantBundle c = constants(family, B);
  return B * c.L_lambda / c.L_mu >= std::sqrt(8.0 / 3.0);
}

}  // namespace censored_alloc
