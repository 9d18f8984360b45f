#pragma once

// Parametric threshold families G(x, lambda), their truncated means and
// inverses, the two-parameter surrogate CDF used by the optimistic policies,
// and the Lipschitz / curvature constants attached to each family.
//
//   Exponential:          G(x, l) = 1 - exp(-l x)
//   Weibull, fixed shape: G(x, l) = 1 - exp(-l x^k)
//
// The exponential truncated mean has the closed form
//   mu(l) = B * g(l B),   g(v) = 1/v - 1/(e^v - 1),
// with g strictly decreasing and strictly convex on (0, inf), so mu is
// invertible by bisection. The Weibull truncated mean is evaluated by
// adaptive quadrature. Both families admit the survival-scaling surrogate
//   G~(x, l, l') = 1 - (l'/l) (1 - G(x, l)),
// which is consistent at l' = l, has marginal d/dx G~ non-decreasing in l'
// and non-increasing in l, and satisfies |G~ - G| <= (B/m) |l - l'|.
//
// All parameters live in Lambda = [m/B_ref, M/B_ref].

#include <cmath>
#include <stdexcept>

#include "censored_alloc/rng.hpp"

namespace censored_alloc {

struct ParamBounds {
  double m = 1.0;      // lower scale bound (v-units, v = lambda * B_ref)
  double M = 2.0;      // upper scale bound
  double B_ref = 1.0;  // budget that forms Lambda = [m/B_ref, M/B_ref]

  double lambda_min() const { return m / B_ref; }
  double lambda_max() const { return M / B_ref; }

  void validate() const;
  void require_lambda(double lambda) const;  // throws std::domain_error
  double clamp_lambda(double lambda) const;
};

enum class FamilyKind { Exponential, WeibullFixedShape };

struct ThresholdFamily {
  FamilyKind kind = FamilyKind::Exponential;
  double k = 1.0;  // Weibull shape, fixed per instance
  ParamBounds bounds;

  void validate() const;
  // The greedy/KKT oracles require a strongly concave surrogate, which
  // holds for the exponential family and for Weibull shapes k <= 1.
  bool strongly_concave() const {
    return kind == FamilyKind::Exponential || k <= 1.0;
  }
};

// Lipschitz and curvature constants of a family on [0, B] x Lambda^2.
// Exponential values are closed-form; Weibull values are extremized on a
// 10 x 10 x 10 grid of (x, lambda, lambda') and carry numeric = true.
struct ConstantBundle {
  double L_lambda = 0;              // |G(x,a) - G(x,b)| <= L_lambda |a - b|
  double L_mu = 0;                  // mu^{-1} is (1/L_mu)-Lipschitz
  double L_Delta = 0;               // sup_x |G~ - G| <= L_Delta |l - l'|
  double L_tilde_lambda = 0;        // Lipschitz of G~ in lambda
  double L_tilde_lambda_prime = 0;  // Lipschitz of G~ in lambda'
  double G_max = 0;                 // sup |d/dx G~|
  double mu_G = 0;                  // strong concavity: -d2/dx2 G~ >= mu_G
  double L_G = 0;                   // smoothness:       -d2/dx2 G~ <= L_G
  double D = 0;                     // exponential: |g'(M)|, so L_mu = B^2 D
  double L_g_lambda = 0;            // Lipschitz of d/dx G~ in lambda
  double L_g_lambda_prime = 0;      // Lipschitz of d/dx G~ in lambda'
  bool numeric = false;

  void require_positive() const;
};

// Kernel of the exponential truncated mean and its derivative.
//   exp_g(v)       = 1/v - 1/(e^v - 1)        (decreasing, in (0, 1/2))
//   exp_g_prime(v) = 1/(4 sinh^2(v/2)) - 1/v^2  (negative, increasing to 0)
double exp_g(double v);
double exp_g_prime(double v);

double cdf(const ThresholdFamily& family, double x, double lambda);
// Inverse CDF; u in [0, 1). Unbounded above (draws may exceed any budget).
double quantile(const ThresholdFamily& family, double lambda, double u);
double sample_threshold(const ThresholdFamily& family, double lambda,
                        RngStream& rng);
// E[X | X <= B] for X ~ G(., lambda).
double truncated_mean(const ThresholdFamily& family, double lambda, double B);
// Bisection on lambda in Lambda to 1e-10; mu_hat is clamped into the
// attainable range first, so out-of-range inputs land on the boundary.
double invert_truncated_mean(const ThresholdFamily& family, double mu_hat,
                             double B);
double surrogate_cdf(const ThresholdFamily& family, double x, double lambda,
                     double lambda_prime);
// d/dx of the surrogate. The Weibull marginal with k < 1 diverges at x = 0
// and is evaluated at max(x, 1e-9) instead.
double surrogate_marginal(const ThresholdFamily& family, double x,
                          double lambda, double lambda_prime);
ConstantBundle constants(const ThresholdFamily& family, double B);
// Exponential: |g'(M)| <= sqrt(3/8). Weibull: B L_lambda / L_mu >= sqrt(8/3)
// with the numeric constants.
bool check_validity_condition(const ThresholdFamily& family, double B);

namespace detail {

inline double power_arg(const ThresholdFamily& f, double x) {
  return f.kind == FamilyKind::Exponential ? x : std::pow(x, f.k);
}

inline double survival_unchecked(const ThresholdFamily& f, double x,
                                 double lambda) {
  return std::exp(-lambda * power_arg(f, x));
}

inline double cdf_unchecked(const ThresholdFamily& f, double x,
                            double lambda) {
  return -std::expm1(-lambda * power_arg(f, x));
}

}  // namespace detail

}  // namespace censored_alloc
