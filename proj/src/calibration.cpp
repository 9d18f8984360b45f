#include "censored_alloc/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <stdexcept>

namespace censored_alloc {

namespace {

[[noreturn]] void calib_fail(const std::string& what) {
  throw std::runtime_error("calibration error: " + what);
}

double nearest_rank_value(const std::vector<double>& sorted, double q) {
  const std::size_t n = sorted.size();
  std::size_t rank = static_cast<std::size_t>(
      std::ceil(q * static_cast<double>(n) - 1e-12));
  rank = std::max<std::size_t>(1, std::min(n, rank));
  return sorted[rank - 1];
}

// Truncated-Weibull profile machinery. Z(lambda) = e^{-l a^k} - e^{-l b^k}.
struct TruncatedWeibullData {
  const std::vector<double>* x;
  double a, b;
};

double profile_loglik(const TruncatedWeibullData& d, double k, double lambda) {
  const double ak = std::pow(d.a, k), bk = std::pow(d.b, k);
  const double Z = std::exp(-lambda * ak) - std::exp(-lambda * bk);
  if (!(Z > 0.0)) return -std::numeric_limits<double>::infinity();
  double ll = 0.0;
  for (double xi : *d.x) {
    ll += std::log(lambda * k) + (k - 1.0) * std::log(xi) -
          lambda * std::pow(xi, k);
  }
  return ll - static_cast<double>(d.x->size()) * std::log(Z);
}

// d/dlambda loglik; strictly decreasing in lambda (exponential family).
double lambda_score(const TruncatedWeibullData& d, double k, double lambda) {
  const double ak = std::pow(d.a, k), bk = std::pow(d.b, k);
  const double ea = std::exp(-lambda * ak), eb = std::exp(-lambda * bk);
  const double Z = ea - eb;
  double sum_xk = 0.0;
  for (double xi : *d.x) sum_xk += std::pow(xi, k);
  const double n = static_cast<double>(d.x->size());
  return n / lambda - sum_xk + n * (ak * ea - bk * eb) / Z;
}

double solve_lambda(const TruncatedWeibullData& d, double k) {
  double sum_xk = 0.0;
  for (double xi : *d.x) sum_xk += std::pow(xi, k);
  double lam = static_cast<double>(d.x->size()) / sum_xk;  // untruncated MLE
  double lo = lam, hi = lam;
  for (int it = 0; it < 200 && lambda_score(d, k, lo) < 0.0; ++it) lo /= 2.0;
  for (int it = 0; it < 200 && lambda_score(d, k, hi) > 0.0; ++it) hi *= 2.0;
  for (int it = 0; it < 200 && (hi - lo) > 1e-12 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (lambda_score(d, k, mid) > 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace

std::vector<double> trim_quantiles(const std::vector<double>& samples,
                                   double lo, double hi) {
  if (samples.size() < 10) calib_fail("trim_quantiles needs >= 10 samples");
  if (!(lo < hi)) calib_fail("trim_quantiles needs lo < hi");
  std::vector<double> sorted = samples;
  std::sort(sorted.begin(), sorted.end());
  const double v_lo = lo <= 0.0 ? -std::numeric_limits<double>::infinity()
                                : nearest_rank_value(sorted, lo);
  const double v_hi = hi >= 1.0 ? std::numeric_limits<double>::infinity()
                                : nearest_rank_value(sorted, hi);
  std::vector<double> kept;
  kept.reserve(samples.size());
  for (double s : samples) {
    if (s >= v_lo && s <= v_hi) kept.push_back(s);
  }
  return kept;
}

WeibullFit fit_truncated_weibull(const std::vector<double>& samples, double a,
                                 double b) {
  if (samples.size() < 30) calib_fail("fit needs >= 30 samples");
  if (!(a >= 0.0) || !(b > a)) calib_fail("bad truncation support");
  for (double x : samples) {
    if (!(x > 0.0) || x < a - 1e-9 || x > b + 1e-9) {
      calib_fail("sample outside the truncation support");
    }
  }
  TruncatedWeibullData d{&samples, std::max(a, 1e-300), b};

  // golden-section maximization of the profile likelihood over the shape
  const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
  double lo = 0.05, hi = 10.0;
  double c = hi - gr * (hi - lo);
  double e = lo + gr * (hi - lo);
  double fc = profile_loglik(d, c, solve_lambda(d, c));
  double fe = profile_loglik(d, e, solve_lambda(d, e));
  int it = 0;
  for (; it < 500 && (hi - lo) > 1e-8 * std::max(1.0, lo); ++it) {
    if (fc > fe) {
      hi = e;
      e = c;
      fe = fc;
      c = hi - gr * (hi - lo);
      fc = profile_loglik(d, c, solve_lambda(d, c));
    } else {
      lo = c;
      c = e;
      fc = fe;
      e = lo + gr * (hi - lo);
      fe = profile_loglik(d, e, solve_lambda(d, e));
    }
  }
  if (it >= 500) {
    throw std::runtime_error(
        "fit error: truncated-Weibull shape search did not converge "
        "(interval [" + std::to_string(lo) + ", " + std::to_string(hi) + "])");
  }
  WeibullFit fit;
  fit.k = 0.5 * (lo + hi);
  fit.lambda = solve_lambda(d, fit.k);
  fit.loglik = profile_loglik(d, fit.k, fit.lambda);
  return fit;
}

double fit_truncated_weibull_fixed_k(const std::vector<double>& samples,
                                     double k, double a, double b) {
  if (samples.size() < 30) calib_fail("fit needs >= 30 samples");
  if (!(k > 0.0)) calib_fail("shape must be > 0");
  TruncatedWeibullData d{&samples, std::max(a, 1e-300), b};
  return solve_lambda(d, k);
}

DiscreteWeibullFit fit_discrete_weibull(const std::vector<long>& counts) {
  if (counts.size() < 30) calib_fail("fit needs >= 30 counts");
  bool any_nonzero = false;
  for (long c : counts) {
    if (c < 0) calib_fail("counts must be nonnegative");
    if (c > 0) any_nonzero = true;
  }
  if (!any_nonzero) throw std::runtime_error("fit error: all counts are zero");

  auto loglik = [&](double q, double k) {
    if (!(q > 1e-9) || !(q < 1.0 - 1e-9) || !(k > 0.05) || !(k > 0.0) ||
        k > 10.0) {
      return -std::numeric_limits<double>::infinity();
    }
    const double lq = std::log(q);
    double ll = 0.0;
    for (long c : counts) {
      const double n = static_cast<double>(c);
      const double s0 = std::exp(std::pow(n, k) * lq);
      const double s1 = std::exp(std::pow(n + 1.0, k) * lq);
      const double pmf = s0 - s1;
      if (!(pmf > 0.0)) return -std::numeric_limits<double>::infinity();
      ll += std::log(pmf);
    }
    return ll;
  };

  // Nelder-Mead on (logit q, log k)
  auto to_params = [](double u, double v) {
    return std::pair<double, double>{1.0 / (1.0 + std::exp(-u)), std::exp(v)};
  };
  auto f = [&](const std::pair<double, double>& z) {
    auto [q, k] = to_params(z.first, z.second);
    return -loglik(q, k);
  };

  const double mean =
      std::accumulate(counts.begin(), counts.end(), 0.0) /
      static_cast<double>(counts.size());
  const double q0 = std::min(0.999, std::max(1e-3, mean / (1.0 + mean)));
  std::pair<double, double> simplex[3] = {
      {std::log(q0 / (1.0 - q0)), 0.0},
      {std::log(q0 / (1.0 - q0)) + 0.5, 0.0},
      {std::log(q0 / (1.0 - q0)), 0.4}};
  double fv[3] = {f(simplex[0]), f(simplex[1]), f(simplex[2])};

  for (int it = 0; it < 2000; ++it) {
    int order[3] = {0, 1, 2};
    std::sort(order, order + 3, [&](int a2, int b2) { return fv[a2] < fv[b2]; });
    const auto &best = simplex[order[0]], &worst = simplex[order[2]];
    const double spread =
        std::max(std::abs(simplex[order[0]].first - simplex[order[2]].first),
                 std::abs(simplex[order[0]].second - simplex[order[2]].second));
    if (spread < 1e-6 && std::abs(fv[order[0]] - fv[order[2]]) < 1e-10) break;

    std::pair<double, double> centroid{
        0.5 * (simplex[order[0]].first + simplex[order[1]].first),
        0.5 * (simplex[order[0]].second + simplex[order[1]].second)};
    std::pair<double, double> refl{2.0 * centroid.first - worst.first,
                                   2.0 * centroid.second - worst.second};
    const double fr = f(refl);
    if (fr < fv[order[0]]) {
      std::pair<double, double> exp_pt{3.0 * centroid.first - 2.0 * worst.first,
                                       3.0 * centroid.second -
                                           2.0 * worst.second};
      const double fe2 = f(exp_pt);
      simplex[order[2]] = fe2 < fr ? exp_pt : refl;
      fv[order[2]] = std::min(fe2, fr);
    } else if (fr < fv[order[1]]) {
      simplex[order[2]] = refl;
      fv[order[2]] = fr;
    } else {
      std::pair<double, double> contr{
          0.5 * (centroid.first + worst.first),
          0.5 * (centroid.second + worst.second)};
      const double fcn = f(contr);
      if (fcn < fv[order[2]]) {
        simplex[order[2]] = contr;
        fv[order[2]] = fcn;
      } else {
        for (int j : {1, 2}) {
          simplex[order[j]] = {
              0.5 * (best.first + simplex[order[j]].first),
              0.5 * (best.second + simplex[order[j]].second)};
          fv[order[j]] = f(simplex[order[j]]);
        }
      }
    }
  }

  int best_i = 0;
  for (int j = 1; j < 3; ++j) {
    if (fv[j] < fv[best_i]) best_i = j;
  }
  auto [q, k] = to_params(simplex[best_i].first, simplex[best_i].second);
  if (q < 2e-9 || q > 1.0 - 2e-9 || k < 0.051 || k > 9.9) {
    throw std::runtime_error(
        "fit error: discrete-Weibull MLE hit a parameter boundary (q = " +
        std::to_string(q) + ", k = " + std::to_string(k) + ")");
  }
  return {q, k, -fv[best_i]};
}

double ks_statistic(std::vector<double> samples,
                    const std::function<double(double)>& cdf_at) {
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double ks = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double F = cdf_at(samples[i]);
    ks = std::max(ks, std::abs(F - static_cast<double>(i + 1) / n));
    ks = std::max(ks, std::abs(F - static_cast<double>(i) / n));
  }
  return ks;
}

namespace {

struct ArmData {
  std::string arm_id;
  std::vector<double> thresholds;
  std::vector<bool> successes;
};

}  // namespace

CalibrationResult build_instance(const std::vector<InteractionRecord>& records,
                                 std::size_t K_select, CalibrationMode mode) {
  if (K_select == 0) calib_fail("K_select must be >= 1");
  std::map<std::string, ArmData> arms;
  for (const InteractionRecord& r : records) {
    if (!(r.threshold_obs >= 0.0) || !std::isfinite(r.threshold_obs)) {
      calib_fail("threshold_obs must be finite and >= 0");
    }
    ArmData& a = arms[r.arm_id];
    a.arm_id = r.arm_id;
    a.thresholds.push_back(r.threshold_obs);
    a.successes.push_back(r.success);
  }

  CalibrationResult out;
  std::vector<FittedArm> fits;
  std::map<std::string, std::pair<double, double>> supports;
  std::vector<std::string> deficient;
  for (auto& [id, arm] : arms) {
    if (arm.thresholds.size() < 10) {
      deficient.push_back(id);
      continue;
    }
    std::vector<double> trimmed = trim_quantiles(arm.thresholds, 0.025, 0.975);
    if (trimmed.size() < 30) {
      deficient.push_back(id);
      continue;
    }
    // success rate on retained samples
    const double v_lo = *std::min_element(trimmed.begin(), trimmed.end());
    const double v_hi = *std::max_element(trimmed.begin(), trimmed.end());
    std::size_t kept = 0, correct = 0;
    for (std::size_t i = 0; i < arm.thresholds.size(); ++i) {
      if (arm.thresholds[i] >= v_lo && arm.thresholds[i] <= v_hi) {
        kept += 1;
        correct += arm.successes[i] ? 1 : 0;
      }
    }

    FittedArm fit;
    fit.arm_id = id;
    fit.n_samples = trimmed.size();
    fit.p = static_cast<double>(correct) / static_cast<double>(kept);
    if (mode == CalibrationMode::EdNet) {
      const WeibullFit w = fit_truncated_weibull(trimmed, v_lo, v_hi);
      fit.k = w.k;
      fit.lambda = w.lambda;
      const double ak = std::pow(std::max(v_lo, 1e-300), w.k);
      const double bk = std::pow(v_hi, w.k);
      const double Z = std::exp(-w.lambda * ak) - std::exp(-w.lambda * bk);
      fit.ks_stat = ks_statistic(trimmed, [&](double x) {
        return (std::exp(-w.lambda * ak) -
                std::exp(-w.lambda * std::pow(x, w.k))) /
               Z;
      });
      supports[id] = {v_lo, v_hi};
    } else {
      std::vector<long> counts;
      counts.reserve(trimmed.size());
      for (double x : trimmed) counts.push_back(std::lround(x));
      const DiscreteWeibullFit w = fit_discrete_weibull(counts);
      fit.k = w.k;
      fit.lambda = -std::log(w.q);  // q^{n^k} = e^{-lambda n^k}
      fit.ks_stat = ks_statistic(trimmed, [&](double x) {
        const double n1 = std::floor(x) + 1.0;
        return 1.0 - std::exp(-fit.lambda * std::pow(n1, w.k));
      });
      supports[id] = {v_lo, v_hi};
    }
    fits.push_back(fit);
  }

  if (fits.size() < K_select) {
    std::string msg = "insufficient coverage: need " +
                      std::to_string(K_select) + " arms with >= 30 post-trim "
                      "samples, have " + std::to_string(fits.size());
    if (!deficient.empty()) {
      msg += "; deficient arms:";
      for (const std::string& id : deficient) msg += " " + id;
    }
    calib_fail(msg);
  }

  std::stable_sort(fits.begin(), fits.end(),
                   [](const FittedArm& a, const FittedArm& b) {
                     if (a.ks_stat != b.ks_stat) return a.ks_stat < b.ks_stat;
                     return a.arm_id < b.arm_id;
                   });
  out.report = fits;
  std::vector<FittedArm> selected(fits.begin(), fits.begin() + K_select);
  std::stable_sort(selected.begin(), selected.end(),
                   [](const FittedArm& a, const FittedArm& b) {
                     return a.arm_id < b.arm_id;
                   });

  // one shared shape for the simulated family: median of the selected fits
  std::vector<double> ks;
  for (const FittedArm& f : selected) ks.push_back(f.k);
  std::sort(ks.begin(), ks.end());
  double shared_k = ks.size() % 2 == 1
                        ? ks[ks.size() / 2]
                        : 0.5 * (ks[ks.size() / 2 - 1] + ks[ks.size() / 2]);
  if (shared_k > 1.0) {
    out.warnings.push_back(
        "median shape k = " + std::to_string(shared_k) +
        " > 1: strong concavity fails and the implemented oracles do not "
        "apply; clamping the simulation shape to 1 (per-arm shapes kept in "
        "the fit report)");
    shared_k = 1.0;
  }
  out.shared_k = shared_k;

  // re-fit the rate per arm under the shared shape
  std::map<std::string, double> lambda_shared;
  for (const FittedArm& f : selected) {
    std::vector<double> trimmed;
    const ArmData& arm = arms[f.arm_id];
    const auto [a2, b2] = supports[f.arm_id];
    for (double x : arm.thresholds) {
      if (x >= a2 && x <= b2) trimmed.push_back(x);
    }
    if (mode == CalibrationMode::Criteo) {
      // continuous refit on the count grid keeps the survival at integer
      // points aligned with the discrete fit
      for (double& x : trimmed) x = std::max(x, 0.5);
    }
    lambda_shared[f.arm_id] =
        fit_truncated_weibull_fixed_k(trimmed, shared_k, a2, b2);
  }

  // per-user budgets over the selected arms
  std::set<std::string> selected_ids;
  for (const FittedArm& f : selected) selected_ids.insert(f.arm_id);
  std::map<std::string, std::map<std::string, double>> per_user;
  for (const InteractionRecord& r : records) {
    if (selected_ids.count(r.arm_id)) {
      per_user[r.user_id][r.arm_id] = r.threshold_obs;
    }
  }
  std::vector<double> budgets;
  for (const auto& [user, row] : per_user) {
    if (row.size() != selected_ids.size()) continue;  // incomplete coverage
    double b = 0.0;
    for (const auto& [arm, thr] : row) b += thr;
    if (b > 0.0) budgets.push_back(b);
  }
  if (budgets.empty()) {
    calib_fail("no user covers all selected arms; cannot build budgets");
  }

  InstanceSpec inst;
  inst.K = K_select;
  inst.family.kind = shared_k == 1.0 ? FamilyKind::Exponential
                                     : FamilyKind::WeibullFixedShape;
  inst.family.k = shared_k;
  double lam_min = std::numeric_limits<double>::infinity(), lam_max = 0.0;
  for (const FittedArm& f : selected) {
    const double l = lambda_shared[f.arm_id];
    lam_min = std::min(lam_min, l);
    lam_max = std::max(lam_max, l);
    inst.lambda.push_back(l);
    inst.p.push_back(f.p);
  }
  for (const FittedArm& f : selected) out.selected_arm_ids.push_back(f.arm_id);
  const double B_ref = *std::max_element(budgets.begin(), budgets.end());
  inst.family.bounds.B_ref = B_ref;
  inst.family.bounds.m = 0.5 * lam_min * B_ref;
  inst.family.bounds.M = 2.0 * lam_max * B_ref;
  if (mode == CalibrationMode::EdNet) {
    inst.budget.type = ScheduleType::KnownSequence;
    inst.budget.values = budgets;
  } else {
    inst.budget.type = ScheduleType::UnknownBounded;
    inst.budget.values = budgets;
    inst.budget.B_max = B_ref;
  }
  inst.horizon = budgets.size();
  for (double& l : inst.lambda) {
    const double clamped = inst.family.bounds.clamp_lambda(l);
    if (clamped != l) {
      out.warnings.push_back("lambda clamped into Lambda for an arm");
      l = clamped;
    }
  }
  inst.validate();
  out.instance = inst;
  return out;
}

}  // namespace censored_alloc
