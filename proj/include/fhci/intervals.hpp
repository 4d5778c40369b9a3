#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fhci/estimation.hpp"
#include "fhci/normal.hpp"
#include "fhci/parallel.hpp"
#include "fhci/rng.hpp"

namespace fhci {

/// Estimators of A that can feed a Cox-type or bootstrap interval.
enum class VarianceEstimator { REML, ANOVA, LiLahiri, YL_GLS, YL_OLS };

inline std::string_view to_string(VarianceEstimator e) {
  switch (e) {
    case VarianceEstimator::REML: return "reml";
    case VarianceEstimator::ANOVA: return "anova";
    case VarianceEstimator::LiLahiri: return "ll";
    case VarianceEstimator::YL_GLS: return "yl-gls";
    case VarianceEstimator::YL_OLS: return "yl-ols";
  }
  return "?";
}

inline bool area_specific(VarianceEstimator e) {
  return e == VarianceEstimator::YL_GLS || e == VarianceEstimator::YL_OLS;
}

/// Centre pairing: YL_OLS intervals use the OLS-based EB estimator, all
/// others the GLS-based one.
inline BetaMethod centre_beta_method(VarianceEstimator e) {
  return e == VarianceEstimator::YL_OLS ? BetaMethod::OLS : BetaMethod::GLS;
}

inline AdjustmentFactor adjustment_for(VarianceEstimator e, std::size_t area, double z) {
  switch (e) {
    case VarianceEstimator::REML: return AdjustmentFactor::reml();
    case VarianceEstimator::LiLahiri: return AdjustmentFactor::li_lahiri();
    case VarianceEstimator::YL_GLS: return AdjustmentFactor::yl_gls(area, z);
    case VarianceEstimator::YL_OLS: return AdjustmentFactor::yl_ols(area, z);
    case VarianceEstimator::ANOVA: break;
  }
  throw Error(ErrorCode::InvalidArgument, "ANOVA is a moment estimator, not an adjustment");
}

/// A_hat from the estimator; `area` and `z` matter only for the YL kinds.
inline double estimate_A(const FayHerriotDataset& data, VarianceEstimator e, std::size_t area,
                         double z, const EstimatorOptions& opt = {}) {
  if (e == VarianceEstimator::ANOVA) return anova_estimate(data);
  return estimate_variance(data, adjustment_for(e, area, z), opt).A_hat;
}

struct IntervalResult {
  std::string area;
  double lower = 0.0;
  double upper = 0.0;
  double half_width = 0.0;
  std::string method;
  double level = 0.95;
  double A_used = 0.0;
  std::size_t n_bootstrap = 0;

  double length() const { return upper - lower; }
  bool contains(double theta) const { return lower <= theta && theta <= upper; }
};

inline void require_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw Error(ErrorCode::InvalidAlpha, "alpha must lie in (0, 1)");
  }
}

/// y_i +- z_{alpha/2} sqrt(D_i); exact coverage.
inline IntervalResult direct_interval(double y, double D, double alpha) {
  require_alpha(alpha);
  if (!(D > 0.0)) throw Error(ErrorCode::InvalidArgument, "D must be positive");
  const double hw = normal::z_half(alpha) * std::sqrt(D);
  IntervalResult r;
  r.lower = y - hw;
  r.upper = y + hw;
  r.half_width = hw;
  r.method = "direct";
  r.level = 1.0 - alpha;
  r.A_used = std::numeric_limits<double>::infinity();
  return r;
}

inline IntervalResult direct_interval(const FayHerriotDataset& data, std::size_t i, double alpha) {
  IntervalResult r = direct_interval(data.y(i), data.D(i), alpha);
  r.area = data.ids()[i];
  return r;
}

/// theta_EB(A_hat) +- z_{alpha/2} sigma_i(A_hat) for a given A_hat.
inline IntervalResult cox_interval(const FayHerriotDataset& data, std::size_t i, double A_hat,
                                   BetaMethod beta_method, double alpha,
                                   std::string method = "cox") {
  require_alpha(alpha);
  const RegressionFit fit = fit_regression(data, A_hat, beta_method);
  const EbPointEstimate eb = eb_estimate(data, i, A_hat, fit.beta_hat);
  const double hw = normal::z_half(alpha) * eb.sigma;
  IntervalResult r;
  r.area = data.ids()[i];
  r.lower = eb.theta_eb - hw;
  r.upper = eb.theta_eb + hw;
  r.half_width = hw;
  r.method = std::move(method);
  r.level = 1.0 - alpha;
  r.A_used = A_hat;
  return r;
}

/// Cox-type interval with A estimated by `estimator`.
inline IntervalResult cox_interval(const FayHerriotDataset& data, std::size_t i,
                                   VarianceEstimator estimator, double alpha,
                                   const EstimatorOptions& opt = {}) {
  require_alpha(alpha);
  const double z = normal::z_half(alpha);
  const double A_hat = estimate_A(data, estimator, i, z, opt);
  return cox_interval(data, i, A_hat, centre_beta_method(estimator), alpha,
                      "cox-" + std::string(to_string(estimator)));
}

/// Quantile of a sorted sample with plotting positions (k - 0.5)/n and linear
/// interpolation between adjacent order statistics.
inline double empirical_quantile(std::span<const double> sorted, double u) {
  const std::size_t n = sorted.size();
  if (n == 0) throw Error(ErrorCode::InvalidArgument, "empty sample");
  const double h = u * static_cast<double>(n) + 0.5;  // 1-based position
  if (h <= 1.0) return sorted.front();
  if (h >= static_cast<double>(n)) return sorted.back();
  const auto k = static_cast<std::size_t>(std::floor(h));
  const double frac = h - static_cast<double>(k);
  return sorted[k - 1] + frac * (sorted[k] - sorted[k - 1]);
}

struct BootstrapOptions {
  std::size_t B = 6000;
  VarianceEstimator estimator = VarianceEstimator::LiLahiri;
  double alpha = 0.05;
  std::uint64_t seed = 1;
  std::size_t threads = 1;
  /// Use this A in place of re-estimating it in every replicate.
  std::optional<double> known_A;
  EstimatorOptions estimator_options{};
};

/// Bootstrap pivots t* = (theta*_i - theta*_EB,i) / sigma_i(A*) per requested area.
struct BootstrapPivots {
  std::vector<std::size_t> areas;
  std::vector<std::vector<double>> pivots;  // sorted, one vector per area
  std::vector<double> A_hat;                // A used on the observed data, per area
  std::size_t failures = 0;
};

/// Parametric bootstrap from the fitted model: theta*_j ~ N(x_j'beta_hat, A_hat),
/// y*_j ~ N(theta*_j, D_j); (beta, A) are re-estimated on every replicate.
/// Replicates whose estimation fails (or collapses to A* = 0) are replaced
/// from later stream indices, up to 10% of B.
inline BootstrapPivots bootstrap_pivots(const FayHerriotDataset& data,
                                        std::span<const std::size_t> areas,
                                        const BootstrapOptions& opt) {
  require_alpha(opt.alpha);
  if (opt.B < 1) throw Error(ErrorCode::InvalidArgument, "B must be positive");
  const double z = normal::z_half(opt.alpha);
  const std::size_t m = data.m();
  const BetaMethod bm = centre_beta_method(opt.estimator);
  const bool per_area = area_specific(opt.estimator);

  BootstrapPivots out;
  out.areas.assign(areas.begin(), areas.end());
  for (const std::size_t i : out.areas) data.index(i);
  const std::size_t n_areas = out.areas.size();

  // Fitted models generating the bootstrap data: one per area for YL kinds.
  const std::size_t n_models = per_area ? n_areas : 1;
  std::vector<double> A_fit(n_models);
  std::vector<Vector> mean_fit(n_models);
  for (std::size_t g = 0; g < n_models; ++g) {
    const std::size_t area = per_area ? out.areas[g] : 0;
    A_fit[g] = opt.known_A ? *opt.known_A
                           : estimate_A(data, opt.estimator, area, z, opt.estimator_options);
    mean_fit[g] = data.X() * fit_regression(data, A_fit[g], bm).beta_hat;
  }
  out.A_hat.resize(n_areas);
  for (std::size_t a = 0; a < n_areas; ++a) out.A_hat[a] = A_fit[per_area ? a : 0];

  const std::size_t budget = opt.B / 10;
  out.pivots.assign(n_areas, {});
  for (auto& v : out.pivots) v.reserve(opt.B);

  // One replicate: returns false on estimation failure. `slot` holds one pivot per area.
  auto replicate = [&](std::size_t b, std::vector<double>& slot) {
    slot.assign(n_areas, 0.0);
    for (std::size_t g = 0; g < n_models; ++g) {
      StreamRng rng = StreamRng::keyed(opt.seed, {b, g});
      const double sqrt_A = std::sqrt(A_fit[g]);
      Vector theta(static_cast<Eigen::Index>(m)), y(static_cast<Eigen::Index>(m));
      for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(m); ++j) {
        theta(j) = mean_fit[g](j) + sqrt_A * rng.normal();
        y(j) = theta(j) + std::sqrt(data.D()(j)) * rng.normal();
      }
      const FayHerriotDataset star = data.with_y(std::move(y));
      const std::size_t first = per_area ? g : 0;
      const std::size_t last = per_area ? g + 1 : n_areas;
      double A_star = 0.0;
      try {
        A_star = opt.known_A ? *opt.known_A
                             : estimate_A(star, opt.estimator, out.areas[first], z,
                                          opt.estimator_options);
      } catch (const Error&) {
        return false;
      }
      if (!(A_star > 0.0)) return false;
      const Vector beta_star = fit_regression(star, A_star, bm).beta_hat;
      for (std::size_t a = first; a < last; ++a) {
        const std::size_t i = out.areas[a];
        const EbPointEstimate eb = eb_estimate(star, i, A_star, beta_star);
        slot[a] = (theta(static_cast<Eigen::Index>(i)) - eb.theta_eb) / eb.sigma;
      }
    }
    return true;
  };

  std::size_t next_index = 0;
  std::size_t accepted = 0;
  while (accepted < opt.B) {
    const std::size_t batch = opt.B - accepted;
    std::vector<std::vector<double>> slots(batch);
    std::vector<char> ok(batch, 0);
    parallel_for(batch, opt.threads,
                 [&](std::size_t k) { ok[k] = replicate(next_index + k, slots[k]) ? 1 : 0; });
    next_index += batch;
    for (std::size_t k = 0; k < batch; ++k) {
      if (!ok[k]) {
        ++out.failures;
        continue;
      }
      for (std::size_t a = 0; a < n_areas; ++a) out.pivots[a].push_back(slots[k][a]);
      ++accepted;
    }
    if (out.failures > budget) {
      throw Error(ErrorCode::BootstrapDegenerate,
                  std::to_string(out.failures) + " bootstrap replicates failed (budget " +
                      std::to_string(budget) + ")");
    }
  }
  for (auto& v : out.pivots) std::sort(v.begin(), v.end());
  return out;
}

/// Bootstrap EB intervals for the requested areas:
///   [theta_EB + q*_{alpha/2} sigma_i(A_hat), theta_EB + q*_{1-alpha/2} sigma_i(A_hat)].
inline std::vector<IntervalResult> bootstrap_intervals(const FayHerriotDataset& data,
                                                       std::span<const std::size_t> areas,
                                                       const BootstrapOptions& opt) {
  const BootstrapPivots piv = bootstrap_pivots(data, areas, opt);
  const BetaMethod bm = centre_beta_method(opt.estimator);
  std::vector<IntervalResult> out;
  out.reserve(piv.areas.size());
  for (std::size_t a = 0; a < piv.areas.size(); ++a) {
    const std::size_t i = piv.areas[a];
    const double A_hat = piv.A_hat[a];
    const EbPointEstimate eb =
        eb_estimate(data, i, A_hat, fit_regression(data, A_hat, bm).beta_hat);
    const double q_lo = empirical_quantile(piv.pivots[a], 0.5 * opt.alpha);
    const double q_hi = empirical_quantile(piv.pivots[a], 1.0 - 0.5 * opt.alpha);
    IntervalResult r;
    r.area = data.ids()[i];
    r.lower = eb.theta_eb + q_lo * eb.sigma;
    r.upper = eb.theta_eb + q_hi * eb.sigma;
    r.half_width = 0.5 * (r.upper - r.lower);
    r.method = "cll-" + std::string(to_string(opt.estimator));
    r.level = 1.0 - opt.alpha;
    r.A_used = A_hat;
    r.n_bootstrap = opt.B;
    out.push_back(std::move(r));
  }
  return out;
}

inline IntervalResult bootstrap_interval(const FayHerriotDataset& data, std::size_t i,
                                         std::size_t B, VarianceEstimator estimator,
                                         double alpha, std::uint64_t seed) {
  if (B < 100) throw Error(ErrorCode::InvalidArgument, "bootstrap needs B >= 100");
  BootstrapOptions opt;
  opt.B = B;
  opt.estimator = estimator;
  opt.alpha = alpha;
  opt.seed = seed;
  const std::size_t areas[] = {i};
  return bootstrap_intervals(data, areas, opt).front();
}

}  // namespace fhci

namespace fhci {

/// Interval methods exposed by the tools and the simulation harness.
enum class IntervalMethod { Direct, CoxReml, CoxAnova, CoxLL, CoxYlGls, CoxYlOls, CllBootstrap };

inline constexpr IntervalMethod kAllIntervalMethods[] = {
    IntervalMethod::Direct,   IntervalMethod::CoxReml,  IntervalMethod::CoxAnova,
    IntervalMethod::CoxLL,    IntervalMethod::CoxYlGls, IntervalMethod::CoxYlOls,
    IntervalMethod::CllBootstrap};

inline std::string_view to_string(IntervalMethod m) {
  switch (m) {
    case IntervalMethod::Direct: return "direct";
    case IntervalMethod::CoxReml: return "cox-reml";
    case IntervalMethod::CoxAnova: return "cox-anova";
    case IntervalMethod::CoxLL: return "cox-ll";
    case IntervalMethod::CoxYlGls: return "cox-yl-gls";
    case IntervalMethod::CoxYlOls: return "cox-yl-ols";
    case IntervalMethod::CllBootstrap: return "cll-bootstrap";
  }
  return "?";
}

/// Column labels used in the aligned text report.
inline std::string_view display_label(IntervalMethod m) {
  switch (m) {
    case IntervalMethod::Direct: return "Direct";
    case IntervalMethod::CoxReml: return "Cox.RE";
    case IntervalMethod::CoxAnova: return "Cox.ANOVA";
    case IntervalMethod::CoxLL: return "Cox.LL";
    case IntervalMethod::CoxYlGls: return "Cox.YL.GLS";
    case IntervalMethod::CoxYlOls: return "Cox.YL.OLS";
    case IntervalMethod::CllBootstrap: return "CLL.LL";
  }
  return "?";
}

inline IntervalMethod parse_interval_method(std::string_view name) {
  for (const IntervalMethod m : kAllIntervalMethods) {
    if (to_string(m) == name) return m;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown interval method '" + std::string(name) + "'");
}

/// Estimator behind a Cox-type method; Direct and CllBootstrap have none
/// of their own (the bootstrap uses Li-Lahiri).
inline VarianceEstimator estimator_of(IntervalMethod m) {
  switch (m) {
    case IntervalMethod::CoxReml: return VarianceEstimator::REML;
    case IntervalMethod::CoxAnova: return VarianceEstimator::ANOVA;
    case IntervalMethod::CoxLL: return VarianceEstimator::LiLahiri;
    case IntervalMethod::CoxYlGls: return VarianceEstimator::YL_GLS;
    case IntervalMethod::CoxYlOls: return VarianceEstimator::YL_OLS;
    case IntervalMethod::CllBootstrap: return VarianceEstimator::LiLahiri;
    case IntervalMethod::Direct: break;
  }
  throw Error(ErrorCode::InvalidArgument, "direct interval uses no variance estimator");
}

inline bool is_cox_type(IntervalMethod m) {
  return m != IntervalMethod::Direct && m != IntervalMethod::CllBootstrap;
}

}  // namespace fhci

namespace fhci {

/// Intervals for every area with one method. Area-free estimators are fitted
/// once and shared; YL estimators are refitted per area.
inline std::vector<IntervalResult> intervals_for_all_areas(const FayHerriotDataset& data,
                                                           IntervalMethod method, double alpha,
                                                           const BootstrapOptions& boot = {}) {
  require_alpha(alpha);
  const std::size_t m = data.m();
  std::vector<IntervalResult> out;
  out.reserve(m);
  const std::string tag(to_string(method));

  if (method == IntervalMethod::Direct) {
    for (std::size_t i = 0; i < m; ++i) out.push_back(direct_interval(data, i, alpha));
    return out;
  }
  if (method == IntervalMethod::CllBootstrap) {
    BootstrapOptions opt = boot;
    opt.alpha = alpha;
    opt.estimator = VarianceEstimator::LiLahiri;
    std::vector<std::size_t> areas(m);
    for (std::size_t i = 0; i < m; ++i) areas[i] = i;
    out = bootstrap_intervals(data, areas, opt);
    for (auto& r : out) r.method = tag;
    return out;
  }

  const VarianceEstimator est = estimator_of(method);
  const double z = normal::z_half(alpha);
  const BetaMethod bm = centre_beta_method(est);
  if (area_specific(est)) {
    for (std::size_t i = 0; i < m; ++i) {
      const double A_hat = estimate_A(data, est, i, z, boot.estimator_options);
      out.push_back(cox_interval(data, i, A_hat, bm, alpha, tag));
    }
    return out;
  }
  const double A_hat = estimate_A(data, est, 0, z, boot.estimator_options);
  const RegressionFit fit = fit_regression(data, A_hat, bm);
  const double hw_scale = z;
  for (std::size_t i = 0; i < m; ++i) {
    const EbPointEstimate eb = eb_estimate(data, i, A_hat, fit.beta_hat);
    IntervalResult r;
    r.area = data.ids()[i];
    r.half_width = hw_scale * eb.sigma;
    r.lower = eb.theta_eb - r.half_width;
    r.upper = eb.theta_eb + r.half_width;
    r.method = tag;
    r.level = 1.0 - alpha;
    r.A_used = A_hat;
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace fhci
