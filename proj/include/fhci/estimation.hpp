#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "fhci/likelihood.hpp"
#include "fhci/root_finding.hpp"

namespace fhci {

/// Prasad-Rao moment estimator
///   max{0, [y'(I - H)y - tr((I - H) diag D)] / (m - p)},  H = X(X'X)^{-1}X'.
/// With a common mean and equal D it reduces to max{s^2 - D, 0}.
inline double anova_estimate(const FayHerriotDataset& data) {
  const Vector beta_ols = data.xtx_inv() * (data.X().transpose() * data.y());
  const Vector r = data.y() - data.X() * beta_ols;
  const double trace = data.D().sum() - data.leverages().dot(data.D());
  const double dof = static_cast<double>(data.m() - data.p());
  return std::max(0.0, (r.squaredNorm() - trace) / dof);
}

/// m > (4 + p) / (1 - q_i): guarantees strictly positive YL estimates and,
/// with equal D_i, a unique one.
inline bool uniqueness_condition(const FayHerriotDataset& data, std::size_t i) {
  const double q = leverage(data, i);
  return static_cast<double>(data.m()) > (4.0 + static_cast<double>(data.p())) / (1.0 - q);
}

/// Coefficients {c2, c1, c0} of the quadratic f(A) whose positive root is the
/// YL estimate when all D_i are equal:
///   c2 = -2(m - p) + 8 + 2 m q_i
///   c1 = 2 y'(I - H)y - 2(m - p)D + 8D + (1 + z^2)D + 2 m D q_i
///   c0 = (1 + z^2) D^2
struct BalancedQuadratic {
  double c2 = 0.0, c1 = 0.0, c0 = 0.0;
  double operator()(double A) const { return (c2 * A + c1) * A + c0; }
};

inline BalancedQuadratic balanced_quadratic(const FayHerriotDataset& data, std::size_t i,
                                            double z) {
  if (!data.balanced()) throw Error(ErrorCode::NotBalanced, "sampling variances differ");
  const double m = static_cast<double>(data.m());
  const double p = static_cast<double>(data.p());
  const double q = leverage(data, i);
  const double D = data.D(0);
  const double z2 = z * z;
  const Vector beta_ols = data.xtx_inv() * (data.X().transpose() * data.y());
  const double rss = (data.y() - data.X() * beta_ols).squaredNorm();
  BalancedQuadratic f;
  f.c2 = -2.0 * (m - p) + 8.0 + 2.0 * m * q;
  f.c1 = 2.0 * rss - 2.0 * (m - p) * D + 8.0 * D + (1.0 + z2) * D + 2.0 * m * D * q;
  f.c0 = (1.0 + z2) * D * D;
  return f;
}

/// Unique positive root of the balanced-case quadratic.
inline double balanced_quadratic_root(const FayHerriotDataset& data, std::size_t i, double z) {
  const BalancedQuadratic f = balanced_quadratic(data, i, z);
  if (!uniqueness_condition(data, i)) {
    throw Error(ErrorCode::UniquenessConditionViolated, "m <= (4 + p) / (1 - q_i)");
  }
  // c2 < 0 < c0, so the roots have opposite signs.
  const double disc = f.c1 * f.c1 - 4.0 * f.c2 * f.c0;
  const double t = -0.5 * (f.c1 + std::copysign(std::sqrt(disc), f.c1));
  const double r1 = t / f.c2;
  const double r2 = f.c0 / t;
  return std::max(r1, r2);
}

struct EstimatorOptions {
  std::size_t grid_points = 200;
  double rel_tol = 1e-10;
  std::size_t max_iter = 200;
  /// Objective values closer than this are ties; the smallest A wins.
  double tie_tol = 1e-9;
};

struct VarianceEstimate {
  double A_hat = 0.0;
  AdjustmentKind kind = AdjustmentKind::REML;
  bool converged = false;
  /// REML maximum on the boundary A = 0.
  bool boundary = false;
  double score_at_solution = 0.0;
  std::size_t n_local_maxima = 0;
  /// False when a YL kind is used with m <= (4 + p) / (1 - q_i); the estimate
  /// is still the numeric argmax but positivity and uniqueness are not assured.
  bool uniqueness_condition_met = true;
};

/// Search bracket [A_lo, A_hi] for the variance estimators.
struct SearchBracket {
  double lo = 0.0, hi = 0.0;
};

inline SearchBracket search_bracket(const FayHerriotDataset& data) {
  const double mean_D = data.mean_D();
  return {1e-10 * mean_D, std::max(100.0 * mean_D, 50.0 * anova_estimate(data))};
}

/// Global maximiser of l_RE(A) + l~(A) over [0, inf) (in practice the search
/// bracket).
///
/// The adjusted score is scanned on a log-spaced grid; every + to - sign change
/// brackets a local maximum, which is refined by Brent's method. Competing
/// maxima are compared through l_RE plus the log-adjustment difference between
/// them. For REML a non-positive score at A = 0 also makes the boundary a
/// candidate; if it wins, A_hat = 0 with `boundary` set.
inline VarianceEstimate estimate_variance(const FayHerriotDataset& data,
                                          const AdjustmentFactor& adj,
                                          const EstimatorOptions& opt = {}) {
  VarianceEstimate out;
  out.kind = adj.kind;
  if (adj.is_yl()) {
    out.uniqueness_condition_met = uniqueness_condition(data, detail::target_area(data, adj));
  }

  const SearchBracket bracket = search_bracket(data);
  auto score = [&](double A) { return adjusted_score(data, adj, gls_state(data, A)); };

  const std::size_t n = std::max<std::size_t>(opt.grid_points, 2);
  const double log_lo = std::log(bracket.lo);
  const double step = (std::log(bracket.hi) - log_lo) / static_cast<double>(n - 1);
  std::vector<double> grid(n), s(n);
  for (std::size_t k = 0; k < n; ++k) {
    grid[k] = (k + 1 == n) ? bracket.hi : std::exp(log_lo + step * static_cast<double>(k));
    s[k] = score(grid[k]);
  }

  struct Candidate {
    double A;
    double score;
  };
  std::vector<Candidate> candidates;

  if (adj.kind == AdjustmentKind::REML) {
    const double s0 = reml_score(data, 0.0);
    if (s0 <= 0.0) candidates.push_back({0.0, s0});
  }
  for (std::size_t k = 0; k + 1 < n; ++k) {
    if (!(s[k] > 0.0 && s[k + 1] <= 0.0)) continue;
    const RootResult r =
        brent_root(score, grid[k], grid[k + 1], s[k], s[k + 1], opt.rel_tol, opt.max_iter);
    if (!r.converged) {
      throw Error(ErrorCode::OptimizerDidNotConverge,
                  "root refinement in [" + std::to_string(grid[k]) + ", " +
                      std::to_string(grid[k + 1]) + "] did not converge");
    }
    candidates.push_back({r.root, r.f_root});
  }

  if (candidates.empty()) {
    throw Error(ErrorCode::NoInteriorMaximum,
                "adjusted score stays positive up to A = " + std::to_string(bracket.hi));
  }

  std::size_t best = 0;
  if (candidates.size() > 1) {
    // Objective up to a constant: l_RE(A) + l~(A) - l~(A_ref).
    const double A_ref = candidates.front().A > 0.0 ? candidates.front().A : candidates[1].A;
    auto objective = [&](double A) {
      const double base = reml_log_likelihood(data, A);
      if (adj.kind == AdjustmentKind::REML) return base;
      return base + log_adjustment(data, adj, A_ref, A);
    };
    double best_value = objective(candidates.front().A);
    for (std::size_t c = 1; c < candidates.size(); ++c) {
      const double value = objective(candidates[c].A);
      if (value > best_value + opt.tie_tol) {
        best_value = value;
        best = c;
      }
    }
  }

  out.A_hat = candidates[best].A;
  out.score_at_solution = candidates[best].score;
  out.boundary = (out.A_hat == 0.0);
  out.converged = true;
  out.n_local_maxima = candidates.size();
  return out;
}

}  // namespace fhci
