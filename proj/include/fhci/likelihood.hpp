#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "fhci/regression.hpp"

namespace fhci {

// ---------------------------------------------------------------------------
// Residual likelihood
// ---------------------------------------------------------------------------

/// l_RE(A) = -1/2 log|X'V^{-1}X| - 1/2 log|V| - 1/2 y'Py.
inline double reml_log_likelihood(const GlsState& s) {
  return -0.5 * s.log_det_M + 0.5 * s.w.log().sum() - 0.5 * s.yPy();
}

inline double reml_log_likelihood(const FayHerriotDataset& data, double A) {
  return reml_log_likelihood(gls_state(data, A));
}

/// tr(P) = tr(V^{-1}) - tr((X'V^{-1}X)^{-1} X'V^{-2}X).
inline double trace_P(const FayHerriotDataset& data, const GlsState& s) {
  const Matrix& X = data.X();
  const Matrix XtW2X = X.transpose() * s.w.square().matrix().asDiagonal() * X;
  return s.w.sum() - (s.M_inv.cwiseProduct(XtW2X)).sum();
}

/// dl_RE/dA = 1/2 [y'P^2y - tr(P)].
inline double reml_score(const FayHerriotDataset& data, const GlsState& s) {
  return 0.5 * (s.yP2y() - trace_P(data, s));
}

inline double reml_score(const FayHerriotDataset& data, double A) {
  return reml_score(data, gls_state(data, A));
}

// ---------------------------------------------------------------------------
// Adjustment factors h(A); l~(A) = log h(A)
// ---------------------------------------------------------------------------

enum class AdjustmentKind { REML, LiLahiri, YL_GLS, YL_OLS };

inline std::string_view to_string(AdjustmentKind kind) {
  switch (kind) {
    case AdjustmentKind::REML: return "reml";
    case AdjustmentKind::LiLahiri: return "ll";
    case AdjustmentKind::YL_GLS: return "yl-gls";
    case AdjustmentKind::YL_OLS: return "yl-ols";
  }
  return "?";
}

/// A named adjusted-likelihood specification. The YL kinds are specific to a
/// target area and to the interval's normal deviate z.
struct AdjustmentFactor {
  AdjustmentKind kind = AdjustmentKind::REML;
  std::optional<std::size_t> area;
  double z = 0.0;

  static AdjustmentFactor reml() { return {AdjustmentKind::REML, std::nullopt, 0.0}; }
  static AdjustmentFactor li_lahiri() { return {AdjustmentKind::LiLahiri, std::nullopt, 0.0}; }
  static AdjustmentFactor yl_gls(std::size_t area, double z) {
    return {AdjustmentKind::YL_GLS, area, z};
  }
  static AdjustmentFactor yl_ols(std::size_t area, double z) {
    return {AdjustmentKind::YL_OLS, area, z};
  }

  bool is_yl() const { return kind == AdjustmentKind::YL_GLS || kind == AdjustmentKind::YL_OLS; }
  bool singular_at_zero() const { return kind != AdjustmentKind::REML; }

  /// beta estimator whose EB centre this adjustment is matched to.
  BetaMethod beta_method() const {
    return kind == AdjustmentKind::YL_OLS ? BetaMethod::OLS : BetaMethod::GLS;
  }
};

namespace detail {

inline std::size_t target_area(const FayHerriotDataset& data, const AdjustmentFactor& adj) {
  if (!adj.area) throw Error(ErrorCode::InvalidArgument, "YL adjustment needs a target area");
  data.index(*adj.area);
  if (!(adj.z > 0.0)) throw Error(ErrorCode::InvalidArgument, "YL adjustment needs z > 0");
  return *adj.area;
}

inline void require_positive_A(const AdjustmentFactor& adj, double A) {
  if (adj.singular_at_zero() && !(A > 0.0)) {
    throw Error(ErrorCode::SingularAtZero,
                std::string(to_string(adj.kind)) + " adjustment is singular at A = 0");
  }
}

/// 2 log(A + D_i) + (1 + z^2)/4 log(A / (A + D_i)): the part of l~ shared by
/// both YL kinds.
inline double yl_common_log(double A, double Di, double z) {
  return 2.0 * std::log(A + Di) + 0.25 * (1.0 + z * z) * std::log(A / (A + Di));
}

}  // namespace detail

/// dl~/dA for the adjustment, using a GlsState already evaluated at A.
///   REML:     0
///   LiLahiri: 1/A                    (h(A) = A)
///   YL_GLS:   2/(A+D_i) + (1+z^2)D_i/(4A(A+D_i)) + 1/2 tr(V^{-2}) x_i'(X'V^{-1}X)^{-1}x_i
///   YL_OLS:   same with x_i'(X'X)^{-1}X'VX(X'X)^{-1}x_i in the last term
inline double adjustment_derivative(const FayHerriotDataset& data, const AdjustmentFactor& adj,
                                    const GlsState& s) {
  const double A = s.A;
  switch (adj.kind) {
    case AdjustmentKind::REML:
      return 0.0;
    case AdjustmentKind::LiLahiri:
      detail::require_positive_A(adj, A);
      return 1.0 / A;
    case AdjustmentKind::YL_GLS:
    case AdjustmentKind::YL_OLS: {
      const std::size_t i = detail::target_area(data, adj);
      detail::require_positive_A(adj, A);
      const double Di = data.D(i);
      const double z2 = adj.z * adj.z;
      const double form = beta_variance_form(data, i, s, adj.beta_method());
      return 2.0 / (A + Di) + (1.0 + z2) * Di / (4.0 * A * (A + Di)) +
             0.5 * s.tr_v(2) * form;
    }
  }
  return 0.0;
}

inline double adjustment_derivative(const FayHerriotDataset& data, const AdjustmentFactor& adj,
                                    double A) {
  detail::require_positive_A(adj, A);
  return adjustment_derivative(data, adj, gls_state(data, A));
}

/// d/dA [l_RE(A) + l~(A)].
inline double adjusted_score(const FayHerriotDataset& data, const AdjustmentFactor& adj,
                             const GlsState& s) {
  detail::require_positive_A(adj, s.A);
  return reml_score(data, s) + adjustment_derivative(data, adj, s);
}

inline double adjusted_score(const FayHerriotDataset& data, const AdjustmentFactor& adj,
                             double A) {
  detail::require_positive_A(adj, A);
  return adjusted_score(data, adj, gls_state(data, A));
}

/// Absolute tolerance (relative to max(1, |value|)) demanded of the quadrature.
inline constexpr double kQuadratureTol = 1e-10;

/// l~(A) - l~(A_ref).
///
/// Closed forms for REML, LiLahiri and YL_OLS. The YL_GLS factor contains
/// the integral of 1/2 tr(V^{-2}) x_i'(X'V^{-1}X)^{-1}x_i, which has no closed
/// form for unequal D_i; that piece is integrated by adaptive Gauss-Kronrod in
/// log A.
inline double log_adjustment(const FayHerriotDataset& data, const AdjustmentFactor& adj,
                             double A_ref, double A) {
  if (adj.kind == AdjustmentKind::REML) return 0.0;
  detail::require_positive_A(adj, A_ref);
  detail::require_positive_A(adj, A);
  if (!std::isfinite(A_ref) || !std::isfinite(A)) {
    throw Error(ErrorCode::InvalidArgument, "log_adjustment needs finite arguments");
  }
  if (adj.kind == AdjustmentKind::LiLahiri) return std::log(A / A_ref);

  const std::size_t i = detail::target_area(data, adj);
  const double Di = data.D(i);
  const double common = detail::yl_common_log(A, Di, adj.z) - detail::yl_common_log(A_ref, Di, adj.z);

  if (adj.kind == AdjustmentKind::YL_OLS) {
    // 1/2 q_i sum_k log(A + D_k) - 1/2 tr(V^{-1}) x_i'(X'X)^{-1}X'VX(X'X)^{-1}x_i
    const double q = data.leverages()(static_cast<Eigen::Index>(i));
    const Vector c = data.X() * (data.xtx_inv() * data.x(i));
    const Eigen::ArrayXd c2 = c.array().square();
    auto tail = [&](double a) {
      const Eigen::ArrayXd v = data.D().array() + a;
      return 0.5 * q * v.log().sum() - 0.5 * v.inverse().sum() * (c2 * v).sum();
    };
    return common + tail(A) - tail(A_ref);
  }

  if (A == A_ref) return 0.0;
  const Vector xi = data.x(i);
  const Matrix& X = data.X();
  auto integrand = [&](double t) {
    const double a = std::exp(t);
    const Eigen::ArrayXd w = (data.D().array() + a).inverse();
    const Matrix M = X.transpose() * w.matrix().asDiagonal() * X;
    const double form = xi.dot(M.llt().solve(xi));
    return 0.5 * w.square().sum() * form * a;
  };
  double error = 0.0;
  double l1 = 0.0;
  const double integral = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
      integrand, std::log(A_ref), std::log(A), 20, kQuadratureTol, &error, &l1);
  if (!std::isfinite(integral) || error > kQuadratureTol * std::max(1.0, l1)) {
    throw Error(ErrorCode::QuadratureFailure,
                "integral of the GLS adjustment did not reach tolerance (error " +
                    std::to_string(error) + ")");
  }
  return common + integral;
}

}  // namespace fhci
