#pragma once

#include <cmath>
#include <cstddef>

#include "fhci/likelihood.hpp"
#include "fhci/normal.hpp"

namespace fhci {

/// Order-1/m coverage expansion of the Cox-type interval at a true A:
///   P(theta_i in I_i) = 1 - alpha + z phi(z) (a_i + b_i) / m + O(m^{-3/2}).
struct CoverageExpansion {
  double a_i = 0.0;
  double b_i = 0.0;
  double predicted_coverage = 0.0;
  double alpha = 0.05;
  double z = 0.0;
};

namespace detail {
inline void require_positive(double A) {
  if (!(A > 0.0)) throw Error(ErrorCode::SingularAtZero, "coverage terms need A > 0");
}
}  // namespace detail

/// a_i = -[m / tr(V^{-2})] [4D_i / (A(A+D_i)^2) + (1+z^2)D_i^2 / (2A^2(A+D_i)^2)]
///       - [m D_i / (A(A+D_i))] x_i'Var(beta~)x_i
inline double a_term(const FayHerriotDataset& data, std::size_t i, double A, double z,
                     BetaMethod beta_method) {
  detail::require_positive(A);
  const GlsState s = gls_state(data, A);
  const double m = static_cast<double>(data.m());
  const double Di = data.D(i);
  const double AD = A + Di;
  const double bracket =
      4.0 * Di / (A * AD * AD) + (1.0 + z * z) * Di * Di / (2.0 * A * A * AD * AD);
  return -(m / s.tr_v(2)) * bracket -
         (m * Di / (A * AD)) * beta_variance_form(data, i, s, beta_method);
}

/// b_i = [2m / tr(V^{-2})] [D_i / (A(A+D_i))] l~'(A).
inline double b_term(const FayHerriotDataset& data, std::size_t i, double A,
                     const AdjustmentFactor& adj) {
  detail::require_positive(A);
  const GlsState s = gls_state(data, A);
  const double m = static_cast<double>(data.m());
  const double Di = data.D(i);
  return (2.0 * m / s.tr_v(2)) * (Di / (A * (A + Di))) * adjustment_derivative(data, adj, s);
}

/// a_i + b_i with the YL adjustment matched to `beta_method`; the YL factor is
/// the solution of a_i + b_i = 0, so this is zero up to rounding.
inline double defining_residual(const FayHerriotDataset& data, std::size_t i, double A, double z,
                                BetaMethod beta_method) {
  const AdjustmentFactor adj = beta_method == BetaMethod::GLS ? AdjustmentFactor::yl_gls(i, z)
                                                              : AdjustmentFactor::yl_ols(i, z);
  return a_term(data, i, A, z, beta_method) + b_term(data, i, A, adj);
}

/// Full expansion for an interval with estimator adjustment `adj`, centred with
/// `beta_method`, at true model variance A.
inline CoverageExpansion coverage_expansion(const FayHerriotDataset& data, std::size_t i,
                                            double A, double alpha, const AdjustmentFactor& adj,
                                            BetaMethod beta_method) {
  CoverageExpansion ce;
  ce.alpha = alpha;
  ce.z = normal::z_half(alpha);
  ce.a_i = a_term(data, i, A, ce.z, beta_method);
  ce.b_i = b_term(data, i, A, adj);
  ce.predicted_coverage = 1.0 - alpha + ce.z * normal::pdf(ce.z) * (ce.a_i + ce.b_i) /
                                            static_cast<double>(data.m());
  return ce;
}

}  // namespace fhci
