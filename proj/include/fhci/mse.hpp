#pragma once

#include <cmath>
#include <cstddef>

#include "fhci/likelihood.hpp"

namespace fhci {

/// Second-order MSE pieces of the EB estimator.
struct MseBreakdown {
  double g1 = 0.0;
  double g2 = 0.0;
  double g3 = 0.0;
  double total = 0.0;
  /// B_i^2 * Bias-hat(A); zero for the approximation.
  double bias_correction = 0.0;
  /// Estimate came out negative after bias correction (reported as-is).
  bool negative = false;
  /// A_hat < 1e-6 mean(D): the 1/A term of the bias estimate dominates.
  bool unreliable = false;
};

/// g1 + g2 + g3 at the true A:
///   g1 = A D_i / (A + D_i)
///   g2 = D_i^2 / (A + D_i)^2 x_i'Var(beta~)x_i   (GLS or OLS sandwich)
///   g3 = 2 D_i^2 / (A + D_i)^3 / tr(V^{-2})
inline MseBreakdown mse_approx(const FayHerriotDataset& data, std::size_t i, double A,
                               BetaMethod beta_method) {
  if (!(A > 0.0)) throw Error(ErrorCode::SingularAtZero, "mse_approx needs A > 0");
  const GlsState s = gls_state(data, A);
  const double Di = data.D(i);
  const double AD = A + Di;
  MseBreakdown out;
  out.g1 = A * Di / AD;
  out.g2 = Di * Di / (AD * AD) * beta_variance_form(data, i, s, beta_method);
  out.g3 = 2.0 * Di * Di / (AD * AD * AD) / s.tr_v(2);
  out.total = out.g1 + out.g2 + out.g3;
  return out;
}

/// Second-order unbiased estimator for the EB estimator built on the YL-GLS
/// estimate:
///   g1 + g2 + 2 g3 - B_i^2 * 2 l~'_gls(A_hat) / tr(V^{-2}),  all at A_hat.
inline MseBreakdown mse_estimate(const FayHerriotDataset& data, std::size_t i, double A_hat_gls,
                                 double z) {
  if (!(A_hat_gls > 0.0)) throw Error(ErrorCode::SingularAtZero, "mse_estimate needs A_hat > 0");
  MseBreakdown out = mse_approx(data, i, A_hat_gls, BetaMethod::GLS);
  const GlsState s = gls_state(data, A_hat_gls);
  const double Di = data.D(i);
  const double B = Di / (A_hat_gls + Di);
  const double bias =
      2.0 * adjustment_derivative(data, AdjustmentFactor::yl_gls(i, z), s) / s.tr_v(2);
  out.bias_correction = B * B * bias;
  out.total = out.g1 + out.g2 + 2.0 * out.g3 - out.bias_correction;
  out.negative = out.total < 0.0;
  out.unreliable = A_hat_gls < 1e-6 * data.mean_D();
  return out;
}

}  // namespace fhci
