#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string_view>

#include "fhci/dataset.hpp"

namespace fhci {

enum class BetaMethod { GLS, OLS };

inline std::string_view to_string(BetaMethod method) {
  return method == BetaMethod::GLS ? "GLS" : "OLS";
}

/// V = diag(A + D_i) at a candidate A, with the traces tr(V^{-k}), k = 1..5.
struct VarianceProfile {
  double A = 0.0;
  Vector V_diag;
  std::array<double, 5> trV_inv_k{};

  /// tr(V^{-k}) for k in 1..5.
  double tr_inv(int k) const { return trV_inv_k.at(static_cast<std::size_t>(k - 1)); }
};

inline void require_nonnegative_A(double A) {
  if (!(A >= 0.0) || !std::isfinite(A)) {
    throw Error(ErrorCode::InvalidArgument, "model variance A must be finite and >= 0");
  }
}

inline VarianceProfile variance_profile(const FayHerriotDataset& data, double A) {
  require_nonnegative_A(A);
  VarianceProfile prof;
  prof.A = A;
  prof.V_diag = data.D().array() + A;
  const Eigen::ArrayXd w = prof.V_diag.array().inverse();
  Eigen::ArrayXd wk = w;
  for (std::size_t k = 0; k < prof.trV_inv_k.size(); ++k) {
    prof.trV_inv_k[k] = wk.sum();
    wk *= w;
  }
  return prof;
}

/// Everything the residual likelihood needs at one value of A, built from
/// p x p objects only (V is diagonal so the m x m matrix P is never formed).
struct GlsState {
  double A = 0.0;
  Eigen::ArrayXd w;       // 1 / (A + D_i)
  Matrix M_inv;           // (X'V^{-1}X)^{-1}
  double log_det_M = 0.0; // log |X'V^{-1}X|
  Vector beta;            // GLS coefficients
  Eigen::ArrayXd resid;   // y - X beta

  double tr_v(int k) const { return w.pow(k).sum(); }
  /// y'Py = r'V^{-1}r for the GLS residual r.
  double yPy() const { return (w * resid.square()).sum(); }
  /// y'P^2 y = r'V^{-2}r since Py = V^{-1}r.
  double yP2y() const { return (w.square() * resid.square()).sum(); }
};

inline GlsState gls_state(const FayHerriotDataset& data, double A) {
  require_nonnegative_A(A);
  GlsState s;
  s.A = A;
  s.w = (data.D().array() + A).inverse();
  const Matrix& X = data.X();
  const Matrix M = X.transpose() * s.w.matrix().asDiagonal() * X;
  Eigen::LLT<Matrix> llt(M);
  if (llt.info() != Eigen::Success || llt.rcond() < kSingularRcond) {
    throw Error(ErrorCode::SingularNormalEquations, "X'V^{-1}X is numerically singular");
  }
  s.M_inv = llt.solve(Matrix::Identity(M.rows(), M.cols()));
  const Matrix L = llt.matrixL();
  s.log_det_M = 2.0 * L.diagonal().array().log().sum();
  s.beta = llt.solve(X.transpose() * (s.w * data.y().array()).matrix());
  s.resid = data.y().array() - (X * s.beta).array();
  return s;
}

/// x_i' Var(beta~) x_i at A for the chosen estimator of beta.
///   GLS: x_i'(X'V^{-1}X)^{-1}x_i
///   OLS: x_i'(X'X)^{-1}X'VX(X'X)^{-1}x_i = sum_j (x_j'(X'X)^{-1}x_i)^2 (A + D_j)
inline double beta_variance_form(const FayHerriotDataset& data, std::size_t i, double A,
                                 BetaMethod method) {
  const Vector xi = data.x(i);
  if (method == BetaMethod::GLS) {
    const GlsState s = gls_state(data, A);
    return xi.dot(s.M_inv * xi);
  }
  require_nonnegative_A(A);
  const Vector c = data.X() * (data.xtx_inv() * xi);
  return (c.array().square() * (data.D().array() + A)).sum();
}

/// Same as above but reusing a GlsState already computed at A.
inline double beta_variance_form(const FayHerriotDataset& data, std::size_t i,
                                 const GlsState& s, BetaMethod method) {
  const Vector xi = data.x(i);
  if (method == BetaMethod::GLS) return xi.dot(s.M_inv * xi);
  const Vector c = data.X() * (data.xtx_inv() * xi);
  return (c.array().square() * (data.D().array() + s.A)).sum();
}

struct RegressionFit {
  Vector beta_hat;
  BetaMethod method = BetaMethod::GLS;
  Matrix cov_beta;
};

inline RegressionFit fit_regression(const FayHerriotDataset& data, double A, BetaMethod method) {
  RegressionFit fit;
  fit.method = method;
  if (method == BetaMethod::GLS) {
    GlsState s = gls_state(data, A);
    fit.beta_hat = std::move(s.beta);
    fit.cov_beta = std::move(s.M_inv);
    return fit;
  }
  require_nonnegative_A(A);
  const Matrix& X = data.X();
  const Matrix& G = data.xtx_inv();
  fit.beta_hat = G * (X.transpose() * data.y());
  const Matrix XtVX = X.transpose() * (data.D().array() + A).matrix().asDiagonal() * X;
  fit.cov_beta = G * XtVX * G;
  return fit;
}

struct EbPointEstimate {
  double theta_eb = 0.0;
  double shrinkage = 1.0;  // B_i = D_i / (A + D_i)
  double sigma = 0.0;      // sqrt(A D_i / (A + D_i))
};

/// Posterior sd sigma_i(A); strictly below sqrt(D_i) for finite A.
inline double posterior_sd(double A, double D) {
  if (std::isinf(A)) return std::sqrt(D);
  return std::sqrt(A * D / (A + D));
}

/// (1 - B_i) y_i + B_i x_i'beta with B_i = D_i / (A + D_i).
inline EbPointEstimate eb_estimate(const FayHerriotDataset& data, std::size_t i, double A,
                                   const Vector& beta_hat) {
  if (std::isnan(A) || A < 0.0) {
    throw Error(ErrorCode::InvalidArgument, "model variance A must be >= 0");
  }
  const double Di = data.D(i);
  const double synthetic = data.x(i).dot(beta_hat);
  EbPointEstimate est;
  if (std::isinf(A)) {
    est.shrinkage = 0.0;
    est.theta_eb = data.y(i);
    est.sigma = std::sqrt(Di);
    return est;
  }
  est.shrinkage = Di / (A + Di);
  est.theta_eb = (A == 0.0) ? synthetic
                            : (1.0 - est.shrinkage) * data.y(i) + est.shrinkage * synthetic;
  est.sigma = posterior_sd(A, Di);
  return est;
}

}  // namespace fhci
