#pragma once

// Helpers shared by the unit tests: random designs and oracles that do not
// go through the library's p x p shortcuts.

#include <cmath>
#include <functional>
#include <random>

#include "fhci/fhci.hpp"

namespace fhci::test {

/// Random design with an intercept and p-1 U(-1,1) covariates, D ~ U(d_lo, d_hi).
inline FayHerriotDataset random_dataset(std::mt19937_64& gen, std::size_t m, std::size_t p,
                                        double A = 1.0, double d_lo = 0.3, double d_hi = 3.0) {
  std::uniform_real_distribution<double> unit(-1.0, 1.0), dd(d_lo, d_hi);
  std::normal_distribution<double> n01;
  Matrix X(m, p);
  Vector D(m), y(m);
  for (std::size_t i = 0; i < m; ++i) {
    X(i, 0) = 1.0;
    for (std::size_t k = 1; k < p; ++k) X(i, k) = unit(gen);
    D(i) = dd(gen);
    y(i) = 0.5 + std::sqrt(A) * n01(gen) + std::sqrt(D(i)) * n01(gen);
  }
  return FayHerriotDataset(y, D, X);
}

/// Explicit m x m P = V^{-1} - V^{-1}X(X'V^{-1}X)^{-1}X'V^{-1}.
inline Matrix explicit_P(const FayHerriotDataset& data, double A) {
  const Matrix Vinv = (data.D().array() + A).inverse().matrix().asDiagonal();
  const Matrix& X = data.X();
  const Matrix M = X.transpose() * Vinv * X;
  return Vinv - Vinv * X * M.inverse() * X.transpose() * Vinv;
}

/// l_RE from the dense definition.
inline double dense_reml_loglik(const FayHerriotDataset& data, double A) {
  const Matrix V = (data.D().array() + A).matrix().asDiagonal();
  const Matrix& X = data.X();
  const Matrix M = X.transpose() * V.inverse() * X;
  const Matrix P = explicit_P(data, A);
  return -0.5 * std::log(M.determinant()) - 0.5 * std::log(V.determinant()) -
         0.5 * data.y().dot(P * data.y());
}

/// Adaptive Simpson quadrature.
inline double simpson(const std::function<double(double)>& f, double a, double b, double tol,
                      int depth = 50) {
  auto step = [&](auto&& self, double lo, double hi, double flo, double fmid, double fhi,
                  double whole, double eps, int d) -> double {
    const double mid = 0.5 * (lo + hi);
    const double lm = 0.5 * (lo + mid), rm = 0.5 * (mid + hi);
    const double flm = f(lm), frm = f(rm);
    const double left = (mid - lo) / 6.0 * (flo + 4.0 * flm + fmid);
    const double right = (hi - mid) / 6.0 * (fmid + 4.0 * frm + fhi);
    if (d <= 0 || std::abs(left + right - whole) <= 15.0 * eps) {
      return left + right + (left + right - whole) / 15.0;
    }
    return self(self, lo, mid, flo, flm, fmid, left, 0.5 * eps, d - 1) +
           self(self, mid, hi, fmid, frm, fhi, right, 0.5 * eps, d - 1);
  };
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return step(step, a, b, fa, fm, fb, whole, tol, depth);
}

inline constexpr double kZ975 = 1.959963984540054;

}  // namespace fhci::test
