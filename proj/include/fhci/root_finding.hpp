#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>

namespace fhci {

struct RootResult {
  double root = 0.0;
  double f_root = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

/// Brent's zeroin on a bracket [a, b] with f(a) f(b) <= 0: inverse quadratic
/// or secant steps, falling back to bisection whenever the interpolant leaves
/// the bracket or fails to shrink it fast enough.
///
/// Stops once the bracket is no wider than rel_tol * (1 + |x|).
template <class F>
RootResult brent_root(F&& f, double a, double b, double fa, double fb, double rel_tol,
                      std::size_t max_iter) {
  RootResult out;
  if (fa == 0.0) return {a, 0.0, 0, true};
  if (fb == 0.0) return {b, 0.0, 0, true};
  if ((fa > 0.0) == (fb > 0.0)) return {b, fb, 0, false};

  constexpr double eps = std::numeric_limits<double>::epsilon();
  double c = a, fc = fa;
  double d = b - a, e = d;

  for (std::size_t iter = 1; iter <= max_iter; ++iter) {
    if ((fb > 0.0) == (fc > 0.0)) {
      c = a;
      fc = fa;
      d = b - a;
      e = d;
    }
    if (std::abs(fc) < std::abs(fb)) {
      a = b; b = c; c = a;
      fa = fb; fb = fc; fc = fa;
    }
    const double tol = 2.0 * eps * std::abs(b) + 0.5 * rel_tol * (1.0 + std::abs(b));
    const double half = 0.5 * (c - b);
    if (std::abs(half) <= tol || fb == 0.0) {
      return {b, fb, iter, true};
    }
    if (std::abs(e) >= tol && std::abs(fa) > std::abs(fb)) {
      double p, q;
      const double s = fb / fa;
      if (a == c) {
        p = 2.0 * half * s;
        q = 1.0 - s;
      } else {
        const double qa = fa / fc;
        const double r = fb / fc;
        p = s * (2.0 * half * qa * (qa - r) - (b - a) * (r - 1.0));
        q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
      }
      if (p > 0.0) q = -q;
      p = std::abs(p);
      const double min1 = 3.0 * half * q - std::abs(tol * q);
      const double min2 = std::abs(e * q);
      if (2.0 * p < std::min(min1, min2)) {
        e = d;
        d = p / q;
      } else {
        d = half;
        e = d;
      }
    } else {
      d = half;
      e = d;
    }
    a = b;
    fa = fb;
    b += (std::abs(d) > tol) ? d : (half > 0.0 ? tol : -tol);
    fb = f(b);
  }
  out.root = b;
  out.f_root = fb;
  out.iterations = max_iter;
  out.converged = false;
  return out;
}

}  // namespace fhci
