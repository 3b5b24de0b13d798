#pragma once

// Plain reference integrators for the test oracles. Deliberately independent
// of the library's own quadrature.

#include <algorithm>
#include <cmath>
#include <functional>

namespace testsupport {

inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                               double fa, double fm, double fb, double whole, double tol,
                               int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return adaptive_simpson(f, a, m, fa, flm, fm, left, tol / 2, depth - 1) +
         adaptive_simpson(f, m, b, fm, frm, fb, right, tol / 2, depth - 1);
}

inline double simpson(const std::function<double(double)>& f, double a, double b, double tol) {
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4 * fm + fb);
  return adaptive_simpson(f, a, b, fa, fm, fb, whole, tol, 20);
}

// Largest |f| on a coarse grid; sets the absolute tolerance.
inline double magnitude(const std::function<double(double)>& f, double a, double b) {
  double m = 0.0;
  for (int i = 0; i <= 256; ++i) m = std::max(m, std::abs(f(a + (b - a) * i / 256.0)));
  return m;
}

// int_t^inf e^{lambda (t-s)} f(s) ds, integrand assumed to decay at least like e^{-s/2}.
inline double tail_quadrature(double lambda, double t, const std::function<double(double)>& f) {
  auto g = [&](double s) { return std::exp(lambda * (t - s)) * f(s); };
  const double tol = 1e-13 * magnitude(g, t, t + 20.0);
  double sum = 0.0;
  for (int i = 0; i < 120; ++i) sum += simpson(g, t + i, t + i + 1, tol);
  return sum;
}

// int_0^t e^{lambda (t-s)} f(s) ds
inline double forward_quadrature(double lambda, double t, const std::function<double(double)>& f) {
  if (t == 0.0) return 0.0;
  auto g = [&](double s) { return std::exp(lambda * (t - s)) * f(s); };
  return simpson(g, 0.0, t, 1e-13 * t * magnitude(g, 0.0, t));
}

}  // namespace testsupport
