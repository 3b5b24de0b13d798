#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <queue>
#include <vector>

#include "sinkasym/errors.hpp"
#include "sinkasym/param_poly.hpp"

namespace sinkasym {

struct QuadResult {
  double value = 0.0;
  double error = 0.0;  // estimated absolute error
  int evaluations = 0;
  bool converged = true;
};

namespace detail {

// 15-point Kronrod rule with its embedded 7-point Gauss rule.
template <class Real>
struct GK15 {
  static constexpr int n = 8;
  static constexpr Real xk[n] = {
      0.991455371120812639206854697526329L, 0.949107912342758524526189684047851L,
      0.864864423359769072789712788640926L, 0.741531185599394439863864773280788L,
      0.586087235467691130294144845693013L, 0.405845151377397166906606412076961L,
      0.207784955007898467600689403773245L, 0.000000000000000000000000000000000L};
  static constexpr Real wk[n] = {
      0.022935322010529224963732008058970L, 0.063092092629978553290700663189204L,
      0.104790010322250183839876322541518L, 0.140653259715525918745189590510238L,
      0.169004726639267902826583426598550L, 0.190350578064785409913256402421014L,
      0.204432940075298892414161999234649L, 0.209482141084727828012999174891714L};
  static constexpr Real wg[4] = {
      0.129484966168869693270611432679082L, 0.279705391489276667901467771423780L,
      0.381830050505118944950369775488975L, 0.417959183673469387755102040816327L};
};

template <class Real, class F>
void gk15(F& f, Real a, Real b, Real& result, Real& err) {
  using R = GK15<Real>;
  const Real c = (a + b) / 2, h = (b - a) / 2;
  const Real fc = f(c);
  Real k = fc * R::wk[7];
  Real g = fc * R::wg[3];
  for (int j = 0; j < 7; ++j) {
    const Real x = h * R::xk[j];
    const Real s = f(c - x) + f(c + x);
    k += R::wk[j] * s;
    if (j % 2 == 1) g += R::wg[j / 2] * s;
  }
  result = k * h;
  err = std::abs((k - g) * h);
}

}  // namespace detail

// Adaptive Gauss-Kronrod on a finite interval; stops when the summed error
// estimate falls below tol (absolute).
template <class Real = double>
QuadResult integrate_finite(const std::function<Real(Real)>& f, Real a, Real b, double tol,
                            int max_intervals = 20000) {
  struct Piece {
    Real a, b, value, err;
    bool operator<(const Piece& o) const { return err < o.err; }
  };
  QuadResult out;
  if (a == b) return out;
  auto fc = f;
  std::priority_queue<Piece> heap;
  Real v, e;
  detail::gk15(fc, a, b, v, e);
  out.evaluations = 15;
  heap.push({a, b, v, e});
  Real total = v, total_err = e;
  int intervals = 1;
  while (total_err > Real(tol) && intervals < max_intervals) {
    Piece worst = heap.top();
    heap.pop();
    const Real m = (worst.a + worst.b) / 2;
    Real v1, e1, v2, e2;
    detail::gk15(fc, worst.a, m, v1, e1);
    detail::gk15(fc, m, worst.b, v2, e2);
    out.evaluations += 30;
    total += v1 + v2 - worst.value;
    total_err += e1 + e2 - worst.err;
    heap.push({worst.a, m, v1, e1});
    heap.push({m, worst.b, v2, e2});
    ++intervals;
    if (std::abs(worst.b - worst.a) < std::abs(b - a) * Real(1e-15)) break;
  }
  // Re-sum to avoid drift in the running totals.
  total = 0;
  total_err = 0;
  while (!heap.empty()) {
    total += heap.top().value;
    total_err += heap.top().err;
    heap.pop();
  }
  out.value = static_cast<double>(total);
  out.error = static_cast<double>(total_err);
  out.converged = total_err <= Real(tol);
  return out;
}

// |f(s)| <= K e^{rate s} for s beyond the truncation point, rate < 0.
struct DecayBound {
  double K = 0.0;
  double rate = 0.0;
};

// Integral over [a, inf). The truncation point T is chosen so the bound's
// tail K e^{rate T}/|rate| is below tol/2; the rest uses tol/2.
template <class Real = double>
QuadResult integrate_to_infinity(const std::function<Real(Real)>& f, Real a,
                                 std::optional<DecayBound> bound, double tol) {
  if (!bound) {
    throw Error(ErrorKind::domain, "infinite-limit quadrature needs a decay bound");
  }
  if (!(bound->rate < 0.0) || !(bound->K >= 0.0)) {
    throw Error(ErrorKind::domain, "decay bound must have K >= 0 and a negative rate, got rate " +
                                       format_real(bound->rate));
  }
  const double r = -bound->rate;
  double T = static_cast<double>(a);
  if (bound->K > 0.0) {
    T = std::max(T, std::log(2.0 * bound->K / (r * tol)) / r);
  }
  QuadResult q = integrate_finite<Real>(f, a, static_cast<Real>(T), tol / 2);
  q.error += bound->K * std::exp(-r * T) / r;
  return q;
}

}  // namespace sinkasym
