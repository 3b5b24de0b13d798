#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "sinkasym/errors.hpp"
#include "sinkasym/param_poly.hpp"
#include "sinkasym/system.hpp"

namespace sinkasym {

struct OdeOptions {
  double rtol = 1e-10;
  double atol = 1e-13;
  double ball = 0.25;      // validity radius (infinity norm); <= 0 disables the check
  double h0 = 0.0;         // initial step, 0 = automatic
  double fixed_step = 0.0; // > 0 switches off error control
  std::size_t max_steps = 50'000'000;
};

// Dormand-Prince 5(4) output with the pair's own 4th-order dense interpolant.
template <class Real>
struct Trajectory {
  std::vector<Real> times;
  std::vector<std::vector<Real>> states;
  // Per step: five coefficient vectors of the dense interpolant.
  std::vector<std::array<std::vector<Real>, 5>> dense;
  double rtol = 0.0;
  double atol = 0.0;
  std::size_t rejected = 0;

  std::size_t dim() const { return states.empty() ? 0 : states.front().size(); }
  Real t_end() const { return times.back(); }
  std::size_t steps() const { return dense.size(); }

  std::vector<Real> at(Real t) const {
    if (times.empty()) throw Error(ErrorKind::domain, "empty trajectory");
    if (t < times.front() || t > times.back()) {
      throw Error(ErrorKind::domain, "time " + format_real(static_cast<double>(t)) +
                                         " outside the integrated interval [" +
                                         format_real(static_cast<double>(times.front())) + ", " +
                                         format_real(static_cast<double>(times.back())) + "]");
    }
    auto it = std::upper_bound(times.begin(), times.end(), t);
    std::size_t i = it == times.begin() ? 0 : static_cast<std::size_t>(it - times.begin()) - 1;
    if (times[i] == t) return states[i];
    if (i >= dense.size()) return states.back();
    const Real h = times[i + 1] - times[i];
    const Real th = (t - times[i]) / h;
    const Real th1 = Real(1) - th;
    const auto& rc = dense[i];
    std::vector<Real> y(rc[0].size());
    for (std::size_t k = 0; k < y.size(); ++k) {
      y[k] = rc[0][k] + th * (rc[1][k] + th1 * (rc[2][k] + th * (rc[3][k] + th1 * rc[4][k])));
    }
    return y;
  }
};

namespace detail {

template <class Real>
struct Dopri5Tableau {
  static constexpr Real c2 = Real(1) / 5, c3 = Real(3) / 10, c4 = Real(4) / 5, c5 = Real(8) / 9;
  static constexpr Real a21 = Real(1) / 5;
  static constexpr Real a31 = Real(3) / 40, a32 = Real(9) / 40;
  static constexpr Real a41 = Real(44) / 45, a42 = Real(-56) / 15, a43 = Real(32) / 9;
  static constexpr Real a51 = Real(19372) / 6561, a52 = Real(-25360) / 2187,
                        a53 = Real(64448) / 6561, a54 = Real(-212) / 729;
  static constexpr Real a61 = Real(9017) / 3168, a62 = Real(-355) / 33, a63 = Real(46732) / 5247,
                        a64 = Real(49) / 176, a65 = Real(-5103) / 18656;
  static constexpr Real a71 = Real(35) / 384, a73 = Real(500) / 1113, a74 = Real(125) / 192,
                        a75 = Real(-2187) / 6784, a76 = Real(11) / 84;
  static constexpr Real e1 = Real(71) / 57600, e3 = Real(-71) / 16695, e4 = Real(71) / 1920,
                        e5 = Real(-17253) / 339200, e6 = Real(22) / 525, e7 = Real(-1) / 40;
  static constexpr Real d1 = Real(-12715105075.0L) / Real(11282082432.0L),
                        d3 = Real(87487479700.0L) / Real(32700410799.0L),
                        d4 = Real(-10690763975.0L) / Real(1880347072.0L),
                        d5 = Real(701980252875.0L) / Real(199316789632.0L),
                        d6 = Real(-1453857185.0L) / Real(822651844.0L),
                        d7 = Real(69997945.0L) / Real(29380423.0L);
};

template <class Real>
Real inf_norm(const std::vector<Real>& x) {
  Real m = 0;
  for (const auto& v : x) m = std::max<Real>(m, std::abs(v));
  return m;
}

}  // namespace detail

template <class Real>
using Rhs = std::function<void(Real, const std::vector<Real>&, std::vector<Real>&)>;

// Integrates y' = f(t, y) on [0, T].
template <class Real>
Trajectory<Real> integrate_rhs(const Rhs<Real>& f, std::vector<Real> y0, Real T,
                               const OdeOptions& opt = {}) {
  using Tab = detail::Dopri5Tableau<Real>;
  if (!(T > 0)) throw Error(ErrorKind::domain, "integration horizon must be positive");
  const std::size_t n = y0.size();
  if (opt.ball > 0 && detail::inf_norm(y0) > Real(opt.ball)) {
    throw Error(ErrorKind::escape, "initial state norm " +
                                       format_real(static_cast<double>(detail::inf_norm(y0))) +
                                       " exceeds the validity ball " + format_real(opt.ball));
  }
  Trajectory<Real> traj;
  traj.rtol = opt.rtol;
  traj.atol = opt.atol;
  traj.times.push_back(0);
  traj.states.push_back(y0);

  const Real rtol = opt.rtol, atol = opt.atol;
  const Real beta = Real(0.04), expo1 = Real(0.2) - beta * Real(0.75);
  const Real safe = Real(0.9), facc1 = Real(5), facc2 = Real(0.1);
  Real facold = Real(1e-4);

  std::vector<Real> k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), ytmp(n), y1(n), err(n);
  Real t = 0;
  f(t, y0, k1);

  auto weight = [&](std::size_t i, const std::vector<Real>& a, const std::vector<Real>& b) {
    return atol + rtol * std::max<Real>(std::abs(a[i]), std::abs(b[i]));
  };

  Real h = opt.fixed_step > 0 ? Real(opt.fixed_step) : Real(opt.h0);
  if (!(h > 0)) {
    // Hairer's initial step heuristic.
    Real dnf = 0, dny = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const Real sk = atol + rtol * std::abs(y0[i]);
      dnf += (k1[i] / sk) * (k1[i] / sk);
      dny += (y0[i] / sk) * (y0[i] / sk);
    }
    h = (dnf <= Real(1e-10) || dny <= Real(1e-10)) ? Real(1e-6)
                                                    : std::sqrt(dny / dnf) * Real(0.01);
    h = std::min(h, T);
    for (std::size_t i = 0; i < n; ++i) ytmp[i] = y0[i] + h * k1[i];
    f(t + h, ytmp, k2);
    Real der2 = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const Real sk = atol + rtol * std::abs(y0[i]);
      const Real d = (k2[i] - k1[i]) / sk;
      der2 += d * d;
    }
    der2 = std::sqrt(der2) / h;
    const Real der12 = std::max(std::abs(der2), std::sqrt(dnf));
    const Real h1 = der12 <= Real(1e-15) ? std::max(Real(1e-6), std::abs(h) * Real(1e-3))
                                         : std::pow(Real(0.01) / der12, Real(0.2));
    h = std::min({Real(100) * h, h1, T});
    // A zero component with a tiny atol drives the heuristic toward zero.
    h = std::max(h, std::min(T, std::numeric_limits<Real>::epsilon() * Real(1e4) * std::max<Real>(T, 1)));
  }

  std::vector<Real> y = y0;
  std::size_t nsteps = 0;
  bool reject = false;
  const Real hmin = std::numeric_limits<Real>::epsilon() * Real(16) * std::max<Real>(T, 1);
  while (t < T) {
    if (++nsteps > opt.max_steps) {
      throw Error(ErrorKind::stiffness, "step budget exhausted at t=" +
                                            format_real(static_cast<double>(t)));
    }
    if (t + h > T) h = T - t;
    if (h < hmin && t + h < T) {
      throw Error(ErrorKind::stiffness,
                  "step size underflow at t=" + format_real(static_cast<double>(t)) +
                      "; try a smaller validity ball or looser tolerances");
    }
    for (std::size_t i = 0; i < n; ++i) ytmp[i] = y[i] + h * Tab::a21 * k1[i];
    f(t + Tab::c2 * h, ytmp, k2);
    for (std::size_t i = 0; i < n; ++i) ytmp[i] = y[i] + h * (Tab::a31 * k1[i] + Tab::a32 * k2[i]);
    f(t + Tab::c3 * h, ytmp, k3);
    for (std::size_t i = 0; i < n; ++i)
      ytmp[i] = y[i] + h * (Tab::a41 * k1[i] + Tab::a42 * k2[i] + Tab::a43 * k3[i]);
    f(t + Tab::c4 * h, ytmp, k4);
    for (std::size_t i = 0; i < n; ++i)
      ytmp[i] = y[i] + h * (Tab::a51 * k1[i] + Tab::a52 * k2[i] + Tab::a53 * k3[i] +
                            Tab::a54 * k4[i]);
    f(t + Tab::c5 * h, ytmp, k5);
    for (std::size_t i = 0; i < n; ++i)
      ytmp[i] = y[i] + h * (Tab::a61 * k1[i] + Tab::a62 * k2[i] + Tab::a63 * k3[i] +
                            Tab::a64 * k4[i] + Tab::a65 * k5[i]);
    const Real tph = t + h;
    f(tph, ytmp, k6);
    for (std::size_t i = 0; i < n; ++i)
      y1[i] = y[i] + h * (Tab::a71 * k1[i] + Tab::a73 * k3[i] + Tab::a74 * k4[i] +
                          Tab::a75 * k5[i] + Tab::a76 * k6[i]);
    f(tph, y1, k7);

    Real errnorm = 0;
    if (opt.fixed_step <= 0) {
      for (std::size_t i = 0; i < n; ++i) {
        const Real e = h * (Tab::e1 * k1[i] + Tab::e3 * k3[i] + Tab::e4 * k4[i] +
                            Tab::e5 * k5[i] + Tab::e6 * k6[i] + Tab::e7 * k7[i]);
        const Real r = e / weight(i, y, y1);
        errnorm += r * r;
      }
      errnorm = std::sqrt(errnorm / static_cast<Real>(n));
    }
    if (!std::isfinite(static_cast<double>(errnorm))) {
      throw Error(ErrorKind::stiffness, "non-finite error estimate at t=" +
                                            format_real(static_cast<double>(t)));
    }

    const Real fac11 = std::pow(std::max(errnorm, Real(1e-30)), expo1);
    if (errnorm <= 1) {
      std::array<std::vector<Real>, 5> rc;
      for (auto& v : rc) v.resize(n);
      for (std::size_t i = 0; i < n; ++i) {
        rc[0][i] = y[i];
        rc[1][i] = y1[i] - y[i];
        rc[2][i] = h * k1[i] - rc[1][i];
        rc[3][i] = rc[1][i] - h * k7[i] - rc[2][i];
        rc[4][i] = h * (Tab::d1 * k1[i] + Tab::d3 * k3[i] + Tab::d4 * k4[i] + Tab::d5 * k5[i] +
                        Tab::d6 * k6[i] + Tab::d7 * k7[i]);
      }
      traj.dense.push_back(std::move(rc));
      t = tph;
      y = y1;
      k1 = k7;
      traj.times.push_back(t);
      traj.states.push_back(y);
      if (opt.ball > 0 && detail::inf_norm(y) > Real(opt.ball)) {
        throw EscapeError(static_cast<double>(t),
                          "trajectory left the validity ball of radius " + format_real(opt.ball) +
                              " at t=" + format_real(static_cast<double>(t)));
      }
      if (opt.fixed_step > 0) continue;
      Real fac = fac11 / std::pow(facold, beta);
      fac = std::max(facc2, std::min(facc1, fac / safe));
      Real hnew = h / fac;
      facold = std::max(errnorm, Real(1e-4));
      if (reject) hnew = std::min(hnew, h);
      reject = false;
      h = hnew;
    } else {
      reject = true;
      ++traj.rejected;
      h = h / std::min(facc1, fac11 / safe);
    }
  }
  return traj;
}

// Integrates x' = A x + b(x) for a sink system.
template <class Real>
Trajectory<Real> integrate(const SinkSystem& sys, const std::vector<Real>& x0, Real T,
                           const OdeOptions& opt = {}) {
  const std::size_t n = sys.dim();
  if (x0.size() != n) {
    throw Error(ErrorKind::dimension, "initial state has " + std::to_string(x0.size()) +
                                          " entries, system has " + std::to_string(n));
  }
  std::vector<Real> A(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) A[i * n + j] = static_cast<Real>(sys.A(i, j));
  const PolyVectorField& b = sys.b;
  Rhs<Real> f = [&, A](Real, const std::vector<Real>& x, std::vector<Real>& dx) {
    for (std::size_t i = 0; i < n; ++i) {
      Real s = b.component(i).eval(std::span<const Real>(x));
      for (std::size_t j = 0; j < n; ++j) s += A[i * n + j] * x[j];
      dx[i] = s;
    }
  };
  return integrate_rhs<Real>(f, x0, T, opt);
}

}  // namespace sinkasym
