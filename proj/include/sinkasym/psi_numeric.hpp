#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "sinkasym/errors.hpp"
#include "sinkasym/iterates.hpp"
#include "sinkasym/ode.hpp"
#include "sinkasym/quadrature.hpp"
#include "sinkasym/system.hpp"

namespace sinkasym {

struct PsiNumericOptions {
  double tol = 1e-11;     // absolute quadrature tolerance per component
  double sigma = 0.01;    // slack added to the slow rate in the decay bounds
  double rtol = 1e-12;
  double atol = 1e-30;
  double ball = 0.25;
};

struct PsiNumericResult {
  std::vector<double> value;      // psi in the coordinates it was asked for
  std::vector<double> error;      // quadrature error estimates (eigen-coordinates)
  double horizon = 0.0;
};

// psi(u0) in eigen-coordinates: u0_j + int_0^inf e^{-lambda_j s} r_j(u(s)) ds,
// with fast components of a widely-spaced system using the difference against
// the simplified iterate D_{p_j - 1} at the slow components of psi.
inline PsiNumericResult psi_numeric_eigen(const SinkSystem& sys, const std::vector<double>& u0,
                                          const PsiNumericOptions& opt = {}) {
  const SinkSystem d = sys.diagonal_form();
  const std::size_t n = d.dim();
  if (u0.size() != n) throw Error(ErrorKind::dimension, "u0 has wrong length");
  const WidePlan plan = plan_blocks(d.spectrum, d.b);
  const double mu1 = d.spectrum.eigenvalues.front();
  const int alpha = d.alpha(), beta = d.beta();

  // Decay rate of each integrand. The slack on the slow rate shrinks when the
  // spectral gap to the fast eigenvalue is narrow.
  std::vector<double> rho(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double lam = d.spectrum.eigenvalues[j];
    const double mult = plan.is_fast_component(j)
                            ? alpha + (plan.p_of_component(j) - 1.0) * beta
                            : static_cast<double>(alpha);
    const double gap = lam - mult * mu1;
    if (!(gap > 0.0)) {
      throw Error(ErrorKind::regime, "psi integrand for component " + std::to_string(j + 1) +
                                         " does not decay (rate " + format_real(-gap) + ")");
    }
    const double sigma = std::min(opt.sigma, 0.25 * gap / mult);
    rho[j] = mult * (mu1 + sigma) - lam;
  }
  std::optional<IterateSet> its;
  int max_p = 1;
  for (std::size_t j = 0; j < n; ++j) {
    if (plan.is_fast_component(j)) max_p = std::max(max_p, plan.p_of_component(j));
  }
  if (max_p > 1) {
    const Regime r = n == 2 ? Regime::widely_2d : Regime::widely_nd;
    its = detail::build_iterates(d, plan, r, max_p - 1);
  }

  OdeOptions ode;
  ode.rtol = opt.rtol;
  ode.atol = opt.atol;
  ode.ball = opt.ball;

  PsiNumericResult out;
  out.value.assign(n, 0.0);
  out.error.assign(n, 0.0);
  std::vector<double> y0(n, 0.0);  // parameters for the reference iterate

  auto integrand_factory = [&](const Trajectory<double>& traj, std::size_t j) {
    const double lam = d.spectrum.eigenvalues[j];
    return std::function<double(double)>([&, j, lam](double s) {
      const std::vector<double> u = traj.at(s);
      double v = d.b.component(j).eval(std::span<const double>(u));
      if (plan.is_fast_component(j)) {
        const auto& ref = its->D_simplified(plan.p_of_component(j) - 1);
        std::vector<double> x;
        for (const auto& c : ref) x.push_back(c.eval(s, y0));
        v -= d.b.component(j).eval(std::span<const double>(x));
      }
      return std::exp(-lam * s) * v;
    });
  };

  // Past the time where the state sinks to the absolute tolerance the step
  // controller stops resolving the fast modes.
  double u0max = 0.0;
  for (double v : u0) u0max = std::max(u0max, std::abs(v));
  const double T_floor =
      u0max > 0.0 ? std::clamp(std::log(u0max / (1e3 * opt.atol)) / -mu1, 1.0, 2000.0) : 1.0;
  double T = 0.0;
  for (double r : rho) T = std::max(T, 30.0 / -r);
  T = std::min({T, 400.0, T_floor});
  Trajectory<double> traj = integrate<double>(d, u0, T, ode);
  // Slow components first: the fast reference iterate needs them.
  std::vector<std::size_t> order;
  for (std::size_t j = 0; j < n; ++j)
    if (!plan.is_fast_component(j)) order.push_back(j);
  for (std::size_t j = 0; j < n; ++j)
    if (plan.is_fast_component(j)) order.push_back(j);

  for (std::size_t j : order) {
    if (plan.is_fast_component(j)) {
      for (std::size_t k = 0; k < n; ++k) {
        if (!plan.is_fast_component(k)) y0[k] = out.value[k];
      }
    }
    for (int attempt = 0;; ++attempt) {
      const auto g = integrand_factory(traj, j);
      const double r = -rho[j];
      // Fast integrands are a difference of two terms that each grow like
      // e^{(alpha mu1 - lambda_j) s}; past the point where rounding in that
      // difference reaches the tolerance the samples are noise.
      double T_use = T;
      if (plan.is_fast_component(j)) {
        const double lam = d.spectrum.eigenvalues[j];
        for (double s = 0.0; s <= T; s += T / 400.0) {
          const std::vector<double> u = traj.at(s);
          const double mag = std::exp(-lam * s) * std::abs(d.b.component(j).eval(std::span<const double>(u)));
          if (1e2 * std::numeric_limits<double>::epsilon() * mag * s > 0.1 * opt.tol) {
            T_use = std::max(s, T / 400.0);
            break;
          }
        }
      }
      // Calibrate K from the integrand over the last fifth of the usable range.
      double K = 0.0;
      for (int i = 0; i <= 20; ++i) {
        const double s = T_use * (0.8 + 0.01 * i);
        K = std::max(K, std::abs(g(s)) * std::exp(-rho[j] * s));
      }
      K *= 10.0;
      const double need = K > 0.0 ? std::log(2.0 * K / (r * opt.tol)) / r : 0.0;
      if (T_use < T || need <= T || T >= T_floor || attempt >= 4) {
        const double upper = std::min(T_use, std::max(need, 0.0));
        QuadResult q = integrate_finite<double>(g, 0.0, upper, opt.tol / 2);
        q.error += K * std::exp(-r * upper) / r;
        out.value[j] = u0[j] + q.value;
        out.error[j] = q.error;
        break;
      }
      T = std::min(1.25 * need, T_floor);
      traj = integrate<double>(d, u0, T, ode);
    }
  }
  out.horizon = T;
  return out;
}

// psi(x0) in the original coordinates: P psi_u(Pinv x0).
inline PsiNumericResult psi_numeric(const SinkSystem& sys, const std::vector<double>& x0,
                                    const PsiNumericOptions& opt = {}) {
  const std::size_t n = sys.dim();
  if (x0.size() != n) throw Error(ErrorKind::dimension, "x0 has wrong length");
  Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(x0.data(), n);
  Eigen::VectorXd u = sys.spectrum.Pinv * x;
  PsiNumericResult r = psi_numeric_eigen(sys, std::vector<double>(u.data(), u.data() + n), opt);
  Eigen::VectorXd pu = Eigen::Map<const Eigen::VectorXd>(r.value.data(), n);
  Eigen::VectorXd back = sys.spectrum.P * pu;
  r.value.assign(back.data(), back.data() + n);
  return r;
}

}  // namespace sinkasym
