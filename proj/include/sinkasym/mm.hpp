#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "sinkasym/errors.hpp"
#include "sinkasym/fit.hpp"
#include "sinkasym/ode.hpp"
#include "sinkasym/quadrature.hpp"
#include "sinkasym/system.hpp"

namespace sinkasym {

// Rate constants and total enzyme for S + E <-> C -> P + E.
struct MMDimensional {
  double k1 = 1.0;
  double km1 = 1.0;
  double k2 = 1.0;
  double e0 = 1.0;
};

// t = k1 e0 tau, s = Km x, c = e0 y.
struct MMScaling {
  double eps = 1.0;
  double eta = 0.5;
  double Km = 1.0;
  double time_scale = 1.0;       // tau = t * time_scale
  double substrate_scale = 1.0;  // s = x * substrate_scale
  double complex_scale = 1.0;    // c = y * complex_scale
  std::optional<MMDimensional> source;
};

inline void check_mm_params(double eps, double eta) {
  if (!(eps > 0.0) || !std::isfinite(eps)) {
    throw Error(ErrorKind::domain, "eps must be positive, got " + format_real(eps));
  }
  if (!(eta > 0.0 && eta < 1.0)) {
    throw Error(ErrorKind::domain, "eta must lie in (0, 1), got " + format_real(eta));
  }
}

inline MMScaling nondimensionalize(const MMDimensional& d) {
  if (!(d.k1 > 0.0 && d.km1 > 0.0 && d.k2 > 0.0 && d.e0 > 0.0)) {
    throw Error(ErrorKind::domain, "rate constants and e0 must be positive");
  }
  MMScaling s;
  s.Km = (d.km1 + d.k2) / d.k1;
  s.eps = d.e0 / s.Km;
  s.eta = d.k2 / (d.km1 + d.k2);
  s.time_scale = 1.0 / (d.k1 * d.e0);
  s.substrate_scale = s.Km;
  s.complex_scale = d.e0;
  s.source = d;
  check_mm_params(s.eps, s.eta);
  return s;
}

inline MMScaling dimensionless(double eps, double eta) {
  check_mm_params(eps, eta);
  MMScaling s;
  s.eps = eps;
  s.eta = eta;
  return s;
}

inline Eigen::MatrixXd mm_matrix(double eps, double eta) {
  Eigen::MatrixXd A(2, 2);
  A << -1.0, 1.0 - eta, 1.0 / eps, -1.0 / eps;
  return A;
}

// b(x, y) = x y (1, -1/eps)
inline PolyVectorField mm_field(double eps) {
  return make_field({{{1.0, {1, 1}}}, {{-1.0 / eps, {1, 1}}}});
}

inline SinkSystem mm_system(double eps, double eta) {
  check_mm_params(eps, eta);
  return build_system(mm_matrix(eps, eta), mm_field(eps));
}

struct MMSpectrum {
  double eps = 1.0, eta = 0.5;
  double lambda_plus = 0.0;   // slow
  double lambda_minus = 0.0;  // fast
  double sigma_plus = 0.0;    // slope of the slow eigenvector
  double sigma_minus = 0.0;
  double kappa = 1.0;
  Eigen::Matrix2d P;  // columns (1, sigma+), (1, sigma-)
  double detP = 0.0;
  double r211 = 0.0;  // u1^2 coefficient of the second diagonalized component
};

inline MMSpectrum mm_spectrum(double eps, double eta) {
  check_mm_params(eps, eta);
  MMSpectrum s;
  s.eps = eps;
  s.eta = eta;
  const double disc = (eps + 1.0) * (eps + 1.0) - 4.0 * eps * eta;
  if (!(disc > 0.0)) {
    throw Error(ErrorKind::consistency, "discriminant " + format_real(disc) + " is not positive");
  }
  s.lambda_minus = (-(eps + 1.0) - std::sqrt(disc)) / (2.0 * eps);
  // Product of the roots is eta/eps; avoids cancellation in the slow root.
  s.lambda_plus = (eta / eps) / s.lambda_minus;
  s.sigma_plus = (s.lambda_plus + 1.0) / (1.0 - eta);
  s.sigma_minus = (s.lambda_minus + 1.0) / (1.0 - eta);
  s.kappa = s.lambda_minus / s.lambda_plus;
  s.P << 1.0, 1.0, s.sigma_plus, s.sigma_minus;
  s.detP = s.sigma_minus - s.sigma_plus;
  s.r211 = s.sigma_plus * (s.sigma_plus + 1.0 / eps) / (s.sigma_plus - s.sigma_minus);
  return s;
}

// Power-series coefficients of y(x) along the slow manifold, stopping at a
// vanishing denominator. The denominator equals lambda_+ (n - kappa), so the
// pole test is |n - kappa| < pole_tol.
struct SigmaSequence {
  std::vector<double> sigma;         // sigma_0 .. sigma_last
  std::vector<double> numerators;    // index n; zero for n < 2
  std::vector<double> denominators;  // index n; zero for n < 2
  std::optional<int> pole_index;
  // At a pole n = kappa the series needs x^kappa ln x with this coefficient.
  std::optional<double> log_coefficient;
};

inline constexpr double kPoleTolerance = 1e-6;

namespace detail {

inline double sigma_numerator(const std::vector<double>& s, int n, double eps, double eta) {
  double num = 0.0;
  for (int k = 2; k <= n - 1; ++k) {
    num += ((n - k) * s[n - k] + (1.0 - eta) * (n - k + 1) * s[n - k + 1]) * s[k];
  }
  num += ((n - 1) * s[1] + 1.0 / eps) * s[n - 1];
  return num;
}

inline double sigma_denominator(const std::vector<double>& s, int n, double eps, double eta) {
  return 1.0 / eps + (1.0 - eta) * (n + 1) * s[1] - n;
}

}  // namespace detail

inline SigmaSequence sigma_recursion(double eps, double eta, int N,
                                     double pole_tol = kPoleTolerance) {
  if (N < 1) throw Error(ErrorKind::input, "sigma_recursion needs N >= 1");
  const MMSpectrum sp = mm_spectrum(eps, eta);
  SigmaSequence out;
  out.sigma = {0.0, sp.sigma_plus};
  out.numerators = {0.0, 0.0};
  out.denominators = {0.0, 0.0};
  for (int n = 2; n <= N; ++n) {
    const double num = detail::sigma_numerator(out.sigma, n, eps, eta);
    const double den = detail::sigma_denominator(out.sigma, n, eps, eta);
    out.numerators.push_back(num);
    out.denominators.push_back(den);
    if (std::abs(den / sp.lambda_plus) < pole_tol) {
      out.pole_index = n;
      out.log_coefficient = -num / sp.lambda_plus;
      break;
    }
    out.sigma.push_back(-num / den);
  }
  return out;
}

enum class MMCase { non_integer, resonant_two, resonant_higher };

inline const char* to_string(MMCase c) {
  switch (c) {
    case MMCase::non_integer: return "kappa not an integer";
    case MMCase::resonant_two: return "kappa = 2";
    case MMCase::resonant_higher: return "kappa integer >= 3";
  }
  return "?";
}

// One term of an expansion y(x) = sum coeff x^power (ln x)^logpow; a missing
// coefficient is the initial-condition constant C, left to a trajectory fit.
struct MMTerm {
  double power = 1.0;
  int logpow = 0;
  std::optional<double> coeff;
};

struct MMTemplate {
  MMCase kind = MMCase::non_integer;
  std::vector<MMTerm> terms;
  double remainder_power = 0.0;
  bool remainder_little_o = true;

  std::vector<RelationTerm> fit_template() const {
    std::vector<RelationTerm> r;
    for (const auto& t : terms) r.push_back({t.power, t.logpow});
    return r;
  }

  std::string str() const {
    std::string s = "y =";
    bool first = true;
    for (const auto& t : terms) {
      s += first ? " " : " + ";
      s += t.coeff ? format_real(*t.coeff) : std::string("C");
      s += "*x";
      if (t.power != 1.0) s += "^" + format_real(t.power);
      if (t.logpow) s += "*ln(x)";
      first = false;
    }
    s += std::string(" + ") + (remainder_little_o ? "o(" : "O(") + "x^" +
         format_real(remainder_power) + ")";
    return s;
  }
};

struct MMExpansion {
  MMSpectrum spectrum;
  SigmaSequence sigma;
  std::vector<MMTemplate> templates;  // primary first; two inside the near-integer band
  std::vector<std::string> warnings;
};

// Width of the band around an integer kappa inside which both the series and
// the logarithmic template are reported.
inline constexpr double kNearIntegerBand = 1e-3;

namespace detail {

inline MMTemplate series_template(const MMSpectrum& sp, const SigmaSequence& seq) {
  MMTemplate t;
  t.kind = MMCase::non_integer;
  const int top = static_cast<int>(std::floor(sp.kappa));
  for (int n = 1; n <= top && n < static_cast<int>(seq.sigma.size()); ++n) {
    t.terms.push_back({static_cast<double>(n), 0, seq.sigma[n]});
  }
  t.terms.push_back({sp.kappa, 0, std::nullopt});
  t.remainder_power = sp.kappa;
  t.remainder_little_o = true;
  return t;
}

inline MMTemplate resonant_template(const MMSpectrum& sp, int n, double log_coeff,
                                    const std::vector<double>& sigma) {
  MMTemplate t;
  t.kind = n == 2 ? MMCase::resonant_two : MMCase::resonant_higher;
  for (int k = 1; k < n && k < static_cast<int>(sigma.size()); ++k) {
    t.terms.push_back({static_cast<double>(k), 0, sigma[k]});
  }
  if (n == 2 || std::abs(log_coeff) > 1e-12 * std::max(1.0, std::abs(sigma[1]))) {
    t.terms.push_back({static_cast<double>(n), 1, log_coeff});
  }
  t.terms.push_back({static_cast<double>(n), 0, std::nullopt});
  t.remainder_power = n == 2 ? 2.0 : n + 1.0;
  t.remainder_little_o = n == 2;
  (void)sp;
  return t;
}

}  // namespace detail

inline MMExpansion mm_expansion(double eps, double eta) {
  MMExpansion e;
  e.spectrum = mm_spectrum(eps, eta);
  const double kappa = e.spectrum.kappa;
  const int nearest = static_cast<int>(std::lround(kappa));
  e.sigma = sigma_recursion(eps, eta, std::max(nearest, static_cast<int>(std::floor(kappa))) + 1);
  if (e.sigma.pole_index) {
    const int n = *e.sigma.pole_index;
    e.templates.push_back(
        detail::resonant_template(e.spectrum, n, *e.sigma.log_coefficient, e.sigma.sigma));
    if (n >= 3 && e.templates.front().terms.size() > static_cast<std::size_t>(n)) {
      e.warnings.push_back("kappa = " + std::to_string(n) +
                           ": the resonant forcing is nonzero, so the expansion carries x^" +
                           std::to_string(n) + " ln x before the constant term");
    }
    return e;
  }
  e.templates.push_back(detail::series_template(e.spectrum, e.sigma));
  const double gap = std::abs(kappa - nearest);
  if (nearest >= 2 && gap < kNearIntegerBand) {
    e.warnings.push_back("kappa = " + format_real(kappa) + " is within " +
                         format_real(kNearIntegerBand) + " of " + std::to_string(nearest) +
                         "; the logarithmic template is reported as well");
    const std::size_t idx = static_cast<std::size_t>(nearest);
    const double log_coeff = -e.sigma.numerators.at(idx) / e.spectrum.lambda_plus;
    e.templates.push_back(
        detail::resonant_template(e.spectrum, nearest, log_coeff, e.sigma.sigma));
  }
  return e;
}

// Quasi-steady-state law H(x) and the slope-sigma+ isocline alpha(x).
struct RateLaws {
  double qssa = 0.0;
  double alpha = 0.0;
};

inline RateLaws rate_laws(double x, double sigma_plus) {
  if (x < 0.0) throw Error(ErrorKind::domain, "rate laws need x >= 0");
  return {x / (1.0 + x), x / (1.0 / sigma_plus + x)};
}

enum class RateClass { fast_eigenvalue, double_slow_with_t, double_slow };

inline const char* to_string(RateClass c) {
  switch (c) {
    case RateClass::fast_eigenvalue: return "lambda_-";
    case RateClass::double_slow_with_t: return "2 lambda_+ with t prefactor";
    case RateClass::double_slow: return "2 lambda_+";
  }
  return "?";
}

struct RateLawOptions {
  double T = 0.0;                   // 0: chosen from the spectrum
  double window_lo_fraction = 0.4;  // fit window [lo*T, T]
  double resolvable = 1e-9;         // smallest error/|y| ratio kept in the window
  double rtol = 1e-12;
  double atol = 1e-30;
};

struct RateLawReport {
  MMSpectrum spectrum;
  RateClass predicted = RateClass::double_slow;
  double predicted_alpha_rate = 0.0;
  double predicted_qssa_rate = 0.0;
  FitReport qssa;
  FitReport alpha;
  bool conclusive = true;
  std::string note;

  // The alpha-law fit lands in the predicted class by model selection and rate.
  bool class_matches(double rel_tol = 0.05) const {
    if (!conclusive || !alpha.conclusive) return false;
    const bool want_t = predicted == RateClass::double_slow_with_t;
    const bool got_t = alpha.model == FitModel::exponential_t;
    if (want_t != got_t) return false;
    return std::abs(alpha.rate - predicted_alpha_rate) <= rel_tol * std::abs(predicted_alpha_rate);
  }
};

// Integrates the dimensionless system from x0 and fits the decay of
// y - H(x) and y - alpha(x).
inline RateLawReport rate_law_errors(double eps, double eta, const std::vector<double>& x0,
                                     RateLawOptions opt = {}) {
  if (x0.size() != 2 || x0[0] < 0.0 || x0[1] < 0.0 || (x0[0] == 0.0 && x0[1] == 0.0)) {
    throw Error(ErrorKind::domain, "initial condition must be nonnegative and nonzero");
  }
  RateLawReport rep;
  rep.spectrum = mm_spectrum(eps, eta);
  const auto& sp = rep.spectrum;
  const double k = sp.kappa;
  if (std::abs(k - 2.0) < kPoleTolerance) {
    rep.predicted = RateClass::double_slow_with_t;
    rep.predicted_alpha_rate = 2.0 * sp.lambda_plus;
  } else if (k < 2.0) {
    rep.predicted = RateClass::fast_eigenvalue;
    rep.predicted_alpha_rate = sp.lambda_minus;
  } else {
    rep.predicted = RateClass::double_slow;
    rep.predicted_alpha_rate = 2.0 * sp.lambda_plus;
  }
  rep.predicted_qssa_rate = sp.lambda_plus;

  // The alpha-law error shrinks relative to y like e^{(alpha_rate - lambda_+) t};
  // stop before that ratio drops below what the integrator resolves.
  double T = opt.T;
  if (T <= 0.0) T = std::log(1.0 / opt.resolvable) / (sp.lambda_plus - rep.predicted_alpha_rate);
  OdeOptions ode;
  ode.rtol = opt.rtol;
  ode.atol = opt.atol;
  const SinkSystem sys = mm_system(eps, eta);
  Trajectory<long double> traj;
  try {
    traj = integrate<long double>(sys, {static_cast<long double>(x0[0]),
                                        static_cast<long double>(x0[1])},
                                  static_cast<long double>(T), ode);
  } catch (const Error& e) {
    rep.conclusive = false;
    rep.note = e.what();
    return rep;
  }
  std::vector<double> t, eh, ea;
  const int samples = 400;
  for (int i = 0; i <= samples; ++i) {
    const double s = T * i / samples;
    const auto x = traj.at(static_cast<long double>(s));
    const long double xs = x[0], ys = x[1];
    const long double h = xs / (1.0L + xs);
    const long double al = xs / (1.0L / static_cast<long double>(sp.sigma_plus) + xs);
    // Differences below the resolvable fraction of y are integrator noise.
    const long double cut = 0.1L * static_cast<long double>(opt.resolvable) * std::fabs(ys);
    const long double dh = std::fabs(ys - h), da = std::fabs(ys - al);
    t.push_back(s);
    eh.push_back(dh > cut ? static_cast<double>(dh) : 0.0);
    ea.push_back(da > cut ? static_cast<double>(da) : 0.0);
  }
  DecayFitOptions fo;
  fo.floor_rel = 0.0;
  fo.t_lo = opt.window_lo_fraction * T;
  fo.t_hi = T;
  rep.qssa = fit_decay(t, eh, fo);
  rep.alpha = fit_decay(t, ea, fo);
  rep.conclusive = rep.qssa.conclusive && rep.alpha.conclusive;
  return rep;
}

// Dimensional view of a dimensionless trajectory sample.
struct MMDimensionalState {
  double tau = 0.0;
  double s = 0.0;
  double c = 0.0;
  double e = 0.0;
};

inline MMDimensionalState to_dimensional(const MMScaling& sc, double t, double x, double y) {
  if (!sc.source) throw Error(ErrorKind::input, "no dimensional parameters to map back to");
  return {t * sc.time_scale, x * sc.substrate_scale, y * sc.complex_scale,
          sc.source->e0 - y * sc.complex_scale};
}

// p(tau) - p(0) = k2 int_0^tau c, by quadrature of the dense output.
inline double product_formed(const MMScaling& sc, const Trajectory<double>& traj, double t) {
  if (!sc.source) throw Error(ErrorKind::input, "no dimensional parameters to map back to");
  std::function<double(double)> c = [&](double s) { return traj.at(s)[1] * sc.complex_scale; };
  const QuadResult q = integrate_finite<double>(c, 0.0, t, 1e-12 * sc.complex_scale);
  return sc.source->k2 * q.value * sc.time_scale;
}

}  // namespace sinkasym
