#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "sinkasym/errors.hpp"
#include "sinkasym/fit.hpp"
#include "sinkasym/iterates.hpp"
#include "sinkasym/param_poly.hpp"
#include "sinkasym/system.hpp"

namespace sinkasym {

// A relation coefficient as a function of the free parameters y0 (or v0):
//   (value + log_part * ln(lead)) * lead^lead_power,
// where lead is the leading coefficient of x1 in its expansion. lead_power is
// nonzero only for a non-integer exponent, whose normalisation cannot be
// written as a Laurent monomial.
struct RelationCoeff {
  ParamPoly value;
  ParamPoly log_part;
  double lead_power = 0.0;

  double eval(const std::vector<double>& params, const ParamPoly& lead) const {
    double v = value.eval(params);
    if (!log_part.is_zero() || lead_power != 0.0) {
      const double l = lead.eval(params);
      if (!(l > 0.0)) {
        throw Error(ErrorKind::domain, "leading coefficient " + format_real(l) +
                                           " must be positive to evaluate this coefficient");
      }
      if (!log_part.is_zero()) v += log_part.eval(params) * std::log(l);
      if (lead_power != 0.0) v *= std::pow(l, lead_power);
    }
    return v;
  }
};

struct RelationSeriesTerm {
  double power = 1.0;
  int logpow = 0;  // 0 or 1: x^power (ln x)^logpow
  RelationCoeff coeff;
  bool ic_dependent = false;
};

// x_dep = sum_k c_k x_ind^{q_k} (ln x_ind)^{l_k} + O(x_ind^{remainder} (ln x_ind)^{remainder_logpow}).
struct RelationSeries {
  std::vector<RelationSeriesTerm> terms;
  ParamPoly lead;  // leading coefficient of the abscissa, argument of the log parts
  std::vector<std::string> param_names;
  double remainder_power = 0.0;
  int remainder_logpow = 0;
  bool remainder_little_o = false;
  int abscissa = 1;  // 1: x2 as a function of x1; 2: roles swapped

  const RelationSeriesTerm* find(double power, int logpow) const {
    for (const auto& t : terms) {
      if (std::abs(t.power - power) < 1e-9 && t.logpow == logpow) return &t;
    }
    return nullptr;
  }

  double coefficient(double power, int logpow, const std::vector<double>& params) const {
    const auto* t = find(power, logpow);
    return t ? t->coeff.eval(params, lead) : 0.0;
  }

  std::vector<double> coefficients(const std::vector<double>& params) const {
    std::vector<double> c;
    for (const auto& t : terms) c.push_back(t.coeff.eval(params, lead));
    return c;
  }

  double eval(double x, const std::vector<double>& params) const {
    double s = 0.0;
    for (const auto& t : terms) {
      const double q = t.power;
      const bool integral = std::abs(q - std::round(q)) < 1e-12;
      if ((!integral || t.logpow > 0) && !(x > 0.0)) {
        throw Error(ErrorKind::domain, "non-integer or logarithmic term needs x > 0");
      }
      double v = integral ? std::pow(x, static_cast<int>(std::lround(q))) : std::pow(x, q);
      if (t.logpow > 0) v *= std::log(x);
      s += t.coeff.eval(params, lead) * v;
    }
    return s;
  }

  // Regressor template for fit_relation.
  std::vector<RelationTerm> fit_template() const {
    std::vector<RelationTerm> out;
    for (const auto& t : terms) out.push_back({t.power, t.logpow});
    return out;
  }

  std::string str(const std::vector<double>* params = nullptr) const {
    const std::string xi = "x" + std::to_string(abscissa);
    const std::string xd = "x" + std::to_string(3 - abscissa);
    auto power_str = [&](double q) {
      if (std::abs(q - 1.0) < 1e-12) return xi;
      return xi + "^" + format_real(q);
    };
    std::string s = xd + " =";
    bool first = true;
    for (const auto& t : terms) {
      std::string c;
      if (params) {
        c = format_real(t.coeff.eval(*params, lead));
      } else {
        c = "(" + t.coeff.value.str(param_names);
        if (!t.coeff.log_part.is_zero()) {
          c += " + (" + t.coeff.log_part.str(param_names) + ")*ln(" + lead.str(param_names) + ")";
        }
        c += ")";
        if (t.coeff.lead_power != 0.0) {
          c += "*(" + lead.str(param_names) + ")^" + format_real(t.coeff.lead_power);
        }
      }
      s += (first ? " " : " + ") + c + "*" + power_str(t.power);
      if (t.logpow > 0) s += "*ln(" + xi + ")";
      first = false;
    }
    if (remainder_power > 0.0) {
      s += std::string(first ? " " : " + ") + (remainder_little_o ? "o(" : "O(") +
           power_str(remainder_power) + (remainder_logpow ? "*ln(" + xi + ")" : "") + ")";
    }
    return s;
  }
};

namespace detail {

// Truncated power series in one variable with coefficients in a ring C;
// index i holds the coefficient of x^i.
template <class C>
std::vector<C> series_mul(const std::vector<C>& a, const std::vector<C>& b, std::size_t N,
                          const C& zero) {
  std::vector<C> r(N + 1, zero);
  for (std::size_t i = 0; i < a.size() && i <= N; ++i) {
    for (std::size_t j = 0; j < b.size() && i + j <= N; ++j) r[i + j] = r[i + j] + a[i] * b[j];
  }
  return r;
}

// Compositional inverse of x = z + sum_{i>=2} a_i z^i through order N.
template <class C>
std::vector<C> revert(const std::vector<C>& a, std::size_t N, const C& zero, const C& one) {
  std::vector<C> z(N + 1, zero);
  if (N >= 1) z[1] = one;
  // Fixed point z = x - sum a_i z^i gains one correct order per sweep.
  for (std::size_t sweep = 1; sweep < N; ++sweep) {
    std::vector<C> next(N + 1, zero);
    next[1] = one;
    std::vector<C> zp = z;
    for (std::size_t i = 2; i <= N && i < a.size(); ++i) {
      zp = series_mul(zp, z, N, zero);
      for (std::size_t k = 0; k <= N; ++k) next[k] = next[k] - a[i] * zp[k];
    }
    z = std::move(next);
  }
  return z;
}

// sum_i b_i z(x)^i through order N.
template <class C>
std::vector<C> compose_series(const std::vector<C>& b, const std::vector<C>& z, std::size_t N,
                              const C& zero) {
  std::vector<C> r(N + 1, zero);
  std::vector<C> cur = z;
  for (std::size_t i = 1; i <= N && i < b.size(); ++i) {
    if (i > 1) cur = series_mul(cur, z, N, zero);
    for (std::size_t k = 0; k <= N; ++k) r[k] = r[k] + b[i] * cur[k];
  }
  return r;
}

inline bool near_integer(double q, double tol = 1e-9) {
  return std::abs(q - std::round(q)) < tol;
}

// Drops monomials that are rounding residue relative to the largest one.
inline ParamPoly clean(const ParamPoly& p, double rel = 1e-12) {
  const double scale = p.max_abs_coefficient();
  ParamPoly out(p.nvars());
  for (const auto& [e, c] : p.terms()) {
    if (std::abs(c) > rel * scale) out.add_term(e, c);
  }
  return out;
}

inline bool is_ic_dependent(const RelationCoeff& c) {
  if (!c.log_part.is_zero() || c.lead_power != 0.0) return true;
  const ParamPoly v = clean(c.value, 1e-10);
  return !v.is_constant();
}

// The system in eigen-coordinates with the slow eigenvector oriented so that
// p11 > 0. Returns (diagonal system, P).
inline std::pair<SinkSystem, Eigen::MatrixXd> oriented_diagonal(const SinkSystem& sys) {
  if (sys.dim() != 2) {
    throw Error(ErrorKind::unsupported_shape, "relations are between two components; system has " +
                                                  std::to_string(sys.dim()));
  }
  SinkSystem d = sys.diagonal_form();
  Eigen::MatrixXd P = sys.spectrum.P;
  const double scale = P.col(0).norm();
  if (std::abs(P(0, 0)) <= 1e-12 * scale) {
    throw Error(ErrorKind::normalization,
                "slow eigenvector has zero first component (p11 = 0); x1 does not carry the slow "
                "direction");
  }
  if (P(0, 0) < 0.0) {
    Eigen::MatrixXd F = Eigen::MatrixXd::Identity(2, 2);
    F(0, 0) = -1.0;
    P = P * F;
    d.b = conjugate_field(d.b, F, F);
    d.diagonalized_field = d.b;
    if (!(P(0, 0) > 0.0)) throw Error(ErrorKind::normalization, "could not orient p11 > 0");
  }
  return {d, P};
}

struct WTerm {
  double q;
  int tpow;
  ParamPoly c;
};

inline void add_wterm(std::vector<WTerm>& s, double q, int tpow, const ParamPoly& c) {
  for (auto& t : s) {
    if (std::abs(t.q - q) < 1e-9 && t.tpow == tpow) {
      t.c += c;
      return;
    }
  }
  s.push_back({q, tpow, c});
}

}  // namespace detail

// x2 as a function of x1 along solutions approaching in the slow direction,
// through order `order` in x1, from the simplified iterate D_order written in
// w = e^{a t}. At most one exponent may carry a non-integer power or a
// t-factor, and it must sit above every other retained order.
inline RelationSeries relate_series(const SinkSystem& sys, int order) {
  if (order < 1) throw Error(ErrorKind::input, "relation order must be >= 1");
  auto [d, P] = detail::oriented_diagonal(sys);
  const double a = d.spectrum.eigenvalues[0];
  const WidePlan plan = plan_blocks(d.spectrum, d.b);
  const Regime regime = d.classification == Spacing::closely ? Regime::closely : Regime::widely_2d;
  const IterateSet its = detail::build_iterates(d, plan, regime, order);
  const auto& D = its.D_simplified(order);
  const std::size_t np = D[0].nparams();
  const std::size_t N = static_cast<std::size_t>(order);

  std::array<std::vector<detail::WTerm>, 2> x;
  for (std::size_t k = 0; k < 2; ++k) {
    for (const auto& term : D[k].terms()) {
      const double q = term.rate.value / a;
      if (q > static_cast<double>(N) + 1.0 - 1e-9) continue;
      for (std::size_t i = 0; i < 2; ++i) {
        if (P(i, k) != 0.0) detail::add_wterm(x[i], q, term.tpow, term.coeff * P(i, k));
      }
    }
  }

  // Special exponent: non-integer power or t-factor.
  std::optional<double> qs;
  for (const auto& comp : x) {
    for (const auto& t : comp) {
      if (t.c.is_zero()) continue;
      if (t.tpow > 1) {
        throw Error(ErrorKind::unsupported_shape, "t^" + std::to_string(t.tpow) +
                                                      " term in the expansion; only single "
                                                      "logarithms are supported");
      }
      if (t.tpow == 1 || !detail::near_integer(t.q)) {
        if (qs && std::abs(*qs - t.q) > 1e-9) {
          throw Error(ErrorKind::unsupported_shape,
                      "more than one non-integer or logarithmic exponent below order " +
                          std::to_string(N + 1));
        }
        qs = t.q;
      }
    }
  }
  if (qs && *qs + 1.0 <= static_cast<double>(N) + 1e-9) {
    throw Error(ErrorKind::unsupported_shape,
                "exponent " + format_real(*qs) + " interacts with retained orders; lower the order");
  }

  const ParamPoly zero(np);
  auto plain = [&](const std::vector<detail::WTerm>& s) {
    std::vector<ParamPoly> c(N + 1, zero);
    for (const auto& t : s) {
      if (t.tpow == 0 && detail::near_integer(t.q)) {
        const long i = std::lround(t.q);
        if (i >= 1 && static_cast<std::size_t>(i) <= N) c[i] += t.c;
      }
    }
    return c;
  };
  auto special = [&](const std::vector<detail::WTerm>& s, int tpow) {
    ParamPoly c = zero;
    if (!qs) return c;
    for (const auto& t : s) {
      if (std::abs(t.q - *qs) < 1e-9 && t.tpow == tpow) {
        if (tpow == 0 && detail::near_integer(*qs)) continue;
        c += t.c;
      }
    }
    return c;
  };

  std::vector<ParamPoly> A = plain(x[0]), B = plain(x[1]);
  const ParamPoly lead = detail::clean(A[1]);
  if (lead.size() != 1) {
    throw Error(ErrorKind::normalization,
                "leading coefficient of x1 must be a single nonzero monomial, got " +
                    std::to_string(lead.size()) + " terms");
  }
  const ParamPoly inv = lead.inverse_monomial();
  std::vector<ParamPoly> an(N + 1, zero), bn(N + 1, zero);
  ParamPoly invp = ParamPoly::constant(np, 1.0);
  for (std::size_t i = 1; i <= N; ++i) {
    invp = invp * inv;
    an[i] = detail::clean(A[i] * invp);
    bn[i] = detail::clean(B[i] * invp);
  }
  an[1] = ParamPoly::constant(np, 1.0);

  const std::vector<ParamPoly> z = detail::revert(an, N, zero, ParamPoly::constant(np, 1.0));
  const std::vector<ParamPoly> c = detail::compose_series(bn, z, N, zero);

  RelationSeries rel;
  rel.lead = lead;
  rel.param_names = param_names(np);
  for (std::size_t i = 1; i <= N; ++i) {
    RelationSeriesTerm t;
    t.power = static_cast<double>(i);
    t.coeff.value = detail::clean(c[i]);
    rel.terms.push_back(std::move(t));
  }

  if (qs) {
    const bool integral = detail::near_integer(*qs);
    // Log part: t w^q = (ln z - ln lead) z^q / (a lead^q).
    const ParamPoly AL = special(x[0], 1), BL = special(x[1], 1);
    if (!AL.is_zero() || !BL.is_zero()) {
      const ParamPoly scale = inv.pow(static_cast<int>(std::lround(*qs))) * (1.0 / a);
      const ParamPoly L = detail::clean((BL - bn[1] * AL) * scale);
      if (!L.is_zero()) {
        RelationSeriesTerm lt;
        lt.power = *qs;
        lt.logpow = 1;
        lt.coeff.value = L;
        auto it = std::find_if(rel.terms.begin(), rel.terms.end(), [&](const auto& t) {
          return std::abs(t.power - *qs) < 1e-9;
        });
        it->coeff.log_part = -L;
        rel.terms.insert(it + 1, std::move(lt));
      }
    }
    if (!integral) {
      const ParamPoly As = special(x[0], 0), Bs = special(x[1], 0);
      RelationSeriesTerm st;
      st.power = *qs;
      // (B_s - b_1 A_s) lead^{-q}
      st.coeff.value = detail::clean(Bs - bn[1] * As);
      st.coeff.lead_power = -*qs;
      if (!st.coeff.value.is_zero()) rel.terms.push_back(std::move(st));
    }
  }
  for (auto& t : rel.terms) t.ic_dependent = detail::is_ic_dependent(t.coeff);
  rel.remainder_power = static_cast<double>(N + 1);
  rel.remainder_logpow = 0;
  for (const auto& t : rel.terms) rel.remainder_logpow |= t.logpow;
  return rel;
}

// Coefficients of the slow and fast components in powers of e^{a t} y01,
// for a diagonal 2x2 system with integer kappa >= 2.
struct SlowSeries {
  int kappa = 0;
  std::vector<double> xi;   // xi[0] = xi_1 = 1, ..., xi_kappa
  std::vector<double> rho;  // rho_2, ..., rho_{kappa-1}
  ParamPoly varrho;         // coefficient of e^{kappa a t}; depends on y0
  ParamPoly varrho_log;     // coefficient of t e^{kappa a t}
  double remainder_power = 0.0;
};

namespace detail {

inline int integer_kappa(const SinkSystem& sys) {
  const double k = sys.kappa();
  const double r = std::round(k);
  if (!(r >= 2.0) || std::abs(k - r) > 1e-6 * r) {
    throw Error(ErrorKind::no_resonance,
                "kappa = " + format_real(k) +
                    " is not an integer >= 2; use relate_series for the plain power-series path");
  }
  return static_cast<int>(r);
}

// Constant c from c * y01^i, checking nothing else remains.
inline double strip_power(const ParamPoly& p, int i, const std::string& what) {
  const ParamPoly c = clean(p);
  if (c.is_zero()) return 0.0;
  ParamPoly::Exponents e(c.nvars(), 0);
  e[0] = i;
  const double v = c.coefficient(e);
  if (c.size() != 1 || v == 0.0) {
    throw Error(ErrorKind::consistency, what + " is not proportional to y01^" + std::to_string(i));
  }
  return v;
}

}  // namespace detail

inline SlowSeries slow_series(const SinkSystem& sys) {
  if (sys.dim() != 2 || !sys.spectrum.diagonal_input || !sys.spectrum.identity_basis()) {
    throw Error(ErrorKind::unsupported_shape,
                "slow_series needs a 2x2 diagonal system with the slow eigenvalue first");
  }
  const int kappa = detail::integer_kappa(sys);
  const double a = sys.spectrum.eigenvalues[0];
  const WidePlan plan = plan_blocks(sys.spectrum, sys.b);
  const Regime regime =
      sys.classification == Spacing::closely ? Regime::closely : Regime::widely_2d;
  const IterateSet its = detail::build_iterates(sys, plan, regime, kappa);
  const auto& D = its.D_simplified(kappa);
  SlowSeries s;
  s.kappa = kappa;
  s.remainder_power = kappa + 1.0;
  const std::size_t np = D[0].nparams();
  s.varrho = ParamPoly(np);
  s.varrho_log = ParamPoly(np);
  std::vector<ParamPoly> u1(kappa + 1, ParamPoly(np)), u2(kappa + 1, ParamPoly(np));
  for (const auto& t : D[0].terms()) {
    const double q = t.rate.value / a;
    const long i = std::lround(q);
    if (t.tpow != 0 || !detail::near_integer(q)) {
      throw Error(ErrorKind::consistency, "slow component carries " + describe_term(t, 0));
    }
    if (i >= 1 && i <= kappa) u1[i] += t.coeff;
  }
  for (const auto& t : D[1].terms()) {
    const double q = t.rate.value / a;
    const long i = std::lround(q);
    if (!detail::near_integer(q) || i > kappa) continue;
    if (i == kappa) {
      (t.tpow == 0 ? s.varrho : s.varrho_log) += t.coeff;
    } else if (t.tpow == 0) {
      u2[i] += t.coeff;
    } else {
      throw Error(ErrorKind::consistency, "fast component carries " + describe_term(t, 0));
    }
  }
  for (int i = 1; i <= kappa; ++i) {
    s.xi.push_back(detail::strip_power(u1[i], i, "slow coefficient " + std::to_string(i)));
  }
  for (int i = 2; i <= kappa - 1; ++i) {
    s.rho.push_back(detail::strip_power(u2[i], i, "fast coefficient " + std::to_string(i)));
  }
  s.varrho = detail::clean(s.varrho);
  s.varrho_log = detail::clean(s.varrho_log);
  return s;
}

// nu_1..nu_N with e^{a t} y01 = sum nu_i x1^i, the reversion of the slow series.
inline std::vector<double> invert_series(const std::vector<double>& xi) {
  if (xi.empty() || std::abs(xi[0] - 1.0) > 1e-12) {
    throw Error(ErrorKind::normalization, "series reversion needs xi_1 = 1");
  }
  const std::size_t N = xi.size();
  std::vector<double> a(N + 1, 0.0);
  for (std::size_t i = 1; i <= N; ++i) a[i] = xi[i - 1];
  const std::vector<double> z = detail::revert(a, N, 0.0, 1.0);
  return std::vector<double>(z.begin() + 1, z.end());
}

inline std::vector<double> invert_series(const SlowSeries& s) { return invert_series(s.xi); }

// The star-node relation from the second iterate data: xi = b(y0)/a.
inline RelationSeries relate_star(const std::array<double, 2>& xi, const std::array<double, 2>& y0) {
  if (y0[0] == 0.0 && y0[1] == 0.0) {
    throw Error(ErrorKind::domain, "y0 = 0: the solution is identically zero");
  }
  const bool swap = y0[0] == 0.0;
  const double yi = swap ? y0[1] : y0[0], yd = swap ? y0[0] : y0[1];
  const double xi_i = swap ? xi[1] : xi[0], xi_d = swap ? xi[0] : xi[1];
  RelationSeries rel;
  rel.abscissa = swap ? 2 : 1;
  rel.lead = ParamPoly::constant(0, yi);
  RelationSeriesTerm t1, t2;
  t1.power = 1.0;
  t1.coeff.value = ParamPoly::constant(0, yd / yi);
  t2.power = 2.0;
  t2.coeff.value = ParamPoly::constant(0, xi_d / (yi * yi) - yd * xi_i / (yi * yi * yi));
  t1.ic_dependent = t2.ic_dependent = true;
  rel.terms = {t1, t2};
  rel.remainder_power = 3.0;
  return rel;
}

// xi = b(y0)/a for a star node x' = a x + b(x) with b quadratic.
inline std::array<double, 2> star_xi(const SinkSystem& sys, const std::array<double, 2>& y0) {
  if (sys.dim() != 2 || !sys.spectrum.diagonal_input ||
      sys.spectrum.eigenvalues[0] != sys.spectrum.eigenvalues[1]) {
    throw Error(ErrorKind::regime, "star_xi needs A = a I in two dimensions");
  }
  const double a = sys.spectrum.eigenvalues[0];
  const auto b = sys.b.eval(std::span<const double>(y0.data(), 2));
  return {b[0] / a, b[1] / a};
}

// Diagonal 2x2 system with integer kappa >= 2: relation through x1^kappa.
inline RelationSeries relate_resonant(const SinkSystem& sys,
                                      std::optional<std::vector<double>> y0 = std::nullopt) {
  if (sys.dim() != 2 || !sys.spectrum.identity_basis()) {
    throw Error(ErrorKind::unsupported_shape,
                "relate_resonant needs diagonal coordinates with the slow eigenvalue first; use "
                "relate_via_basis");
  }
  const int kappa = detail::integer_kappa(sys);
  if (y0 && !((*y0)[0] > 0.0)) {
    throw Error(ErrorKind::domain, "y01 must be positive (approach along the slow direction)");
  }
  RelationSeries rel = relate_series(sys, kappa);
  if (kappa == 2) rel.remainder_little_o = true;
  return rel;
}

// General 2x2 A = P diag(a, kappa a) P^{-1}: relation in the original
// coordinates, parameters v0 = psi(P^{-1} x0) of the diagonalized system.
inline RelationSeries relate_via_basis(const SinkSystem& sys,
                                       std::optional<std::vector<double>> v0 = std::nullopt) {
  const int kappa = detail::integer_kappa(sys);
  if (v0 && !((*v0)[0] > 0.0)) {
    throw Error(ErrorKind::domain, "v01 must be positive (approach along the slow direction)");
  }
  RelationSeries rel = relate_series(sys, kappa);
  rel.param_names = param_names(2, "v0");
  if (kappa == 2) rel.remainder_little_o = true;
  return rel;
}

// Sign of the coefficient of x^power on a grid of (y01, y02) in [lo, hi]^2;
// row r has y02 = lo + r*h, column c has y01 = lo + c*h. Points where the
// relation is undefined (y01 = 0) get sign 0.
struct SignMap {
  double lo = -1.0, hi = 1.0;
  int n = 0;
  std::vector<int> sign;
  int at(int row, int col) const { return sign.at(static_cast<std::size_t>(row * n + col)); }
};

inline SignMap concavity_map(const RelationSeries& rel, double power, double lo, double hi, int n) {
  if (n < 2) throw Error(ErrorKind::input, "sign map needs n >= 2");
  SignMap m{lo, hi, n, {}};
  const double h = (hi - lo) / (n - 1);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      const double y1 = lo + c * h, y2 = lo + r * h;
      if (std::abs(y1) < 1e-14) {
        m.sign.push_back(0);
        continue;
      }
      const double v = rel.coefficient(power, 0, {y1, y2});
      m.sign.push_back(v > 0 ? 1 : (v < 0 ? -1 : 0));
    }
  }
  return m;
}

}  // namespace sinkasym
