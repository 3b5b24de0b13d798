#pragma once

#include <algorithm>
#include <climits>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "sinkasym/errors.hpp"
#include "sinkasym/exp_series.hpp"
#include "sinkasym/system.hpp"

namespace sinkasym {

enum class Regime { closely, widely_2d, widely_nd };

inline const char* to_string(Regime r) {
  switch (r) {
    case Regime::closely: return "closely-spaced";
    case Regime::widely_2d: return "widely-spaced (2-D)";
    case Regime::widely_nd: return "widely-spaced (n-D diagonal)";
  }
  return "?";
}

// Block structure of a diagonal spectrum. Blocks are groups of equal
// eigenvalues; blocks before j0 are slow (kappa_j < alpha), the rest are fast
// with thresholds p_j = floor((kappa_j - alpha)/beta) + 2.
struct WidePlan {
  int p = 1;
  std::size_t j0 = 0;
  std::size_t ell = 0;
  std::vector<double> kappa_j;
  std::vector<int> p_j;
  std::vector<std::size_t> block_of;  // component -> block

  bool is_fast_component(std::size_t i) const { return block_of.at(i) >= j0; }
  int p_of_component(std::size_t i) const { return p_j.at(block_of.at(i)); }
  bool has_fast() const { return j0 < ell; }
};

namespace detail {

// floor((kappa - alpha)/beta) + 2, exactly when kappa is rational.
inline int threshold_p(double kappa, std::optional<Rational> exact, int alpha, int beta) {
  if (exact) {
    const std::int64_t num = exact->num - static_cast<std::int64_t>(alpha) * exact->den;
    const std::int64_t den = static_cast<std::int64_t>(beta) * exact->den;
    std::int64_t q = num / den;
    if ((num % den != 0) && ((num < 0) != (den < 0))) --q;
    return static_cast<int>(q) + 2;
  }
  return static_cast<int>(std::floor((kappa - alpha) / beta)) + 2;
}

}  // namespace detail

// Block plan for any spectrum; closely-spaced systems get j0 == ell.
inline WidePlan plan_blocks(const Spectrum& spec, const PolyVectorField& field) {
  WidePlan plan;
  const std::size_t n = spec.dim();
  const RateBasis& basis = *spec.basis;
  const int alpha = field.alpha();
  const int beta = field.beta();
  std::vector<std::size_t> reps;
  plan.block_of.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    bool found = false;
    for (std::size_t b = 0; b < reps.size(); ++b) {
      if (basis.eigen_key(i) == basis.eigen_key(reps[b])) {
        plan.block_of[i] = b;
        found = true;
        break;
      }
    }
    if (!found) {
      plan.block_of[i] = reps.size();
      reps.push_back(i);
    }
  }
  plan.ell = reps.size();
  plan.j0 = plan.ell;
  for (std::size_t b = 0; b < plan.ell; ++b) {
    const double kj = spec.eigenvalues[reps[b]] / spec.eigenvalues.front();
    const auto exact = basis.ratio(reps[b], 0);
    const double kappa_j = exact ? exact->value() : kj;
    plan.kappa_j.push_back(kappa_j);
    const bool wide = exact ? exact->num >= static_cast<std::int64_t>(alpha) * exact->den
                            : kappa_j >= alpha;
    if (wide && plan.j0 == plan.ell) plan.j0 = b;
    plan.p_j.push_back(wide ? detail::threshold_p(kappa_j, exact, alpha, beta) : 1);
  }
  plan.p = plan.p_j.empty() ? 1 : plan.p_j.back();
  return plan;
}

inline WidePlan plan_wide(const Spectrum& spec, const PolyVectorField& field) {
  if (classify(spec, field) != Spacing::widely) {
    throw Error(ErrorKind::regime, "plan_wide needs a widely-spaced system (kappa=" +
                                       format_real(spec.kappa) + " < alpha=" +
                                       std::to_string(field.alpha()) + ")");
  }
  return plan_blocks(spec, field);
}

// (rate multiplier, x0-power) of the guaranteed error bound for D_m.
inline std::pair<double, double> guaranteed_order(Regime regime, int m, const WidePlan& plan,
                                                  int alpha, int beta) {
  if (m < 1) throw Error(ErrorKind::domain, "iterate index must be >= 1");
  const double rate = alpha + (m - 1.0) * beta;
  switch (regime) {
    case Regime::closely: return {rate, rate};
    case Regime::widely_2d:
      return {rate, m < plan.p ? 1.0 : (m + 1.0 - plan.p) * beta + 1.0};
    case Regime::widely_nd:
      return {rate, std::max(0, m + 1 - plan.p) * static_cast<double>(beta) + 1.0};
  }
  return {rate, rate};
}

struct IterateSet {
  Regime regime = Regime::closely;
  WidePlan plan;
  int alpha = 2;
  int beta = 1;
  double mu1 = -1.0;
  // iterates[m-1] is D_m as produced by the recursion from the simplified
  // predecessor; simplified[m-1] keeps only terms strictly faster-decaying-free
  // above the guaranteed rate alpha+(m-1)beta times mu1.
  std::vector<std::vector<ExpSeries>> iterates;
  std::vector<std::vector<ExpSeries>> simplified;
  std::vector<std::pair<double, double>> orders;

  int m_max() const { return static_cast<int>(iterates.size()); }
  const std::vector<ExpSeries>& D(int m) const { return iterates.at(m - 1); }
  const std::vector<ExpSeries>& D_simplified(int m) const { return simplified.at(m - 1); }
  double rate_threshold(int m) const { return (alpha + (m - 1.0) * beta) * mu1; }
};

namespace detail {

// Evaluates every component of a polynomial field on series arguments,
// sharing monomial powers across components.
inline std::vector<ExpSeries> apply_field(const PolyVectorField& field,
                                          const std::vector<ExpSeries>& args,
                                          const RateBasisPtr& basis) {
  const std::size_t n = field.dim();
  const std::size_t np = args.empty() ? 0 : args.front().nparams();
  std::vector<std::vector<ExpSeries>> powers(n);
  ExpSeries one = ExpSeries::from_terms(
      basis, np,
      {ExpTerm{ParamPoly::constant(np, 1.0), 0,
               RateCombo::make(*basis, std::vector<int>(basis->dim(), 0))}});
  auto power_of = [&](std::size_t var, int k) -> const ExpSeries& {
    auto& cache = powers[var];
    if (cache.empty()) cache.push_back(one);
    while (static_cast<int>(cache.size()) <= k) cache.push_back(mul(cache.back(), args[var]));
    return cache[k];
  };
  std::vector<ExpSeries> out;
  out.reserve(n);
  for (const auto& comp : field.components()) {
    std::vector<ExpTerm> acc;
    for (const auto& [e, c] : comp.terms()) {
      bool vanishes = false;
      for (std::size_t i = 0; i < n; ++i) {
        if (e[i] > 0 && args[i].is_zero()) vanishes = true;
      }
      if (vanishes) continue;
      ExpSeries term = one * c;
      for (std::size_t i = 0; i < n; ++i) {
        if (e[i] > 0) term = mul(term, power_of(i, e[i]));
      }
      acc.insert(acc.end(), term.terms().begin(), term.terms().end());
    }
    out.push_back(ExpSeries::from_terms(basis, np, std::move(acc)));
  }
  return out;
}

// Removes floating-point residue at rates that must cancel exactly in a
// field difference; anything larger than roundoff is an ordering bug.
inline ExpSeries require_decay(const ExpSeries& diff, const ExpSeries& minuend, std::size_t j) {
  const RateBasis& basis = *diff.basis();
  const double lambda = basis.eigenvalue(j);
  const RateCombo unit = RateCombo::unit(basis, j);
  std::vector<ExpTerm> kept;
  for (const auto& t : diff.terms()) {
    const bool nondecaying = t.rate.same_rate(unit) || t.rate.value >= lambda - kRateTol;
    if (!nondecaying) {
      kept.push_back(t);
      continue;
    }
    const double ref = minuend.coefficient_of(t.rate, t.tpow).max_abs_coefficient();
    if (t.coeff.max_abs_coefficient() > 1e-9 * std::max(ref, 1e-300)) {
      throw Error(ErrorKind::consistency,
                  "field difference keeps a non-decaying term " + describe_term(t, diff.nparams()) +
                      " against lambda_" + std::to_string(j + 1));
    }
  }
  return ExpSeries::from_terms(diff.basis(), diff.nparams(), std::move(kept));
}

struct IterateOptions {
  bool truncate_field = true;
};

// Table-1 recursion on a diagonal system (eigen-coordinates). With no fast
// block it is exactly the closely-spaced recursion.
inline IterateSet build_iterates(const SinkSystem& sys, const WidePlan& plan, Regime regime,
                                 int m_max, IterateOptions opt = {}) {
  if (m_max < 1) throw Error(ErrorKind::domain, "m_max must be >= 1");
  const std::size_t n = sys.dim();
  const RateBasisPtr& basis = sys.basis();
  const PolyVectorField& r = sys.diagonalized_field;
  IterateSet set;
  set.regime = regime;
  set.plan = plan;
  set.alpha = sys.alpha();
  set.beta = sys.beta();
  set.mu1 = sys.spectrum.eigenvalues.front();

  std::vector<ExpSeries> linear;
  for (std::size_t j = 0; j < n; ++j) {
    linear.push_back(ExpSeries::exponential(basis, j, ParamPoly::variable(n, j)));
  }
  auto simplify = [&](const std::vector<ExpSeries>& D, int m) {
    std::vector<ExpSeries> out;
    for (const auto& c : D) out.push_back(truncate(c, set.rate_threshold(m), Boundary::drop));
    return out;
  };

  std::vector<ExpSeries> D1;
  for (std::size_t j = 0; j < n; ++j) {
    D1.push_back(plan.is_fast_component(j) ? ExpSeries(basis, n) : linear[j]);
  }
  set.iterates.push_back(D1);
  set.simplified.push_back(simplify(D1, 1));
  set.orders.push_back(guaranteed_order(regime, 1, plan, set.alpha, set.beta));

  // Field evaluated at simplified iterates, cached per index.
  std::vector<std::vector<ExpSeries>> full_at, trunc_at;
  auto field_at = [&](int m, bool truncated_field, int degree) -> std::vector<ExpSeries> {
    if (!truncated_field) {
      while (static_cast<int>(full_at.size()) < m) full_at.emplace_back();
      if (full_at[m - 1].empty()) full_at[m - 1] = apply_field(r, set.simplified[m - 1], basis);
      return full_at[m - 1];
    }
    return apply_field(r.truncated(degree), set.simplified[m - 1], basis);
  };

  for (int m = 1; m < m_max; ++m) {
    const int next = m + 1;
    const int degree = opt.truncate_field ? next * (set.alpha - 1) : INT_MAX;
    const std::vector<ExpSeries> full = field_at(m, false, 0);
    const std::vector<ExpSeries> tr =
        opt.truncate_field && degree < r.max_degree() ? field_at(m, true, degree) : full;
    std::vector<ExpSeries> Dn(n);
    for (std::size_t j = 0; j < n; ++j) {
      if (!plan.is_fast_component(j)) {
        Dn[j] = linear[j] - tail_conv(j, tr[j]);
        continue;
      }
      const int pj = plan.p_of_component(j);
      if (next < pj) {
        Dn[j] = forward_conv(j, full[j]);
      } else if (next == pj) {
        Dn[j] = linear[j] + forward_conv(j, full[j]);
      } else {
        const std::vector<ExpSeries> tr_ref =
            opt.truncate_field && degree < r.max_degree()
                ? apply_field(r.truncated(degree), set.simplified[pj - 2], basis)
                : field_at(pj - 1, false, 0);
        const ExpSeries diff = require_decay(tr[j] - tr_ref[j], tr[j], j);
        Dn[j] = set.iterates[pj - 1][j] - tail_conv(j, diff);
      }
    }
    set.iterates.push_back(Dn);
    set.simplified.push_back(simplify(Dn, next));
    set.orders.push_back(guaranteed_order(regime, next, plan, set.alpha, set.beta));
  }
  return set;
}

}  // namespace detail

inline IterateSet iterate_closely(const SinkSystem& sys, int m_max = 6,
                                  detail::IterateOptions opt = {}) {
  if (sys.classification != Spacing::closely) {
    throw Error(ErrorKind::regime, "iterate_closely needs kappa < alpha (kappa=" +
                                       format_real(sys.kappa()) + ", alpha=" +
                                       std::to_string(sys.alpha()) + ")");
  }
  const SinkSystem d = sys.diagonal_form();
  return detail::build_iterates(d, plan_blocks(d.spectrum, d.b), Regime::closely, m_max, opt);
}

inline IterateSet iterate_widely_2d(const SinkSystem& sys, int m_max = 6,
                                    detail::IterateOptions opt = {}) {
  if (sys.dim() != 2) {
    throw Error(ErrorKind::unsupported_shape, "iterate_widely_2d needs n = 2");
  }
  const SinkSystem d = sys.diagonal_form();
  const WidePlan plan = plan_wide(d.spectrum, d.b);
  return detail::build_iterates(d, plan, Regime::widely_2d, m_max, opt);
}

inline IterateSet iterate_nd_diag(const SinkSystem& sys, const WidePlan& plan, int m_max = 6,
                                  detail::IterateOptions opt = {}) {
  if (!sys.spectrum.diagonal_input) {
    throw Error(ErrorKind::unsupported_shape, "iterate_nd_diag needs a diagonal A");
  }
  if (sys.classification != Spacing::widely) {
    throw Error(ErrorKind::regime, "iterate_nd_diag needs a widely-spaced system");
  }
  const SinkSystem d = sys.diagonal_form();
  return detail::build_iterates(d, plan, Regime::widely_nd, m_max, opt);
}

// Dispatches on the classification.
inline IterateSet build_iterates(const SinkSystem& sys, int m_max = 6) {
  if (sys.classification == Spacing::closely) return iterate_closely(sys, m_max);
  if (sys.dim() == 2) return iterate_widely_2d(sys, m_max);
  return iterate_nd_diag(sys, plan_wide(sys.spectrum, sys.b), m_max);
}

struct PsiApprox {
  Regime regime = Regime::closely;
  // approximations[m-1] is psi_m in eigen-coordinates, as polynomials in u0.
  std::vector<std::vector<ParamPoly>> approximations;
  std::vector<int> degree_cap;  // psi_m keeps total degree < degree_cap[m-1]

  const std::vector<ParamPoly>& psi(int m) const { return approximations.at(m - 1); }
  int m_max() const { return static_cast<int>(approximations.size()); }

  template <class T>
  std::vector<T> eval(int m, const std::vector<T>& u0) const {
    std::vector<T> out;
    for (const auto& c : psi(m)) out.push_back(c.eval(u0));
    return out;
  }
};

inline int psi_order(int m, int alpha, int beta) {
  return std::min(alpha, beta + 1) + (m - 1) * beta;
}

namespace detail {

// Table-2 approximations from a set of iterates.
inline PsiApprox build_psi(const SinkSystem& d, const IterateSet& its, int m_max) {
  const std::size_t n = d.dim();
  const RateBasisPtr& basis = d.basis();
  const WidePlan& plan = its.plan;
  const int p_ell = plan.has_fast() ? plan.p_j.back() : 1;
  PsiApprox out;
  out.regime = its.regime;
  std::vector<ParamPoly> id;
  for (std::size_t j = 0; j < n; ++j) id.push_back(ParamPoly::variable(n, j));
  out.approximations.push_back(id);
  out.degree_cap.push_back(psi_order(1, its.alpha, its.beta));
  for (int m = 2; m <= m_max; ++m) {
    const int M = m + p_ell - 2;
    const int cap = psi_order(m, its.alpha, its.beta);
    const auto field_M = apply_field(d.diagonalized_field, its.D_simplified(M), basis);
    std::vector<ParamPoly> next;
    for (std::size_t j = 0; j < n; ++j) {
      ExpSeries integrand = field_M[j];
      if (plan.is_fast_component(j)) {
        const int pj = plan.p_of_component(j);
        const auto field_ref = apply_field(d.diagonalized_field, its.D_simplified(pj - 1), basis);
        integrand = require_decay(field_M[j] - field_ref[j], field_M[j], j);
      }
      const ParamPoly G = tail_conv(j, integrand).at_zero();
      ParamPoly comp = ParamPoly::variable(n, j) + G.compose(out.approximations.back(), cap - 1);
      next.push_back(comp.truncated(cap - 1));
    }
    out.approximations.push_back(next);
    out.degree_cap.push_back(cap);
  }
  return out;
}

}  // namespace detail

inline PsiApprox psi_closely(const SinkSystem& sys, int m_max = 6) {
  const IterateSet its = iterate_closely(sys, std::max(1, m_max - 1));
  return detail::build_psi(sys.diagonal_form(), its, m_max);
}

inline PsiApprox psi_nd(const SinkSystem& sys, const WidePlan& plan, int m_max = 6) {
  if (sys.classification != Spacing::widely) {
    throw Error(ErrorKind::regime, "psi_nd needs a widely-spaced system");
  }
  const SinkSystem d = sys.diagonal_form();
  const int p_ell = plan.has_fast() ? plan.p_j.back() : 1;
  const Regime regime = sys.dim() == 2 ? Regime::widely_2d : Regime::widely_nd;
  const IterateSet its =
      detail::build_iterates(d, plan, regime, std::max(1, m_max + p_ell - 2));
  return detail::build_psi(d, its, m_max);
}

inline PsiApprox build_psi(const SinkSystem& sys, int m_max = 6) {
  if (sys.classification == Spacing::closely) return psi_closely(sys, m_max);
  return psi_nd(sys, plan_wide(sys.spectrum, sys.b), m_max);
}

// Iterate in eigen-coordinates mapped back to the original x coordinates.
inline std::vector<ExpSeries> to_original(const SinkSystem& sys,
                                          const std::vector<ExpSeries>& u) {
  const std::size_t n = sys.dim();
  std::vector<ExpSeries> x(n, ExpSeries(sys.basis(), u.empty() ? n : u.front().nparams()));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < n; ++k) {
      const double pik = sys.spectrum.P(i, k);
      if (pik != 0.0) x[i] += u[k] * pik;
    }
  }
  return x;
}

inline std::string pretty(const IterateSet& its, int m, const std::string& var = "u") {
  std::string out;
  const auto names = param_names(its.D(m).size());
  for (std::size_t j = 0; j < its.D(m).size(); ++j) {
    out += var + std::to_string(j + 1) + "(t) ≈ " + pretty(its.D(m)[j], names) + "\n";
  }
  return out;
}

}  // namespace sinkasym
