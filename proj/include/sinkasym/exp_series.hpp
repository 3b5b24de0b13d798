#pragma once

#include <algorithm>
#include <cmath>
#include <climits>
#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sinkasym/errors.hpp"
#include "sinkasym/param_poly.hpp"
#include "sinkasym/rational.hpp"

namespace sinkasym {

inline constexpr double kRateTol = 1e-9;
inline constexpr std::size_t kMaxTerms = 10000;

// Integer coordinates for an eigenvalue list. Eigenvalues whose ratios are
// rational (denominator <= 64, tolerance 1e-9) share one generator g, and each
// is stored as an exact integer multiple of g. A rate sum_i m_i*lambda_i then
// has an exact integer "key" over the generators, which is what resonance and
// term merging compare. For rationally independent eigenvalues the key is the
// coefficient vector itself.
class RateBasis {
 public:
  explicit RateBasis(std::vector<double> eigenvalues, std::int64_t max_den = 64,
                     double tol = 1e-9)
      : eigenvalues_(std::move(eigenvalues)) {
    const std::size_t n = eigenvalues_.size();
    std::vector<std::size_t> cls(n);
    std::vector<Rational> ratio(n);
    std::vector<std::size_t> refs;
    for (std::size_t i = 0; i < n; ++i) {
      if (!(eigenvalues_[i] != 0.0) || !std::isfinite(eigenvalues_[i])) {
        throw Error(ErrorKind::domain, "rate basis needs finite nonzero eigenvalues");
      }
      bool placed = false;
      for (std::size_t c = 0; c < refs.size() && !placed; ++c) {
        auto q = rational_reconstruct(eigenvalues_[i] / eigenvalues_[refs[c]], max_den, tol);
        if (q) {
          cls[i] = c;
          ratio[i] = *q;
          placed = true;
        }
      }
      if (!placed) {
        cls[i] = refs.size();
        ratio[i] = Rational{1, 1};
        refs.push_back(i);
      }
    }
    std::vector<std::int64_t> lcm(refs.size(), 1);
    for (std::size_t i = 0; i < n; ++i) lcm[cls[i]] = std::lcm(lcm[cls[i]], ratio[i].den);
    generator_values_.resize(refs.size());
    for (std::size_t c = 0; c < refs.size(); ++c) {
      generator_values_[c] = eigenvalues_[refs[c]] / static_cast<double>(lcm[c]);
    }
    eigen_keys_.assign(n, std::vector<std::int64_t>(refs.size(), 0));
    for (std::size_t i = 0; i < n; ++i) {
      eigen_keys_[i][cls[i]] = ratio[i].num * (lcm[cls[i]] / ratio[i].den);
    }
  }

  std::size_t dim() const { return eigenvalues_.size(); }
  std::size_t generators() const { return generator_values_.size(); }
  const std::vector<double>& eigenvalues() const { return eigenvalues_; }
  double eigenvalue(std::size_t i) const { return eigenvalues_.at(i); }
  const std::vector<double>& generator_values() const { return generator_values_; }
  const std::vector<std::int64_t>& eigen_key(std::size_t i) const { return eigen_keys_.at(i); }

  double value(std::span<const int> coeffs) const {
    check(coeffs.size());
    double v = 0.0;
    for (std::size_t i = 0; i < coeffs.size(); ++i) v += coeffs[i] * eigenvalues_[i];
    return v;
  }

  std::vector<std::int64_t> key(std::span<const int> coeffs) const {
    check(coeffs.size());
    std::vector<std::int64_t> k(generators(), 0);
    for (std::size_t i = 0; i < coeffs.size(); ++i) {
      if (coeffs[i] == 0) continue;
      for (std::size_t g = 0; g < k.size(); ++g) k[g] += coeffs[i] * eigen_keys_[i][g];
    }
    return k;
  }

  // True when two eigenvalues are exact rational multiples of each other.
  bool commensurate(std::size_t i, std::size_t j) const {
    for (std::size_t g = 0; g < generators(); ++g) {
      if ((eigen_keys_[i][g] != 0) != (eigen_keys_[j][g] != 0)) return false;
    }
    return true;
  }

  // lambda_j / lambda_i as an exact rational when commensurate.
  std::optional<Rational> ratio(std::size_t j, std::size_t i) const {
    if (!commensurate(i, j)) return std::nullopt;
    for (std::size_t g = 0; g < generators(); ++g) {
      if (eigen_keys_[i][g] != 0) {
        const std::int64_t num = eigen_keys_[j][g];
        const std::int64_t den = eigen_keys_[i][g];
        const std::int64_t d = std::gcd(num, den) * (den < 0 ? -1 : 1);
        return Rational{num / d, den / d};
      }
    }
    return std::nullopt;
  }

 private:
  void check(std::size_t n) const {
    if (n != eigenvalues_.size()) {
      throw Error(ErrorKind::dimension, "rate vector of length " + std::to_string(n) +
                                            " over " + std::to_string(eigenvalues_.size()) +
                                            " eigenvalues");
    }
  }

  std::vector<double> eigenvalues_;
  std::vector<double> generator_values_;
  std::vector<std::vector<std::int64_t>> eigen_keys_;
};

using RateBasisPtr = std::shared_ptr<const RateBasis>;

inline RateBasisPtr make_rate_basis(std::vector<double> eigenvalues) {
  return std::make_shared<const RateBasis>(std::move(eigenvalues));
}

struct RateCombo {
  std::vector<int> coeffs;
  double value = 0.0;
  std::vector<std::int64_t> key;

  static RateCombo make(const RateBasis& basis, std::vector<int> coeffs) {
    RateCombo r;
    r.value = basis.value(coeffs);
    r.key = basis.key(coeffs);
    r.coeffs = std::move(coeffs);
    return r;
  }

  static RateCombo unit(const RateBasis& basis, std::size_t j) {
    std::vector<int> c(basis.dim(), 0);
    c.at(j) = 1;
    return make(basis, std::move(c));
  }

  bool operator==(const RateCombo& o) const { return coeffs == o.coeffs; }

  // Same exponential rate, decided on the integer keys.
  bool same_rate(const RateCombo& o) const { return key == o.key; }

  int order() const { return std::accumulate(coeffs.begin(), coeffs.end(), 0); }
};

struct ExpTerm {
  ParamPoly coeff;
  int tpow = 0;
  RateCombo rate;
};

// Finite sum of coeff(params) * t^k * e^{rate t}.
class ExpSeries {
 public:
  ExpSeries() = default;
  ExpSeries(RateBasisPtr basis, std::size_t nparams)
      : basis_(std::move(basis)), nparams_(nparams) {}

  // coeff * e^{lambda_j t}
  static ExpSeries exponential(RateBasisPtr basis, std::size_t j, ParamPoly coeff) {
    ExpSeries s(basis, coeff.nvars());
    if (!coeff.is_zero()) {
      s.terms_.push_back(ExpTerm{std::move(coeff), 0, RateCombo::unit(*basis, j)});
    }
    return s;
  }

  static ExpSeries from_terms(RateBasisPtr basis, std::size_t nparams,
                              std::vector<ExpTerm> terms) {
    ExpSeries s(std::move(basis), nparams);
    s.terms_ = std::move(terms);
    s.canonicalize();
    return s;
  }

  const RateBasisPtr& basis() const { return basis_; }
  std::size_t nparams() const { return nparams_; }
  const std::vector<ExpTerm>& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }
  std::size_t size() const { return terms_.size(); }

  ExpSeries& operator+=(const ExpSeries& o) {
    check_compatible(o);
    if (!basis_) basis_ = o.basis_;
    terms_.insert(terms_.end(), o.terms_.begin(), o.terms_.end());
    canonicalize();
    return *this;
  }

  ExpSeries& operator-=(const ExpSeries& o) {
    check_compatible(o);
    if (!basis_) basis_ = o.basis_;
    for (const auto& t : o.terms_) terms_.push_back(ExpTerm{-t.coeff, t.tpow, t.rate});
    canonicalize();
    return *this;
  }

  ExpSeries& operator*=(double s) {
    if (s == 0.0) {
      terms_.clear();
      return *this;
    }
    for (auto& t : terms_) t.coeff *= s;
    return *this;
  }

  friend ExpSeries operator+(ExpSeries a, const ExpSeries& b) { return a += b; }
  friend ExpSeries operator-(ExpSeries a, const ExpSeries& b) { return a -= b; }
  friend ExpSeries operator*(ExpSeries a, double s) { return a *= s; }
  friend ExpSeries operator*(double s, ExpSeries a) { return a *= s; }

  // Multiplies every coefficient by a parameter polynomial.
  ExpSeries times(const ParamPoly& p) const {
    ExpSeries r(basis_, nparams_);
    for (const auto& t : terms_) r.terms_.push_back(ExpTerm{t.coeff * p, t.tpow, t.rate});
    r.canonicalize();
    return r;
  }

  template <class T>
  T eval(T t, std::span<const T> params) const {
    if (params.size() != nparams_) {
      throw Error(ErrorKind::dimension, "series has " + std::to_string(nparams_) +
                                            " parameters, got " +
                                            std::to_string(params.size()));
    }
    T sum = 0;
    for (const auto& term : terms_) {
      T v = term.coeff.eval(params) * std::exp(static_cast<T>(term.rate.value) * t);
      for (int k = 0; k < term.tpow; ++k) v *= t;
      sum += v;
    }
    return sum;
  }

  template <class T>
  T eval(T t, const std::vector<T>& params) const {
    return eval(t, std::span<const T>(params));
  }

  // Value at t = 0 as a polynomial in the parameters.
  ParamPoly at_zero() const {
    ParamPoly p(nparams_);
    for (const auto& t : terms_) {
      if (t.tpow == 0) p += t.coeff;
    }
    return p;
  }

  // Substitutes the parameters by polynomials in another parameter set.
  ExpSeries compose_params(const std::vector<ParamPoly>& subs, int max_degree = INT_MAX) const {
    const std::size_t out = subs.empty() ? nparams_ : subs.front().nvars();
    ExpSeries r(basis_, out);
    for (const auto& t : terms_) {
      r.terms_.push_back(ExpTerm{t.coeff.compose(subs, max_degree), t.tpow, t.rate});
    }
    r.canonicalize();
    return r;
  }

  // Largest rate value present (the leading exponential), or -inf if empty.
  double leading_rate() const {
    return terms_.empty() ? -std::numeric_limits<double>::infinity() : terms_.front().rate.value;
  }

  bool depends_on_param(std::size_t i) const {
    return std::any_of(terms_.begin(), terms_.end(),
                       [i](const ExpTerm& t) { return t.coeff.depends_on(i); });
  }

  // Terms with the given rate key and t-power, summed.
  ParamPoly coefficient_of(const RateCombo& rate, int tpow) const {
    ParamPoly p(nparams_);
    for (const auto& t : terms_) {
      if (t.tpow == tpow && t.rate.same_rate(rate)) p += t.coeff;
    }
    return p;
  }

  void check_compatible(const ExpSeries& o) const {
    if (basis_ && o.basis_ && basis_ != o.basis_ && basis_->dim() != o.basis_->dim()) {
      throw Error(ErrorKind::dimension, "series over " + std::to_string(basis_->dim()) +
                                            " and " + std::to_string(o.basis_->dim()) +
                                            " eigenvalues");
    }
    if (nparams_ != o.nparams_) {
      throw Error(ErrorKind::dimension, "series with " + std::to_string(nparams_) + " and " +
                                            std::to_string(o.nparams_) + " parameters");
    }
  }

  // Merges terms with equal (rate key, tpow), drops zero coefficients and
  // sorts by descending rate value, then ascending tpow.
  void canonicalize() {
    struct Slot {
      ParamPoly coeff;
      RateCombo rate;
    };
    std::map<std::pair<std::vector<std::int64_t>, int>, Slot> merged;
    for (auto& t : terms_) {
      auto key = std::make_pair(t.rate.key, t.tpow);
      auto it = merged.find(key);
      if (it == merged.end()) {
        merged.emplace(std::move(key), Slot{std::move(t.coeff), std::move(t.rate)});
      } else {
        it->second.coeff += t.coeff;
        // Deterministic representative among equivalent coefficient vectors.
        if (t.rate.coeffs > it->second.rate.coeffs) it->second.rate = std::move(t.rate);
      }
    }
    terms_.clear();
    for (auto& [key, slot] : merged) {
      if (slot.coeff.is_zero()) continue;
      terms_.push_back(ExpTerm{std::move(slot.coeff), key.second, std::move(slot.rate)});
    }
    std::stable_sort(terms_.begin(), terms_.end(), [](const ExpTerm& a, const ExpTerm& b) {
      if (a.rate.value != b.rate.value) return a.rate.value > b.rate.value;
      if (a.rate.key != b.rate.key) return a.rate.key < b.rate.key;
      return a.tpow < b.tpow;
    });
    if (terms_.size() > kMaxTerms) {
      throw Error(ErrorKind::overflow, "series has " + std::to_string(terms_.size()) +
                                           " terms, cap is " + std::to_string(kMaxTerms));
    }
  }

 private:
  friend ExpSeries mul(const ExpSeries& f, const ExpSeries& g);

  RateBasisPtr basis_;
  std::size_t nparams_ = 0;
  std::vector<ExpTerm> terms_;
};

inline ExpSeries mul(const ExpSeries& f, const ExpSeries& g) {
  f.check_compatible(g);
  const RateBasisPtr& basis = f.basis() ? f.basis() : g.basis();
  ExpSeries r(basis, f.nparams());
  if (f.is_zero() || g.is_zero()) return r;
  r.terms_.reserve(f.size() * g.size());
  std::vector<int> c(basis->dim());
  for (const auto& a : f.terms_) {
    for (const auto& b : g.terms_) {
      for (std::size_t i = 0; i < c.size(); ++i) c[i] = a.rate.coeffs[i] + b.rate.coeffs[i];
      r.terms_.push_back(ExpTerm{a.coeff * b.coeff, a.tpow + b.tpow, RateCombo::make(*basis, c)});
    }
  }
  r.canonicalize();
  return r;
}

inline ExpSeries operator*(const ExpSeries& f, const ExpSeries& g) { return mul(f, g); }

// Evaluates a polynomial in n variables at n series arguments.
inline ExpSeries substitute_into_poly(const ParamPoly& poly, const std::vector<ExpSeries>& args) {
  if (args.size() != poly.nvars()) {
    throw Error(ErrorKind::dimension, "polynomial in " + std::to_string(poly.nvars()) +
                                          " variables applied to " +
                                          std::to_string(args.size()) + " series");
  }
  if (args.empty()) return ExpSeries();
  RateBasisPtr basis;
  for (const auto& a : args) {
    if (a.basis()) basis = a.basis();
  }
  const std::size_t np = args.front().nparams();
  ExpSeries result(basis, np);
  if (!basis) return result;
  std::vector<std::vector<ExpSeries>> powers(args.size());
  auto power_of = [&](std::size_t var, int k) -> const ExpSeries& {
    auto& cache = powers[var];
    if (cache.empty()) {
      cache.push_back(ExpSeries::from_terms(
          basis, np,
          {ExpTerm{ParamPoly::constant(np, 1.0), 0,
                   RateCombo::make(*basis, std::vector<int>(basis->dim(), 0))}}));
    }
    while (static_cast<int>(cache.size()) <= k) cache.push_back(mul(cache.back(), args[var]));
    return cache[k];
  };
  for (const auto& [e, c] : poly.terms()) {
    ExpSeries term = power_of(0, 0) * c;
    bool zero = false;
    for (std::size_t i = 0; i < e.size() && !zero; ++i) {
      if (e[i] < 0) throw Error(ErrorKind::domain, "negative exponent in vector field");
      if (e[i] == 0) continue;
      if (args[i].is_zero()) {
        zero = true;
        break;
      }
      term = mul(term, power_of(i, e[i]));
    }
    if (!zero) result += term;
  }
  return result;
}

inline std::string describe_term(const ExpTerm& t, std::size_t nparams) {
  return "(" + t.coeff.str(param_names(nparams)) + ")*t^" + std::to_string(t.tpow) +
         "*exp(" + format_real(t.rate.value) + " t)";
}

// g(t) = int_t^inf e^{lambda_j (t-s)} f(s) ds.
inline ExpSeries tail_conv(std::size_t j, const ExpSeries& f) {
  ExpSeries r(f.basis(), f.nparams());
  if (f.is_zero()) return r;
  const RateBasis& basis = *f.basis();
  const double lambda = basis.eigenvalue(j);
  const RateCombo unit = RateCombo::unit(basis, j);
  std::vector<ExpTerm> out;
  for (const auto& term : f.terms()) {
    const double mu = term.rate.value - lambda;
    if (term.rate.same_rate(unit) || !(mu < 0.0)) {
      throw Error(ErrorKind::divergent,
                  "tail integral against exp(" + format_real(lambda) + " t) diverges for term " +
                      describe_term(term, f.nparams()));
    }
    // int_t^inf s^k e^{mu s} ds = e^{mu t} sum_i d_i t^i, built up from k = 0.
    const int k = term.tpow;
    std::vector<double> d{-1.0 / mu};
    for (int kk = 1; kk <= k; ++kk) {
      std::vector<double> next(kk + 1);
      for (int i = 0; i < kk; ++i) next[i] = -(kk / mu) * d[i];
      next[kk] = -1.0 / mu;
      d = std::move(next);
    }
    for (int i = 0; i <= k; ++i) out.push_back(ExpTerm{term.coeff * d[i], i, term.rate});
  }
  return ExpSeries::from_terms(f.basis(), f.nparams(), std::move(out));
}

// g(t) = int_0^t e^{lambda_j (t-s)} f(s) ds.
inline ExpSeries forward_conv(std::size_t j, const ExpSeries& f) {
  ExpSeries r(f.basis(), f.nparams());
  if (f.is_zero()) return r;
  const RateBasis& basis = *f.basis();
  const double lambda = basis.eigenvalue(j);
  const RateCombo unit = RateCombo::unit(basis, j);
  std::vector<ExpTerm> out;
  for (const auto& term : f.terms()) {
    const int k = term.tpow;
    if (term.rate.same_rate(unit)) {
      out.push_back(ExpTerm{term.coeff * (1.0 / (k + 1)), k + 1, unit});
      continue;
    }
    const double mu = term.rate.value - lambda;
    // Antiderivative of s^k e^{mu s} is e^{mu s} sum_i a_i s^i.
    std::vector<double> a{1.0 / mu};
    for (int kk = 1; kk <= k; ++kk) {
      std::vector<double> next(kk + 1);
      for (int i = 0; i < kk; ++i) next[i] = -(kk / mu) * a[i];
      next[kk] = 1.0 / mu;
      a = std::move(next);
    }
    for (int i = 0; i <= k; ++i) out.push_back(ExpTerm{term.coeff * a[i], i, term.rate});
    out.push_back(ExpTerm{term.coeff * (-a[0]), 0, unit});
  }
  return ExpSeries::from_terms(f.basis(), f.nparams(), std::move(out));
}

// d/dt of every term.
inline ExpSeries differentiate(const ExpSeries& f) {
  std::vector<ExpTerm> out;
  for (const auto& t : f.terms()) {
    out.push_back(ExpTerm{t.coeff * t.rate.value, t.tpow, t.rate});
    if (t.tpow > 0) out.push_back(ExpTerm{t.coeff * static_cast<double>(t.tpow), t.tpow - 1, t.rate});
  }
  return ExpSeries::from_terms(f.basis(), f.nparams(), std::move(out));
}

enum class Boundary { keep, drop };

// Keeps terms with rate.value >= order - kRateTol. With Boundary::drop the
// terms sitting on the threshold rate are discarded as well.
inline ExpSeries truncate(const ExpSeries& f, double order, Boundary boundary = Boundary::keep) {
  std::vector<ExpTerm> kept;
  for (const auto& t : f.terms()) {
    const bool ok = boundary == Boundary::keep ? t.rate.value >= order - kRateTol
                                               : t.rate.value > order + kRateTol;
    if (ok) kept.push_back(t);
  }
  return ExpSeries::from_terms(f.basis(), f.nparams(), std::move(kept));
}

template <class T>
T eval(const ExpSeries& f, T t, std::span<const T> params) {
  return f.eval(t, params);
}

inline std::string pretty(const ExpSeries& f, const std::vector<std::string>& names) {
  if (f.is_zero()) return "0";
  std::string out;
  bool first = true;
  for (const auto& t : f.terms()) {
    if (!first) out += " + ";
    first = false;
    const bool compound = t.coeff.size() > 1;
    std::string c = t.coeff.str(names);
    out += compound ? "(" + c + ")" : c;
    if (t.tpow == 1) out += "·t";
    if (t.tpow > 1) out += "·t^" + std::to_string(t.tpow);
    out += "·e^{" + format_real(t.rate.value) + "t}";
  }
  return out;
}

}  // namespace sinkasym
