#pragma once

#include <algorithm>
#include <charconv>
#include <climits>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "sinkasym/errors.hpp"

namespace sinkasym {

// Shortest round-trip decimal form of a double.
inline std::string format_real(double v) {
  if (v == 0.0) return "0";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

// Sparse multivariate (Laurent) polynomial with real coefficients.
// Negative exponents are allowed so that relation coefficients such as
// y02/y01^2 stay exact; composition requires nonnegative exponents.
class ParamPoly {
 public:
  using Exponents = std::vector<int>;
  using TermMap = std::map<Exponents, double>;

  ParamPoly() = default;
  explicit ParamPoly(std::size_t nvars) : nvars_(nvars) {}

  static ParamPoly constant(std::size_t nvars, double c) {
    ParamPoly p(nvars);
    p.add_term(Exponents(nvars, 0), c);
    return p;
  }

  static ParamPoly variable(std::size_t nvars, std::size_t i, double c = 1.0) {
    ParamPoly p(nvars);
    Exponents e(nvars, 0);
    e.at(i) = 1;
    p.add_term(e, c);
    return p;
  }

  static ParamPoly monomial(Exponents e, double c) {
    ParamPoly p(e.size());
    p.add_term(e, c);
    return p;
  }

  std::size_t nvars() const { return nvars_; }
  const TermMap& terms() const { return terms_; }
  std::size_t size() const { return terms_.size(); }
  bool is_zero() const { return terms_.empty(); }

  double coefficient(const Exponents& e) const {
    auto it = terms_.find(e);
    return it == terms_.end() ? 0.0 : it->second;
  }

  // Adds c*x^e. Sums that cancel to within a few ulps of the operands are
  // removed so that no stored coefficient is zero.
  void add_term(const Exponents& e, double c) {
    if (e.size() != nvars_) {
      throw Error(ErrorKind::dimension, "monomial has " + std::to_string(e.size()) +
                                            " exponents, polynomial has " +
                                            std::to_string(nvars_) + " variables");
    }
    if (c == 0.0) return;
    auto [it, inserted] = terms_.emplace(e, c);
    if (inserted) return;
    const double s = it->second + c;
    if (std::abs(s) <= kCancel * (std::abs(it->second) + std::abs(c))) {
      terms_.erase(it);
    } else {
      it->second = s;
    }
  }

  ParamPoly& operator+=(const ParamPoly& o) {
    check_same(o);
    for (const auto& [e, c] : o.terms_) add_term(e, c);
    return *this;
  }

  ParamPoly& operator-=(const ParamPoly& o) {
    check_same(o);
    for (const auto& [e, c] : o.terms_) add_term(e, -c);
    return *this;
  }

  ParamPoly& operator*=(double s) {
    if (s == 0.0) {
      terms_.clear();
      return *this;
    }
    for (auto& [e, c] : terms_) c *= s;
    return *this;
  }

  friend ParamPoly operator+(ParamPoly a, const ParamPoly& b) { return a += b; }
  friend ParamPoly operator-(ParamPoly a, const ParamPoly& b) { return a -= b; }
  friend ParamPoly operator*(ParamPoly a, double s) { return a *= s; }
  friend ParamPoly operator*(double s, ParamPoly a) { return a *= s; }
  ParamPoly operator-() const { return *this * -1.0; }

  friend ParamPoly operator*(const ParamPoly& a, const ParamPoly& b) {
    a.check_same(b);
    ParamPoly r(a.nvars_);
    Exponents e(a.nvars_);
    for (const auto& [ea, ca] : a.terms_) {
      for (const auto& [eb, cb] : b.terms_) {
        for (std::size_t i = 0; i < e.size(); ++i) e[i] = ea[i] + eb[i];
        r.add_term(e, ca * cb);
      }
    }
    return r;
  }

  bool operator==(const ParamPoly& o) const { return nvars_ == o.nvars_ && terms_ == o.terms_; }

  static int degree_of(const Exponents& e) {
    int d = 0;
    for (int x : e) d += x;
    return d;
  }

  int min_degree() const {
    int d = INT_MAX;
    for (const auto& [e, c] : terms_) d = std::min(d, degree_of(e));
    return d;
  }

  int max_degree() const {
    int d = INT_MIN;
    for (const auto& [e, c] : terms_) d = std::max(d, degree_of(e));
    return d;
  }

  bool is_constant() const {
    return terms_.empty() ||
           (terms_.size() == 1 &&
            std::all_of(terms_.begin()->first.begin(), terms_.begin()->first.end(),
                        [](int x) { return x == 0; }));
  }

  double constant_value() const { return coefficient(Exponents(nvars_, 0)); }

  bool depends_on(std::size_t var) const {
    for (const auto& [e, c] : terms_) {
      if (e.at(var) != 0) return true;
    }
    return false;
  }

  double max_abs_coefficient() const {
    double m = 0.0;
    for (const auto& [e, c] : terms_) m = std::max(m, std::abs(c));
    return m;
  }

  // Keeps monomials of total degree <= max_degree.
  ParamPoly truncated(int max_degree) const {
    ParamPoly r(nvars_);
    for (const auto& [e, c] : terms_) {
      if (degree_of(e) <= max_degree) r.terms_.emplace(e, c);
    }
    return r;
  }

  ParamPoly inverse_monomial() const {
    if (terms_.size() != 1) {
      throw Error(ErrorKind::domain, "only a single-term polynomial can be inverted, got " +
                                         std::to_string(terms_.size()) + " terms");
    }
    const auto& [e, c] = *terms_.begin();
    Exponents neg(e.size());
    for (std::size_t i = 0; i < e.size(); ++i) neg[i] = -e[i];
    return monomial(neg, 1.0 / c);
  }

  ParamPoly pow(int k) const {
    if (k < 0) return inverse_monomial().pow(-k);
    ParamPoly r = constant(nvars_, 1.0);
    for (int i = 0; i < k; ++i) r = r * *this;
    return r;
  }

  template <class T>
  T eval(std::span<const T> x) const {
    if (x.size() != nvars_) {
      throw Error(ErrorKind::dimension, "evaluation point has " + std::to_string(x.size()) +
                                            " entries, polynomial has " +
                                            std::to_string(nvars_) + " variables");
    }
    T sum = 0;
    for (const auto& [e, c] : terms_) {
      T term = static_cast<T>(c);
      for (std::size_t i = 0; i < e.size(); ++i) {
        const int k = e[i];
        if (k > 0) {
          for (int j = 0; j < k; ++j) term *= x[i];
        } else if (k < 0) {
          for (int j = 0; j < -k; ++j) term /= x[i];
        }
      }
      sum += term;
    }
    return sum;
  }

  template <class T>
  T eval(const std::vector<T>& x) const {
    return eval(std::span<const T>(x));
  }

  // Substitutes x_i -> subs[i]. Products above max_degree are dropped early,
  // which is exact for the retained part because every exponent is >= 0.
  ParamPoly compose(const std::vector<ParamPoly>& subs, int max_degree = INT_MAX) const {
    if (subs.size() != nvars_) {
      throw Error(ErrorKind::dimension, "composition needs " + std::to_string(nvars_) +
                                            " substitutions, got " +
                                            std::to_string(subs.size()));
    }
    if (subs.empty()) return *this;
    const std::size_t out_vars = subs.front().nvars();
    for (const auto& s : subs) {
      if (s.nvars() != out_vars) {
        throw Error(ErrorKind::dimension, "substitutions use different variable sets");
      }
    }
    std::vector<std::vector<ParamPoly>> powers(nvars_);
    auto power_of = [&](std::size_t var, int k) -> const ParamPoly& {
      auto& cache = powers[var];
      if (cache.empty()) cache.push_back(constant(out_vars, 1.0));
      while (static_cast<int>(cache.size()) <= k) {
        cache.push_back((cache.back() * subs[var]).truncated(max_degree));
      }
      return cache[k];
    };
    ParamPoly result(out_vars);
    for (const auto& [e, c] : terms_) {
      ParamPoly term = constant(out_vars, c);
      for (std::size_t i = 0; i < e.size(); ++i) {
        if (e[i] < 0) {
          throw Error(ErrorKind::domain, "cannot compose a polynomial with negative exponents");
        }
        if (e[i] > 0) term = (term * power_of(i, e[i])).truncated(max_degree);
      }
      result += term;
    }
    return result;
  }

  // Human-readable form, e.g. "2*y01^2*y02 - 0.5".
  std::string str(const std::vector<std::string>& names) const {
    if (terms_.empty()) return "0";
    std::string out;
    bool first = true;
    for (const auto& [e, c] : terms_) {
      double mag = c;
      if (first) {
        if (c < 0) {
          out += "-";
          mag = -c;
        }
      } else {
        out += c < 0 ? " - " : " + ";
        mag = std::abs(c);
      }
      first = false;
      std::string mono;
      for (std::size_t i = 0; i < e.size(); ++i) {
        if (e[i] == 0) continue;
        if (!mono.empty()) mono += "*";
        mono += i < names.size() ? names[i] : "p" + std::to_string(i + 1);
        if (e[i] != 1) mono += "^" + std::to_string(e[i]);
      }
      if (mono.empty()) {
        out += format_real(mag);
      } else if (mag == 1.0) {
        out += mono;
      } else {
        out += format_real(mag) + "*" + mono;
      }
    }
    return out;
  }

 private:
  static constexpr double kCancel = 8.0 * std::numeric_limits<double>::epsilon();

  void check_same(const ParamPoly& o) const {
    if (o.nvars_ != nvars_) {
      throw Error(ErrorKind::dimension, "polynomials over " + std::to_string(nvars_) + " and " +
                                            std::to_string(o.nvars_) + " variables");
    }
  }

  std::size_t nvars_ = 0;
  TermMap terms_;
};

// Default parameter names y01, y02, ... (or with another stem such as "x0").
inline std::vector<std::string> param_names(std::size_t n, const std::string& stem = "y0") {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < n; ++i) names.push_back(stem + std::to_string(i + 1));
  return names;
}

}  // namespace sinkasym
