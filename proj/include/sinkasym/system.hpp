#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sinkasym/errors.hpp"
#include "sinkasym/exp_series.hpp"
#include "sinkasym/param_poly.hpp"

namespace sinkasym {

// Polynomial field b: R^n -> R^n, every monomial of total degree >= 2.
class PolyVectorField {
 public:
  PolyVectorField() = default;

  explicit PolyVectorField(std::vector<ParamPoly> components)
      : components_(std::move(components)) {
    const std::size_t n = components_.size();
    int lowest = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto& c = components_[i];
      if (c.nvars() != n) {
        throw Error(ErrorKind::dimension, "component " + std::to_string(i + 1) + " uses " +
                                              std::to_string(c.nvars()) + " variables, expected " +
                                              std::to_string(n));
      }
      for (const auto& [e, coeff] : c.terms()) {
        for (int x : e) {
          if (x < 0) {
            throw Error(ErrorKind::input,
                        "component " + std::to_string(i + 1) + " has a negative exponent");
          }
        }
        const int d = ParamPoly::degree_of(e);
        if (d < 2) {
          throw Error(ErrorKind::input, "component " + std::to_string(i + 1) +
                                            " has a monomial of total degree " +
                                            std::to_string(d) + " < 2");
        }
        lowest = lowest == 0 ? d : std::min(lowest, d);
      }
    }
    // The zero field vanishes to every order; 2 is the smallest admissible choice.
    alpha_ = lowest == 0 ? 2 : lowest;
  }

  static PolyVectorField zero(std::size_t n) {
    return PolyVectorField(std::vector<ParamPoly>(n, ParamPoly(n)));
  }

  std::size_t dim() const { return components_.size(); }
  const std::vector<ParamPoly>& components() const { return components_; }
  const ParamPoly& component(std::size_t i) const { return components_.at(i); }
  int alpha() const { return alpha_; }
  int beta() const { return alpha_ - 1; }
  bool is_zero() const {
    return std::all_of(components_.begin(), components_.end(),
                       [](const ParamPoly& p) { return p.is_zero(); });
  }
  int max_degree() const {
    int d = 0;
    for (const auto& c : components_) {
      if (!c.is_zero()) d = std::max(d, c.max_degree());
    }
    return d;
  }

  // Taylor polynomial of degree <= max_degree.
  PolyVectorField truncated(int max_degree) const {
    PolyVectorField r = *this;
    for (auto& c : r.components_) c = c.truncated(max_degree);
    return r;
  }

  template <class T>
  std::vector<T> eval(std::span<const T> x) const {
    std::vector<T> out(components_.size());
    for (std::size_t i = 0; i < components_.size(); ++i) out[i] = components_[i].eval(x);
    return out;
  }

  // Coefficient of x^e in component i (exponent vector over n variables).
  double coefficient(std::size_t i, const ParamPoly::Exponents& e) const {
    return components_.at(i).coefficient(e);
  }

 private:
  std::vector<ParamPoly> components_;
  int alpha_ = 2;
};

struct Resonance {
  std::vector<int> m;  // multi-index over eigenvalues
  std::size_t j = 0;   // target eigenvalue index (0-based)
  int order = 0;       // sum of m
};

struct Spectrum {
  std::vector<double> eigenvalues;  // lambda_1 >= ... >= lambda_n (slowest first)
  double kappa = 1.0;
  std::optional<Rational> kappa_exact;
  Eigen::MatrixXd P;
  Eigen::MatrixXd Pinv;
  bool diagonal_input = true;
  std::vector<Resonance> resonances;
  std::vector<std::string> warnings;
  RateBasisPtr basis;

  std::size_t dim() const { return eigenvalues.size(); }
  double slowest() const { return eigenvalues.front(); }
  bool identity_basis() const {
    return P.isIdentity(0.0);
  }
};

enum class Spacing { closely, widely };

inline const char* to_string(Spacing s) {
  return s == Spacing::closely ? "closely-spaced" : "widely-spaced";
}

// Enumerates multi-indices m with 2 <= |m| <= max_order and checks the
// resonance condition on the exact integer keys.
inline std::vector<Resonance> detect_resonance(const Spectrum& spec, int max_order,
                                               std::vector<std::string>* warnings = nullptr) {
  if (max_order < 2) throw Error(ErrorKind::domain, "resonance order must be >= 2");
  const RateBasis& basis = *spec.basis;
  const std::size_t n = spec.dim();
  std::vector<Resonance> found;
  std::vector<int> m(n, 0);
  auto visit = [&](const std::vector<int>& mi, int order) {
    const auto key = basis.key(mi);
    const double val = basis.value(mi);
    for (std::size_t j = 0; j < n; ++j) {
      if (key == basis.eigen_key(j)) {
        found.push_back(Resonance{mi, j, order});
      } else if (warnings && std::abs(val - spec.eigenvalues[j]) <= 1e-6 * std::abs(spec.eigenvalues[j])) {
        std::string idx;
        for (int x : mi) idx += (idx.empty() ? "" : ",") + std::to_string(x);
        warnings->push_back("near-resonance: m=(" + idx + ") gives " + format_real(val) +
                            " vs lambda_" + std::to_string(j + 1) + "=" +
                            format_real(spec.eigenvalues[j]));
      }
    }
  };
  // Depth-first enumeration of compositions with total in [2, max_order].
  std::function<void(std::size_t, int)> rec = [&](std::size_t i, int remaining) {
    if (i + 1 == n) {
      for (int k = 0; k <= remaining; ++k) {
        m[i] = k;
        const int order = std::accumulate(m.begin(), m.end(), 0);
        if (order >= 2) visit(m, order);
      }
      m[i] = 0;
      return;
    }
    for (int k = 0; k <= remaining; ++k) {
      m[i] = k;
      rec(i + 1, remaining - k);
    }
    m[i] = 0;
  };
  if (n > 0) rec(0, max_order);
  std::sort(found.begin(), found.end(), [](const Resonance& a, const Resonance& b) {
    if (a.order != b.order) return a.order < b.order;
    if (a.j != b.j) return a.j < b.j;
    return a.m > b.m;
  });
  return found;
}

namespace detail {

inline Eigen::Vector2d normalized_eigenvector(const Eigen::Matrix2d& A, double lambda) {
  Eigen::Vector2d v1(A(0, 1), lambda - A(0, 0));
  Eigen::Vector2d v2(lambda - A(1, 1), A(1, 0));
  Eigen::Vector2d v = v1.norm() >= v2.norm() ? v1 : v2;
  if (std::abs(v(0)) > 1e-12 * v.norm()) {
    v /= v(0);
  } else {
    v.normalize();
    if (v(1) < 0) v = -v;
  }
  return v;
}

}  // namespace detail

inline Spectrum analyze(const Eigen::MatrixXd& A) {
  const auto n = static_cast<std::size_t>(A.rows());
  if (A.rows() != A.cols() || n == 0) {
    throw Error(ErrorKind::input, "A must be a nonempty square matrix");
  }
  if (!A.allFinite()) throw Error(ErrorKind::input, "A has non-finite entries");
  Spectrum spec;
  const double scale = A.cwiseAbs().maxCoeff();
  bool diagonal = true;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i != j && A(i, j) != 0.0) diagonal = false;
    }
  }
  spec.diagonal_input = diagonal;
  if (diagonal) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return A(a, a) > A(b, b); });
    spec.P = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t k = 0; k < n; ++k) {
      spec.eigenvalues.push_back(A(order[k], order[k]));
      spec.P(order[k], k) = 1.0;
    }
    spec.Pinv = spec.P.transpose();
  } else if (n == 2) {
    Eigen::Matrix2d M = A;
    const double tr = M.trace();
    const double det = M.determinant();
    const double disc = tr * tr - 4.0 * det;
    if (disc < -1e-14 * tr * tr) {
      throw Error(ErrorKind::unsupported_spectrum, "A has complex eigenvalues (discriminant " +
                                                       format_real(disc) + ")");
    }
    if (std::abs(disc) <= 1e-14 * std::max(tr * tr, scale * scale)) {
      throw Error(ErrorKind::non_diagonalizable,
                  "non-diagonal 2x2 A with a repeated eigenvalue is not diagonalizable here");
    }
    const double root = std::sqrt(disc);
    // Cancellation-free pair: the larger-magnitude root first, the other via det.
    const double big = tr < 0 ? (tr - root) / 2.0 : (tr + root) / 2.0;
    const double small = big != 0.0 ? det / big : (tr - big);
    const double slow = std::max(big, small);
    const double fast = std::min(big, small);
    spec.eigenvalues = {slow, fast};
    spec.P.resize(2, 2);
    spec.P.col(0) = detail::normalized_eigenvector(M, slow);
    spec.P.col(1) = detail::normalized_eigenvector(M, fast);
    spec.Pinv = spec.P.inverse();
    Eigen::MatrixXd L = Eigen::MatrixXd::Zero(2, 2);
    L(0, 0) = slow;
    L(1, 1) = fast;
    const double err = (spec.P * L * spec.Pinv - A).norm();
    if (err > 1e-10 * std::max(1.0, A.norm())) {
      throw Error(ErrorKind::consistency, "eigendecomposition does not reconstruct A");
    }
  } else {
    throw Error(ErrorKind::unsupported_shape,
                "only diagonal n x n or general 2 x 2 matrices are supported (got non-diagonal " +
                    std::to_string(n) + " x " + std::to_string(n) + ")");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!(spec.eigenvalues[i] < 0.0)) {
      throw Error(ErrorKind::not_a_sink, "eigenvalue " + format_real(spec.eigenvalues[i]) +
                                             " is not negative");
    }
  }
  spec.basis = make_rate_basis(spec.eigenvalues);
  spec.kappa = spec.eigenvalues.back() / spec.eigenvalues.front();
  spec.kappa_exact = spec.basis->ratio(n - 1, 0);
  if (spec.kappa_exact) spec.kappa = spec.kappa_exact->value();
  const int max_order = static_cast<int>(std::ceil(spec.kappa - 1e-12)) + 1;
  if (n > 1) spec.resonances = detect_resonance(spec, std::max(2, max_order), &spec.warnings);
  return spec;
}

// kappa < alpha, decided exactly when kappa is rational.
inline Spacing classify(const Spectrum& spec, const PolyVectorField& field) {
  const int alpha = field.alpha();
  if (spec.kappa_exact) {
    return spec.kappa_exact->num < static_cast<std::int64_t>(alpha) * spec.kappa_exact->den
               ? Spacing::closely
               : Spacing::widely;
  }
  return spec.kappa < alpha ? Spacing::closely : Spacing::widely;
}

// r(u) = Pinv * b(P u), by exact polynomial composition.
inline PolyVectorField conjugate_field(const PolyVectorField& b, const Eigen::MatrixXd& P,
                                       const Eigen::MatrixXd& Pinv) {
  const std::size_t n = b.dim();
  std::vector<ParamPoly> linear(n, ParamPoly(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < n; ++k) {
      if (P(i, k) != 0.0) linear[i] += ParamPoly::variable(n, k, P(i, k));
    }
  }
  std::vector<ParamPoly> composed;
  for (const auto& c : b.components()) composed.push_back(c.compose(linear));
  std::vector<ParamPoly> out(n, ParamPoly(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (Pinv(i, j) != 0.0) out[i] += composed[j] * Pinv(i, j);
    }
  }
  return PolyVectorField(std::move(out));
}

struct SinkSystem {
  Eigen::MatrixXd A;
  PolyVectorField b;
  Spectrum spectrum;
  Spacing classification = Spacing::closely;
  PolyVectorField diagonalized_field;  // field in eigen-coordinates u = Pinv x

  std::size_t dim() const { return b.dim(); }
  int alpha() const { return b.alpha(); }
  int beta() const { return b.beta(); }
  double kappa() const { return spectrum.kappa; }
  const RateBasisPtr& basis() const { return spectrum.basis; }

  // The system in eigen-coordinates: u' = diag(lambda) u + r(u).
  SinkSystem diagonal_form() const {
    SinkSystem d;
    const std::size_t n = dim();
    d.A = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t i = 0; i < n; ++i) d.A(i, i) = spectrum.eigenvalues[i];
    d.b = diagonalized_field;
    d.spectrum = spectrum;
    d.spectrum.P = Eigen::MatrixXd::Identity(n, n);
    d.spectrum.Pinv = Eigen::MatrixXd::Identity(n, n);
    d.spectrum.diagonal_input = true;
    d.classification = classification;
    d.diagonalized_field = diagonalized_field;
    return d;
  }
};

inline SinkSystem build_system(const Eigen::MatrixXd& A, const PolyVectorField& b) {
  if (static_cast<std::size_t>(A.rows()) != b.dim()) {
    throw Error(ErrorKind::dimension, "A is " + std::to_string(A.rows()) + "x" +
                                          std::to_string(A.cols()) + " but b has " +
                                          std::to_string(b.dim()) + " components");
  }
  SinkSystem sys;
  sys.A = A;
  sys.b = b;
  sys.spectrum = analyze(A);
  sys.classification = classify(sys.spectrum, b);
  sys.diagonalized_field = sys.spectrum.identity_basis()
                               ? b
                               : conjugate_field(b, sys.spectrum.P, sys.spectrum.Pinv);
  return sys;
}

inline Eigen::MatrixXd diag_matrix(const std::vector<double>& d) {
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(d.size(), d.size());
  for (std::size_t i = 0; i < d.size(); ++i) A(i, i) = d[i];
  return A;
}

// Builds a field from per-component lists of (coefficient, exponents).
struct Monomial {
  double coeff;
  std::vector<int> exps;
};

inline PolyVectorField make_field(const std::vector<std::vector<Monomial>>& comps) {
  const std::size_t n = comps.size();
  std::vector<ParamPoly> polys(n, ParamPoly(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto& m : comps[i]) {
      if (m.exps.size() != n) {
        throw Error(ErrorKind::input, "b[" + std::to_string(i) + "]: exponent vector has " +
                                          std::to_string(m.exps.size()) + " entries, expected " +
                                          std::to_string(n));
      }
      polys[i].add_term(m.exps, m.coeff);
    }
  }
  return PolyVectorField(std::move(polys));
}

}  // namespace sinkasym
