#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "sinkasym/errors.hpp"
#include "sinkasym/param_poly.hpp"

namespace sinkasym {

enum class FitModel { exponential, exponential_t, power_law, power_law_log };

inline const char* to_string(FitModel m) {
  switch (m) {
    case FitModel::exponential: return "exponential";
    case FitModel::exponential_t: return "exponential with t-prefactor";
    case FitModel::power_law: return "power law";
    case FitModel::power_law_log: return "power law with log";
  }
  return "?";
}

struct FitReport {
  FitModel model = FitModel::exponential;
  double rate = 0.0;                 // decay fits: slope of log(error)
  std::vector<double> coefficients;  // model coefficients in template order
  double residual = 0.0;             // RMS least-squares residual of the stated model
  double window_lo = 0.0;
  double window_hi = 0.0;
  std::size_t samples = 0;
  double condition = 0.0;
  bool conclusive = true;
  // Runner-up decay model, kept for model-selection reports.
  std::optional<double> alt_rate;
  std::optional<double> alt_residual;

  std::string str() const {
    std::string s = std::string(to_string(model)) + ": ";
    if (model == FitModel::exponential || model == FitModel::exponential_t) {
      s += "rate " + format_real(rate);
    } else {
      s += "coefficients [";
      for (std::size_t i = 0; i < coefficients.size(); ++i) {
        s += (i ? ", " : "") + format_real(coefficients[i]);
      }
      s += "]";
    }
    s += ", residual " + format_real(residual) + ", window [" + format_real(window_lo) + ", " +
         format_real(window_hi) + "], n=" + std::to_string(samples);
    if (!conclusive) s += " (inconclusive)";
    return s;
  }
};

namespace detail {

// Straight-line least squares y = c0 + c1 x; returns (c0, c1, rms residual).
inline std::array<double, 3> line_fit(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  Eigen::MatrixXd M(n, 2);
  Eigen::VectorXd v(n);
  for (std::size_t i = 0; i < n; ++i) {
    M(i, 0) = 1.0;
    M(i, 1) = x[i];
    v(i) = y[i];
  }
  Eigen::Vector2d c = M.colPivHouseholderQr().solve(v);
  const double rms = std::sqrt((M * c - v).squaredNorm() / static_cast<double>(n));
  return {c(0), c(1), rms};
}

}  // namespace detail

struct DecayFitOptions {
  std::optional<double> t_lo;        // default: last 60% of the span
  std::optional<double> t_hi;
  double floor_rel = 1e2 * std::numeric_limits<double>::epsilon();
  bool allow_t_prefactor = true;
};

// Fits log(err) = c + rate t, and (optionally) log(err) - log t = c + rate t,
// keeping the model with the smaller residual.
inline FitReport fit_decay(const std::vector<double>& t, const std::vector<double>& err,
                           DecayFitOptions opt = {}) {
  if (t.size() != err.size() || t.size() < 3) {
    throw Error(ErrorKind::input, "fit_decay needs matching time/value series of length >= 3");
  }
  const double span_lo = t.front(), span_hi = t.back();
  double lo = opt.t_lo.value_or(span_lo + 0.4 * (span_hi - span_lo));
  double hi = opt.t_hi.value_or(span_hi);
  double scale = 0.0;
  for (double e : err) scale = std::max(scale, std::abs(e));
  const double floor = opt.floor_rel * scale;

  for (int attempt = 0; attempt < 4; ++attempt) {
    std::vector<double> ts, le, lt;
    bool underflow = false;
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (t[i] < lo || t[i] > hi) continue;
      if (!(err[i] > floor)) {
        underflow = true;
        continue;
      }
      ts.push_back(t[i]);
      le.push_back(std::log(err[i]));
      lt.push_back(t[i] > 0 ? std::log(err[i]) - std::log(t[i]) : 0.0);
    }
    if (ts.size() >= 3 && !underflow) {
      FitReport rep;
      rep.window_lo = lo;
      rep.window_hi = hi;
      rep.samples = ts.size();
      const auto pure = detail::line_fit(ts, le);
      rep.model = FitModel::exponential;
      rep.rate = pure[1];
      rep.coefficients = {std::exp(pure[0])};
      rep.residual = pure[2];
      if (opt.allow_t_prefactor && ts.front() > 0) {
        const auto tp = detail::line_fit(ts, lt);
        if (tp[2] < pure[2]) {
          rep.model = FitModel::exponential_t;
          rep.rate = tp[1];
          rep.coefficients = {std::exp(tp[0])};
          rep.residual = tp[2];
          rep.alt_rate = pure[1];
          rep.alt_residual = pure[2];
        } else {
          rep.alt_rate = tp[1];
          rep.alt_residual = tp[2];
        }
      }
      return rep;
    }
    // Shrink the window toward its start, where errors are larger.
    hi = lo + 0.5 * (hi - lo);
  }
  FitReport rep;
  rep.conclusive = false;
  rep.window_lo = lo;
  rep.window_hi = hi;
  return rep;
}

// One regressor x^power (ln x)^logpow.
struct RelationTerm {
  double power = 1.0;
  int logpow = 0;
};

struct RelationFitOptions {
  double max_condition = 1e12;
  int retries = 4;
};

// Linear least squares for x2 = sum_k c_k x1^{q_k} (ln x1)^{l_k} on the
// samples with x1 in (0, x_hi]. Columns are normalised before the condition
// check; an ill-conditioned system shrinks x_hi and retries.
inline FitReport fit_relation(const std::vector<double>& x1, const std::vector<double>& x2,
                              const std::vector<RelationTerm>& terms, double x_lo, double x_hi,
                              RelationFitOptions opt = {}) {
  if (x1.size() != x2.size()) throw Error(ErrorKind::input, "fit_relation: length mismatch");
  if (terms.empty()) throw Error(ErrorKind::input, "fit_relation: empty template");
  FitReport rep;
  for (int attempt = 0; attempt <= opt.retries; ++attempt) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < x1.size(); ++i) {
      if (x1[i] > x_lo && x1[i] <= x_hi) idx.push_back(i);
    }
    if (idx.size() < terms.size() + 2) break;
    const std::size_t m = idx.size(), k = terms.size();
    Eigen::MatrixXd M(m, k);
    Eigen::VectorXd v(m);
    for (std::size_t r = 0; r < m; ++r) {
      const double x = x1[idx[r]];
      for (std::size_t c = 0; c < k; ++c) {
        double val = std::pow(x, terms[c].power);
        for (int l = 0; l < terms[c].logpow; ++l) val *= std::log(x);
        M(r, c) = val;
      }
      v(r) = x2[idx[r]];
    }
    Eigen::VectorXd colscale(k);
    for (std::size_t c = 0; c < k; ++c) {
      colscale(c) = M.col(c).norm();
      if (colscale(c) == 0.0) colscale(c) = 1.0;
      M.col(c) /= colscale(c);
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    const double cond = sv(0) / std::max(sv(sv.size() - 1), 1e-300);
    rep.condition = cond;
    rep.window_lo = x_lo;
    rep.window_hi = x_hi;
    rep.samples = m;
    if (cond > opt.max_condition) {
      x_hi = x_lo + 0.5 * (x_hi - x_lo);
      continue;
    }
    Eigen::VectorXd c = svd.solve(v);
    rep.residual = std::sqrt((M * c - v).squaredNorm() / static_cast<double>(m));
    rep.coefficients.resize(k);
    for (std::size_t i = 0; i < k; ++i) rep.coefficients[i] = c(i) / colscale(i);
    bool has_log = false;
    for (const auto& t : terms) has_log |= t.logpow > 0;
    rep.model = has_log ? FitModel::power_law_log : FitModel::power_law;
    rep.conclusive = true;
    return rep;
  }
  rep.conclusive = false;
  return rep;
}

}  // namespace sinkasym
