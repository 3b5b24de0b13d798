#pragma once

#include <algorithm>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "sinkasym/errors.hpp"
#include "sinkasym/exp_series.hpp"
#include "sinkasym/fit.hpp"
#include "sinkasym/mm.hpp"
#include "sinkasym/relate.hpp"
#include "sinkasym/system.hpp"

namespace sinkasym::io {

using json = nlohmann::ordered_json;

[[noreturn]] inline void fail_at(const std::string& source, const std::string& pointer,
                                 const std::string& msg) {
  throw Error(ErrorKind::input, source + ": " + (pointer.empty() ? "/" : pointer) + ": " + msg);
}

// Parses text, reporting syntax errors by line and column.
inline json parse_text(const std::string& text, const std::string& source) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t line = 1, col = 1;
    const std::size_t upto = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    for (std::size_t i = 0; i < upto; ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    std::string what = e.what();
    // Drop the library's own prefix; the position is reported in front.
    if (auto p = what.find(": syntax error"); p != std::string::npos) what = what.substr(p + 2);
    throw Error(ErrorKind::input,
                source + ":" + std::to_string(line) + ":" + std::to_string(col) + ": " + what);
  }
}

inline void check_keys(const json& j, const std::string& source, const std::string& ptr,
                       const std::set<std::string>& allowed) {
  if (!j.is_object()) fail_at(source, ptr, "expected an object");
  for (const auto& [k, v] : j.items()) {
    if (!allowed.count(k)) fail_at(source, ptr + "/" + k, "unknown key");
  }
}

inline double number_at(const json& j, const std::string& source, const std::string& ptr) {
  if (!j.is_number()) fail_at(source, ptr, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) fail_at(source, ptr, "number is not finite");
  return v;
}

struct SystemInput {
  std::string name;
  Eigen::MatrixXd A;
  PolyVectorField b;
};

// {"A": [[..],..] or flat row-major, "b": [[{"coeff": c, "exps": [..]}, ..], ..], "name"?}
inline SystemInput parse_system(const json& j, const std::string& source) {
  check_keys(j, source, "", {"A", "b", "name"});
  if (!j.contains("A")) fail_at(source, "/A", "missing");
  if (!j.contains("b")) fail_at(source, "/b", "missing");
  SystemInput in;
  if (j.contains("name")) {
    if (!j["name"].is_string()) fail_at(source, "/name", "expected a string");
    in.name = j["name"].get<std::string>();
  }
  const json& A = j["A"];
  if (!A.is_array() || A.empty()) fail_at(source, "/A", "expected a non-empty array");
  std::size_t n = 0;
  std::vector<double> entries;
  if (A[0].is_array()) {
    n = A.size();
    for (std::size_t r = 0; r < n; ++r) {
      const std::string p = "/A/" + std::to_string(r);
      if (!A[r].is_array() || A[r].size() != n) {
        fail_at(source, p, "expected a row of " + std::to_string(n) + " numbers");
      }
      for (std::size_t c = 0; c < n; ++c) {
        entries.push_back(number_at(A[r][c], source, p + "/" + std::to_string(c)));
      }
    }
  } else {
    const auto root = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(A.size()))));
    if (root * root != A.size()) {
      fail_at(source, "/A", "flat array of length " + std::to_string(A.size()) + " is not square");
    }
    n = root;
    for (std::size_t i = 0; i < A.size(); ++i) {
      entries.push_back(number_at(A[i], source, "/A/" + std::to_string(i)));
    }
  }
  in.A.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c) in.A(r, c) = entries[r * n + c];

  const json& b = j["b"];
  if (!b.is_array() || b.size() != n) {
    fail_at(source, "/b", "expected " + std::to_string(n) + " component lists");
  }
  std::vector<std::vector<Monomial>> comps(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::string pi = "/b/" + std::to_string(i);
    if (!b[i].is_array()) fail_at(source, pi, "expected an array of monomials");
    for (std::size_t k = 0; k < b[i].size(); ++k) {
      const std::string pk = pi + "/" + std::to_string(k);
      const json& m = b[i][k];
      check_keys(m, source, pk, {"coeff", "exps"});
      if (!m.contains("coeff")) fail_at(source, pk + "/coeff", "missing");
      if (!m.contains("exps")) fail_at(source, pk + "/exps", "missing");
      const double c = number_at(m["coeff"], source, pk + "/coeff");
      const json& e = m["exps"];
      if (!e.is_array() || e.size() != n) {
        fail_at(source, pk + "/exps", "expected " + std::to_string(n) + " exponents");
      }
      std::vector<int> exps;
      int deg = 0;
      for (std::size_t q = 0; q < n; ++q) {
        if (!e[q].is_number_integer() || e[q].get<long long>() < 0 || e[q].get<long long>() > 64) {
          fail_at(source, pk + "/exps/" + std::to_string(q), "expected an integer in [0, 64]");
        }
        exps.push_back(e[q].get<int>());
        deg += exps.back();
      }
      if (deg < 2) {
        fail_at(source, pk + "/exps",
                "total degree " + std::to_string(deg) + " < 2; linear terms belong in A");
      }
      comps[i].push_back({c, std::move(exps)});
    }
  }
  in.b = make_field(comps);
  return in;
}

// {"eps", "eta"} or {"k1", "km1", "k2", "e0"}, with an optional "x0": [x, y].
struct MMInput {
  MMScaling scaling;
  std::vector<double> x0{0.2, 0.0};
};

inline MMInput parse_mm(const json& j, const std::string& source) {
  check_keys(j, source, "", {"eps", "eta", "k1", "km1", "k2", "e0", "x0"});
  MMInput in;
  const bool dimless = j.contains("eps") || j.contains("eta");
  const bool dim = j.contains("k1") || j.contains("km1") || j.contains("k2") || j.contains("e0");
  if (dimless == dim) fail_at(source, "", "give either eps and eta, or k1, km1, k2 and e0");
  auto need = [&](const char* k) {
    if (!j.contains(k)) fail_at(source, std::string("/") + k, "missing");
    return number_at(j[k], source, std::string("/") + k);
  };
  if (dimless) {
    in.scaling = dimensionless(need("eps"), need("eta"));
  } else {
    in.scaling = nondimensionalize({need("k1"), need("km1"), need("k2"), need("e0")});
  }
  if (j.contains("x0")) {
    const json& x = j["x0"];
    if (!x.is_array() || x.size() != 2) fail_at(source, "/x0", "expected [x, y]");
    in.x0 = {number_at(x[0], source, "/x0/0"), number_at(x[1], source, "/x0/1")};
  }
  return in;
}

inline json poly_to_json(const ParamPoly& p) {
  json out = json::array();
  for (const auto& [e, c] : p.terms()) out.push_back(json::array({e, c}));
  return out;
}

inline json series_to_json(const ExpSeries& f) {
  json out = json::array();
  for (const auto& t : f.terms()) {
    out.push_back({{"rate_coeffs", t.rate.coeffs},
                   {"rate_value", t.rate.value},
                   {"tpow", t.tpow},
                   {"coeff_poly", poly_to_json(t.coeff)}});
  }
  return out;
}

inline json relation_to_json(const RelationSeries& rel) {
  json terms = json::array();
  for (const auto& t : rel.terms) {
    json c = {{"power", t.power}, {"logpow", t.logpow}, {"value", poly_to_json(t.coeff.value)}};
    if (!t.coeff.log_part.is_zero()) c["log_part"] = poly_to_json(t.coeff.log_part);
    if (t.coeff.lead_power != 0.0) c["lead_power"] = t.coeff.lead_power;
    c["ic_dependent"] = t.ic_dependent;
    terms.push_back(std::move(c));
  }
  return {{"abscissa", rel.abscissa},
          {"params", rel.param_names},
          {"lead", poly_to_json(rel.lead)},
          {"terms", std::move(terms)},
          {"remainder", {{"power", rel.remainder_power},
                         {"logpow", rel.remainder_logpow},
                         {"little_o", rel.remainder_little_o}}},
          {"text", rel.str()}};
}

inline json fit_to_json(const FitReport& f) {
  json out = {{"model", to_string(f.model)},
              {"rate", f.rate},
              {"coefficients", f.coefficients},
              {"residual", f.residual},
              {"window", {f.window_lo, f.window_hi}},
              {"samples", f.samples},
              {"conclusive", f.conclusive}};
  if (f.alt_rate) out["alt_rate"] = *f.alt_rate;
  if (f.alt_residual) out["alt_residual"] = *f.alt_residual;
  return out;
}

}  // namespace sinkasym::io
