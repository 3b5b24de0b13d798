#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "sinkasym/mm.hpp"
#include "sinkasym/relate.hpp"

using namespace sinkasym;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

// Coefficients of eps y'(-x + (1 - eta + x) y) - x + (1 + x) y for a
// polynomial y, through x^N.
std::vector<double> slow_manifold_residual(const std::vector<double>& y, double eps, double eta,
                                           std::size_t N) {
  std::vector<double> dy(N + 1, 0.0), g(N + 1, 0.0), r(N + 1, 0.0);
  for (std::size_t k = 1; k < y.size() && k - 1 <= N; ++k) dy[k - 1] = k * y[k];
  // g = -x + (1 - eta) y + x y
  if (N >= 1) g[1] -= 1.0;
  for (std::size_t k = 0; k < y.size() && k <= N; ++k) g[k] += (1.0 - eta) * y[k];
  for (std::size_t k = 0; k < y.size() && k + 1 <= N; ++k) g[k + 1] += y[k];
  for (std::size_t i = 0; i <= N; ++i)
    for (std::size_t j = 0; i + j <= N; ++j) r[i + j] += eps * dy[i] * g[j];
  if (N >= 1) r[1] -= 1.0;
  for (std::size_t k = 0; k < y.size() && k <= N; ++k) r[k] += y[k];
  for (std::size_t k = 0; k < y.size() && k + 1 <= N; ++k) r[k + 1] += y[k];
  return r;
}

}  // namespace

TEST_CASE("nondimensionalization", "[mm]") {
  const MMScaling s = nondimensionalize({1.0, 1.0, 1.0, 2.0});
  CHECK(s.Km == 2.0);
  CHECK(s.eps == 1.0);
  CHECK(s.eta == 0.5);
  CHECK_THROWS_AS(nondimensionalize({1.0, 1.0, 0.0, 2.0}), Error);
  CHECK_THROWS_AS(dimensionless(1.0, 0.0), Error);
  CHECK_THROWS_AS(dimensionless(1.0, 1.0), Error);
  CHECK_THROWS_AS(dimensionless(-1.0, 0.5), Error);

  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> U(0.01, 10.0);
  for (int i = 0; i < 100; ++i) {
    const MMDimensional d{U(rng), U(rng), U(rng), U(rng)};
    const MMScaling sc = nondimensionalize(d);
    CHECK_THAT(sc.eps, WithinRel(d.e0 / sc.Km, 1e-14));
    CHECK_THAT(sc.eta, WithinRel(d.k2 / (d.km1 + d.k2), 1e-14));
  }
}

TEST_CASE("dimensionless vector field matches the planar reduction", "[mm][property]") {
  // ds/dtau = km1 c - k1 s (e0 - c), dc/dtau = k1 s (e0 - c) - (km1 + k2) c
  std::mt19937_64 rng(19);
  std::uniform_real_distribution<double> U(0.1, 3.0);
  for (int i = 0; i < 50; ++i) {
    const MMDimensional d{U(rng), U(rng), U(rng), U(rng)};
    const MMScaling sc = nondimensionalize(d);
    const SinkSystem sys = mm_system(sc.eps, sc.eta);
    const double x = 0.3 * U(rng), y = 0.1 * U(rng);
    const double s = x * sc.substrate_scale, c = y * sc.complex_scale;
    const double ds = d.km1 * c - d.k1 * s * (d.e0 - c);
    const double dc = d.k1 * s * (d.e0 - c) - (d.km1 + d.k2) * c;
    Eigen::Vector2d lin = sys.A * Eigen::Vector2d(x, y);
    const auto nl = sys.b.eval(std::span<const double>(std::vector<double>{x, y}));
    // dx/dt = ds/dtau * dtau/dt / Km
    CHECK_THAT(lin(0) + nl[0], WithinRel(ds * sc.time_scale / sc.substrate_scale, 1e-12));
    CHECK_THAT(lin(1) + nl[1], WithinRel(dc * sc.time_scale / sc.complex_scale, 1e-12));
  }
}

TEST_CASE("spectrum closed forms", "[mm]") {
  const MMSpectrum s = mm_spectrum(1.0, 8.0 / 9.0);
  CHECK_THAT(s.lambda_plus, WithinRel(-2.0 / 3.0, 1e-14));
  CHECK_THAT(s.lambda_minus, WithinRel(-4.0 / 3.0, 1e-14));
  CHECK_THAT(s.kappa, WithinRel(2.0, 1e-14));
  CHECK_THAT(s.sigma_plus, WithinRel(3.0, 1e-13));
  CHECK_THAT(s.sigma_minus, WithinRel(-3.0, 1e-13));
  CHECK_THAT(s.detP, WithinRel(-6.0, 1e-13));
  CHECK_THAT(s.r211, WithinRel(2.0, 1e-13));
  CHECK_THAT(mm_spectrum(1.0, 0.5).kappa, WithinRel(3.0 + 2.0 * std::sqrt(2.0), 1e-14));

  // Agrees with the generic eigen-decomposition.
  const SinkSystem sys = mm_system(1.0, 8.0 / 9.0);
  CHECK_THAT(sys.spectrum.eigenvalues[0], WithinRel(s.lambda_plus, 1e-12));
  CHECK_THAT(sys.spectrum.P(1, 0), WithinRel(s.sigma_plus, 1e-12));
  CHECK_THAT(sys.diagonalized_field.coefficient(1, {2, 0}), WithinRel(s.r211, 1e-12));
}

TEST_CASE("spectrum inequalities and trace/determinant identities", "[mm][property]") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> le(std::log(0.01), std::log(100.0)), ue(0.01, 0.99);
  for (int i = 0; i < 1000; ++i) {
    const double eps = std::exp(le(rng)), eta = ue(rng);
    const MMSpectrum s = mm_spectrum(eps, eta);
    CHECK(s.lambda_minus < -1.0);
    CHECK(-1.0 < -eta);
    CHECK(-eta < s.lambda_plus);
    CHECK(s.lambda_plus < 0.0);
    CHECK(s.sigma_minus < 0.0);
    CHECK(1.0 < s.sigma_plus);
    CHECK(s.sigma_plus < 1.0 / (1.0 - eta));
    CHECK(s.kappa > std::max(eps, 1.0 / eps));
    CHECK_THAT(s.lambda_plus * s.lambda_minus, WithinRel(eta / eps, 1e-12));
    CHECK_THAT(s.lambda_plus + s.lambda_minus, WithinRel(-(1.0 + eps) / eps, 1e-12));
  }
}

TEST_CASE("sigma recursion", "[mm]") {
  const SigmaSequence seq = sigma_recursion(1.0, 0.5, 6);
  CHECK(seq.sigma[0] == 0.0);
  CHECK_THAT(seq.sigma[1], WithinRel(std::sqrt(2.0), 1e-14));
  CHECK_FALSE(seq.pole_index);
  // Denominator is lambda_+ (n - kappa): at n = 2, sqrt(2) * 3/2 - 1.
  CHECK_THAT(seq.denominators[2], WithinRel(1.5 * std::sqrt(2.0) - 1.0, 1e-13));

  const SigmaSequence res = sigma_recursion(1.0, 8.0 / 9.0, 6);
  REQUIRE(res.pole_index);
  CHECK(*res.pole_index == 2);
  CHECK(res.sigma.size() == 2);
  CHECK_THAT(*res.log_coefficient, WithinRel(18.0, 1e-12));
}

TEST_CASE("sigma coefficients solve the slow-manifold equation", "[mm][property]") {
  std::mt19937_64 rng(29);
  std::uniform_real_distribution<double> le(std::log(0.1), std::log(10.0)), ue(0.05, 0.95);
  int checked = 0;
  for (int i = 0; i < 60; ++i) {
    const double eps = std::exp(le(rng)), eta = ue(rng);
    const SigmaSequence seq = sigma_recursion(eps, eta, 8);
    if (seq.pole_index) continue;
    const auto r = slow_manifold_residual(seq.sigma, eps, eta, 8);
    double scale = 1.0;
    for (double v : seq.sigma) scale = std::max(scale, std::abs(v));
    for (double v : r) CHECK(std::abs(v) < 1e-10 * scale * scale);
    ++checked;
  }
  CHECK(checked > 40);
}

TEST_CASE("pole log coefficient balances the resonant order", "[mm][property]") {
  // y = sigma_+ x + L x^2 ln x + C x^2: the residual divided by x^2 vanishes as x -> 0.
  const double eps = 1.0, eta = 8.0 / 9.0;
  const SigmaSequence seq = sigma_recursion(eps, eta, 3);
  const double s1 = seq.sigma[1], L = *seq.log_coefficient;
  for (double C : {-2.0, 0.0, 5.0}) {
    double prev = 0.0;
    for (double x : {1e-3, 1e-4, 1e-5}) {
      const double y = s1 * x + L * x * x * std::log(x) + C * x * x;
      const double dy = s1 + L * (2 * x * std::log(x) + x) + 2 * C * x;
      const double res = eps * dy * (-x + (1 - eta + x) * y) - (x - (1 + x) * y);
      const double scaled = std::abs(res) / (x * x);
      if (prev > 0.0) CHECK(scaled < 0.3 * prev);
      prev = scaled;
    }
  }
}

TEST_CASE("expansion templates by case", "[mm]") {
  const MMExpansion two = mm_expansion(1.0, 8.0 / 9.0);
  REQUIRE(two.templates.size() == 1);
  const MMTemplate& t2 = two.templates[0];
  CHECK(t2.kind == MMCase::resonant_two);
  REQUIRE(t2.terms.size() == 3);
  CHECK_THAT(*t2.terms[0].coeff, WithinRel(3.0, 1e-13));
  CHECK(t2.terms[1].logpow == 1);
  CHECK_THAT(*t2.terms[1].coeff, WithinRel(18.0, 1e-12));
  CHECK_FALSE(t2.terms[2].coeff);

  const MMExpansion gen = mm_expansion(1.0, 0.5);
  const MMTemplate& tg = gen.templates[0];
  CHECK(tg.kind == MMCase::non_integer);
  REQUIRE(tg.terms.size() == 6);
  for (int n = 1; n <= 5; ++n) CHECK(tg.terms[n - 1].power == n);
  CHECK_THAT(tg.terms[5].power, WithinRel(3.0 + 2.0 * std::sqrt(2.0), 1e-14));
  for (const auto& t : tg.terms) CHECK(t.logpow == 0);
}

TEST_CASE("near-integer kappa reports both templates", "[mm]") {
  // kappa = 2 + d: solve for eta at eps = 1 from kappa (1+1)^2 / ... numerically.
  const double eps = 1.0;
  double lo = 0.5, hi = 0.99;
  const double target = 2.0 + 1e-4;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (mm_spectrum(eps, mid).kappa > target ? lo : hi) = mid;
  }
  const MMExpansion e = mm_expansion(eps, 0.5 * (lo + hi));
  REQUIRE(e.templates.size() == 2);
  CHECK(e.templates[0].kind == MMCase::non_integer);
  CHECK(e.templates[1].kind == MMCase::resonant_two);
  CHECK_FALSE(e.warnings.empty());
}

TEST_CASE("integer kappa = 3 expansion carries a logarithm", "[mm]") {
  double lo = 0.5, hi = 0.99;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (mm_spectrum(1.0, mid).kappa > 3.0 ? lo : hi) = mid;
  }
  const MMExpansion e = mm_expansion(1.0, 0.5 * (lo + hi));
  REQUIRE(e.sigma.pole_index);
  CHECK(*e.sigma.pole_index == 3);
  const MMTemplate& t = e.templates[0];
  CHECK(t.kind == MMCase::resonant_higher);
  // sigma_1, sigma_2, log term, C.
  REQUIRE(t.terms.size() == 4);
  CHECK(t.terms[2].logpow == 1);
  CHECK(std::abs(*t.terms[2].coeff) > 1e-3);
}

TEST_CASE("rate laws", "[mm]") {
  const double sp = 3.0;
  CHECK(rate_laws(0.0, sp).qssa == 0.0);
  CHECK(rate_laws(0.0, sp).alpha == 0.0);
  CHECK(rate_laws(1.0, sp).qssa == 0.5);
  for (double x : {1e-3, 0.1, 1.0, 10.0}) CHECK(rate_laws(x, sp).qssa < rate_laws(x, sp).alpha);
  CHECK_THROWS_AS(rate_laws(-1.0, sp), Error);
}

TEST_CASE("slow manifold lies between the isoclines", "[mm][property]") {
  for (double eta : {0.3, 8.0 / 9.0, 0.95}) {
    const SinkSystem sys = mm_system(1.0, eta);
    const MMSpectrum s = mm_spectrum(1.0, eta);
    OdeOptions opt;
    opt.ball = 10.0;
    const auto traj = integrate<double>(sys, {4.0, 0.0}, 60.0, opt);
    int checked = 0;
    for (std::size_t i = 0; i < traj.times.size(); ++i) {
      const double x = traj.states[i][0], y = traj.states[i][1];
      if (x > 1.0 || x < 1e-6) continue;
      const RateLaws r = rate_laws(x, s.sigma_plus);
      CHECK(r.qssa < y);
      CHECK(y < r.alpha);
      ++checked;
    }
    CHECK(checked > 10);
  }
}

TEST_CASE("rate-law error classes", "[mm]") {
  for (double eta : {0.3, 8.0 / 9.0, 0.95}) {
    const RateLawReport rep = rate_law_errors(1.0, eta, {0.2, 0.0});
    INFO("eta " << eta << " note " << rep.note << " qssa " << rep.qssa.str() << " alpha " << rep.alpha.str());
    REQUIRE(rep.conclusive);
    CHECK(rep.alpha.rate < rep.qssa.rate - 0.5 * std::abs(rep.spectrum.lambda_plus));
    CHECK_THAT(rep.qssa.rate, WithinRel(rep.spectrum.lambda_plus, 0.05));
    CHECK(rep.class_matches());
  }
}

TEST_CASE("iterate relation reproduces the sigma coefficients", "[mm][relate]") {
  for (double eta : {0.3, 0.5, 0.7}) {
    const SinkSystem sys = mm_system(1.0, eta);
    const MMSpectrum sp = mm_spectrum(1.0, eta);
    const int N = std::min(5, static_cast<int>(std::floor(sp.kappa)));
    const RelationSeries rel = relate_series(sys, N);
    const SigmaSequence seq = sigma_recursion(1.0, eta, N);
    for (int n = 1; n <= N; ++n) {
      CHECK_THAT(rel.coefficient(n, 0, {0.1, 0.01}), WithinRel(seq.sigma[n], 1e-8));
      CHECK_FALSE(rel.find(n, 0)->ic_dependent);
    }
  }
  const RelationSeries two = relate_via_basis(mm_system(1.0, 8.0 / 9.0));
  CHECK_THAT(two.coefficient(2, 1, {0.1, 0.0}), WithinRel(18.0, 1e-10));
}

TEST_CASE("dimensional reconstruction", "[mm]") {
  const MMScaling sc = nondimensionalize({2.0, 1.0, 0.5, 0.3});
  const SinkSystem sys = mm_system(sc.eps, sc.eta);
  const auto traj = integrate<double>(sys, {0.2, 0.0}, 20.0);
  const auto st = to_dimensional(sc, 20.0, traj.states.back()[0], traj.states.back()[1]);
  CHECK_THAT(st.c + st.e, WithinRel(0.3, 1e-14));
  CHECK_THAT(st.tau, WithinRel(20.0 / (2.0 * 0.3), 1e-14));
  // Substrate lost = product formed + complex present (s + c + p conserved).
  const double p = product_formed(sc, traj, 20.0);
  const double s0 = 0.2 * sc.substrate_scale;
  CHECK_THAT(s0, WithinRel(st.s + st.c + p, 1e-7));
}
