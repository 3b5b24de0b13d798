#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "sinkasym/iterates.hpp"

using namespace sinkasym;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

bool poly_close(const ParamPoly& a, const ParamPoly& b, double rel = 1e-12) {
  const ParamPoly d = a - b;
  const double scale = std::max({a.max_abs_coefficient(), b.max_abs_coefficient(), 1e-300});
  return d.max_abs_coefficient() <= rel * scale;
}

bool series_close(const ExpSeries& a, const ExpSeries& b, double rel = 1e-12) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto& x = a.terms()[i];
    const auto& y = b.terms()[i];
    if (!x.rate.same_rate(y.rate) || x.tpow != y.tpow) return false;
    if (!poly_close(x.coeff, y.coeff, rel)) return false;
  }
  return true;
}

SinkSystem star_node(double a = -1.0) {
  return build_system(diag_matrix({a, a}),
                      make_field({{{1.0, {2, 0}}, {8.0, {1, 1}}, {1.0, {0, 2}}},
                                  {{8.0, {2, 0}}, {1.0, {1, 1}}, {8.0, {0, 2}}}}));
}

SinkSystem cubic_example() {
  return build_system(diag_matrix({-1.0, -2.0}), make_field({{}, {{1.0, {3, 0}}}}));
}

// Generic quadratic field on diag(a, kappa a).
SinkSystem wide_quadratic(double a, double kappa, const std::vector<double>& c) {
  return build_system(diag_matrix({a, kappa * a}),
                      make_field({{{c[0], {2, 0}}, {c[1], {1, 1}}, {c[2], {0, 2}}},
                                  {{c[3], {2, 0}}, {c[4], {1, 1}}, {c[5], {0, 2}}}}));
}

ParamPoly y(std::size_t i, std::size_t n = 2) { return ParamPoly::variable(n, i); }

}  // namespace

TEST_CASE("star node second iterate", "[iterates]") {
  for (double a : {-1.0, -0.7}) {
    const SinkSystem sys = star_node(a);
    const IterateSet its = iterate_closely(sys, 3);
    const auto& D2 = its.D(2);
    const ParamPoly b1 = y(0) * y(0) + y(0) * y(1) * 8.0 + y(1) * y(1);
    const ParamPoly b2 = y(0) * y(0) * 8.0 + y(0) * y(1) + y(1) * y(1) * 8.0;
    auto basis = sys.basis();
    const ExpSeries e1 = ExpSeries::exponential(basis, 0, y(0)) +
                         ExpSeries::from_terms(basis, 2,
                                               {ExpTerm{b1 * (1.0 / a), 0,
                                                        RateCombo::make(*basis, {2, 0})}});
    const ExpSeries e2 = ExpSeries::exponential(basis, 1, y(1)) +
                         ExpSeries::from_terms(basis, 2,
                                               {ExpTerm{b2 * (1.0 / a), 0,
                                                        RateCombo::make(*basis, {2, 0})}});
    CHECK(series_close(D2[0], e1));
    CHECK(series_close(D2[1], e2));
    // At t = 0 the iterate is y0 + b(y0)/a.
    const std::vector<double> p{0.3, -0.2};
    CHECK_THAT(D2[0].eval(0.0, p), WithinRel(0.3 + b1.eval(p) / a, 1e-14));
  }
}

TEST_CASE("zero field iterates are the linear flow", "[iterates]") {
  const SinkSystem sys = build_system(diag_matrix({-1.0, -1.5}), PolyVectorField::zero(2));
  const IterateSet its = iterate_closely(sys, 5);
  for (int m = 1; m <= 5; ++m) {
    REQUIRE(its.D(m)[0].size() == 1);
    CHECK(its.D(m)[0].terms()[0].coeff == y(0));
    CHECK(its.D(m)[1].terms()[0].coeff == y(1));
  }
}

TEST_CASE("cubic example keeps the first component linear", "[iterates]") {
  const IterateSet its = iterate_closely(cubic_example(), 5);
  for (int m = 1; m <= 5; ++m) {
    REQUIRE(its.D(m)[0].size() == 1);
    CHECK(its.D(m)[0].terms()[0].coeff == y(0));
    CHECK(its.D(m)[0].terms()[0].rate.value == -1.0);
  }
}

TEST_CASE("widely-spaced kappa = 2 second iterate", "[iterates]") {
  const double a = -0.8;
  const std::vector<double> c{0.3, -0.4, 0.2, 1.7, 0.5, -0.6};
  const SinkSystem sys = wide_quadratic(a, 2.0, c);
  const IterateSet its = iterate_widely_2d(sys, 4);
  CHECK(its.plan.p == 2);
  CHECK(its.D(1)[1].is_zero());
  const auto& D2 = its.D(2);
  auto basis = sys.basis();
  const ExpSeries e1 = ExpSeries::exponential(basis, 0, y(0)) +
                       ExpSeries::from_terms(basis, 2,
                                             {ExpTerm{y(0) * y(0) * (c[0] / a), 0,
                                                      RateCombo::make(*basis, {2, 0})}});
  const ExpSeries e2 = ExpSeries::exponential(basis, 1, y(1)) +
                       ExpSeries::from_terms(basis, 2,
                                             {ExpTerm{y(0) * y(0) * c[3], 1,
                                                      RateCombo::unit(*basis, 1)}});
  CHECK(series_close(D2[0], e1));
  CHECK(series_close(D2[1], e2));
}

TEST_CASE("widely-spaced kappa >= 3 second iterate", "[iterates]") {
  const double a = -0.5;
  const std::vector<double> c{0.3, -0.4, 0.2, 1.7, 0.5, -0.6};
  for (double kappa : {3.0, 4.0, 5.0}) {
    const SinkSystem sys = wide_quadratic(a, kappa, c);
    const IterateSet its = iterate_widely_2d(sys, 3);
    CHECK(its.plan.p == static_cast<int>(kappa));
    const ExpSeries& f = its.D(2)[1];
    REQUIRE(f.size() == 2);
    const double coef = c[3] / ((2.0 - kappa) * a);
    CHECK_THAT(f.terms()[0].coeff.coefficient({2, 0}), WithinRel(coef, 1e-14));
    CHECK(f.terms()[0].rate.value == 2 * a);
    CHECK_THAT(f.terms()[1].coeff.coefficient({2, 0}), WithinRel(-coef, 1e-14));
    CHECK(f.terms()[1].rate.value == kappa * a);
  }
}

TEST_CASE("widely-spaced zero field", "[iterates]") {
  const SinkSystem sys = build_system(diag_matrix({-1.0, -3.0}), PolyVectorField::zero(2));
  const IterateSet its = iterate_widely_2d(sys, 5);
  for (int m = 1; m <= 5; ++m) {
    CHECK(its.D(m)[0].terms().at(0).coeff == y(0));
    if (m < its.plan.p) {
      CHECK(its.D(m)[1].is_zero());
    } else {
      REQUIRE(its.D(m)[1].size() == 1);
      CHECK(its.D(m)[1].terms()[0].coeff == y(1));
    }
  }
}

TEST_CASE("wide plan thresholds", "[iterates]") {
  const auto quad = make_field({{{1.0, {2, 0}}}, {{1.0, {2, 0}}}});
  CHECK(plan_wide(analyze(diag_matrix({-1.0, -2.0})), quad).p == 2);
  CHECK(plan_wide(analyze(diag_matrix({-1.0, -5.0})), quad).p == 5);
  // Michaelis-Menten at eps=1, eta=1/2: kappa = (2+sqrt 2)/(2-sqrt 2) = 3+2 sqrt 2.
  Eigen::MatrixXd A(2, 2);
  A << -1.0, 0.5, 1.0, -1.0;
  const Spectrum s = analyze(A);
  CHECK_THAT(s.kappa, WithinRel(3.0 + 2.0 * std::sqrt(2.0), 1e-12));
  const WidePlan plan = plan_wide(s, quad);
  CHECK(plan.p == 5);
  CHECK(quad.alpha() + (plan.p - 2) * quad.beta() <= s.kappa);
  CHECK(s.kappa < quad.alpha() + (plan.p - 1) * quad.beta());
  CHECK_THROWS_AS(plan_wide(analyze(diag_matrix({-1.0, -1.5})), quad), Error);
}

TEST_CASE("n-D plan with a repeated slow eigenvalue", "[iterates]") {
  const auto b = make_field({{{1.0, {2, 0, 0}}}, {{1.0, {1, 1, 0}}}, {{1.0, {2, 0, 0}}}});
  const SinkSystem sys = build_system(diag_matrix({-1.0, -1.0, -4.0}), b);
  const WidePlan plan = plan_wide(sys.spectrum, sys.b);
  CHECK(plan.ell == 2);
  CHECK(plan.j0 == 1);
  CHECK(plan.p_j == std::vector<int>{1, 4});
  const IterateSet its = iterate_nd_diag(sys, plan, 5);
  CHECK(its.D(1)[2].is_zero());
  CHECK_FALSE(its.D(1)[0].is_zero());
  CHECK_FALSE(its.D(1)[1].is_zero());
  for (int m = 1; m < 4; ++m) {
    for (const auto& c : its.D(m)) CHECK_FALSE(c.depends_on_param(2));
  }
  CHECK(its.D(4)[2].depends_on_param(2));
}

TEST_CASE("n-D iterates reduce to the 2-D construction", "[iterates]") {
  const std::vector<double> c{0.3, -0.4, 0.2, 1.7, 0.5, -0.6};
  for (double kappa : {2.0, 3.0, 3.5}) {
    const SinkSystem sys = wide_quadratic(-1.0, kappa, c);
    const IterateSet two = iterate_widely_2d(sys, 5);
    const IterateSet nd = iterate_nd_diag(sys, plan_wide(sys.spectrum, sys.b), 5);
    for (int m = 1; m <= 5; ++m) {
      CHECK(series_close(two.D(m)[0], nd.D(m)[0]));
      CHECK(series_close(two.D(m)[1], nd.D(m)[1]));
    }
  }
}

TEST_CASE("regime and shape errors", "[iterates]") {
  const std::vector<double> c{0.3, -0.4, 0.2, 1.7, 0.5, -0.6};
  CHECK_THROWS_AS(iterate_closely(wide_quadratic(-1.0, 2.0, c), 3), Error);
  CHECK_THROWS_AS(iterate_widely_2d(star_node(), 3), Error);
  const auto b3 = make_field({{{1.0, {2, 0, 0}}}, {}, {}});
  CHECK_THROWS_AS(iterate_widely_2d(build_system(diag_matrix({-1, -3, -4}), b3), 3), Error);
  CHECK_THROWS_AS(iterate_closely(star_node(), 0), Error);
}

TEST_CASE("guaranteed orders", "[iterates]") {
  WidePlan plan;
  plan.p = 3;
  CHECK(guaranteed_order(Regime::closely, 3, plan, 2, 1) == std::pair<double, double>{4, 4});
  CHECK(guaranteed_order(Regime::widely_2d, 1, plan, 2, 1) == std::pair<double, double>{2, 1});
  CHECK(guaranteed_order(Regime::widely_2d, 3, plan, 2, 1) == std::pair<double, double>{4, 2});
  CHECK(guaranteed_order(Regime::widely_nd, 1, plan, 2, 1) == std::pair<double, double>{2, 1});
  CHECK(guaranteed_order(Regime::widely_nd, 5, plan, 2, 1) == std::pair<double, double>{6, 4});
  CHECK_THROWS_AS(guaranteed_order(Regime::closely, 0, plan, 2, 1), Error);
}

TEST_CASE("psi for the cubic example is exact after one step", "[iterates][psi]") {
  const PsiApprox psi = psi_closely(cubic_example(), 5);
  CHECK(psi.psi(1)[0] == y(0));
  CHECK(psi.psi(1)[1] == y(1));
  for (int m = 2; m <= 5; ++m) {
    CHECK(psi.psi(m)[0] == y(0));
    CHECK(poly_close(psi.psi(m)[1], y(1) + y(0) * y(0) * y(0)));
  }
}

TEST_CASE("psi of the star node", "[iterates][psi]") {
  const double a = -0.6;
  const SinkSystem sys = star_node(a);
  const PsiApprox psi = psi_closely(sys, 3);
  const ParamPoly b1 = y(0) * y(0) + y(0) * y(1) * 8.0 + y(1) * y(1);
  CHECK(poly_close(psi.psi(2)[0], y(0) - b1 * (1.0 / a)));
  CHECK(psi.psi(3)[0].max_degree() <= 3);
}

TEST_CASE("psi of the zero field is the identity", "[iterates][psi]") {
  const PsiApprox c = psi_closely(build_system(diag_matrix({-1, -1.5}), PolyVectorField::zero(2)), 4);
  const PsiApprox w = build_psi(build_system(diag_matrix({-1, -3}), PolyVectorField::zero(2)), 4);
  for (int m = 1; m <= 4; ++m) {
    CHECK(c.psi(m)[1] == y(1));
    CHECK(w.psi(m)[0] == y(0));
    CHECK(w.psi(m)[1] == y(1));
  }
}

TEST_CASE("psi corrections vanish to order min(alpha, beta+1)", "[iterates][psi][property]") {
  const std::vector<double> c{0.3, -0.4, 0.2, 1.7, 0.5, -0.6};
  for (const SinkSystem& sys : {star_node(), cubic_example(), wide_quadratic(-1.0, 2.0, c),
                                wide_quadratic(-1.0, 3.0, c), wide_quadratic(-0.5, 3.5, c)}) {
    const PsiApprox psi = build_psi(sys, 4);
    const int low = std::min(sys.alpha(), sys.beta() + 1);
    for (int m = 1; m <= 4; ++m) {
      for (std::size_t j = 0; j < sys.dim(); ++j) {
        const ParamPoly corr = psi.psi(m)[j] - y(j);
        if (!corr.is_zero()) CHECK(corr.min_degree() >= low);
      }
    }
  }
}

namespace {

std::vector<SinkSystem> property_systems(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  auto coeffs = [&] {
    std::vector<double> c(6);
    for (auto& x : c) x = u(rng);
    return c;
  };
  std::vector<SinkSystem> out;
  out.push_back(star_node());
  out.push_back(cubic_example());
  out.push_back(wide_quadratic(-1.0, 1.5, coeffs()));
  out.push_back(wide_quadratic(-0.7, 1.0, coeffs()));
  out.push_back(build_system(diag_matrix({-1.0, -2.5}),
                             make_field({{{u(rng), {3, 0}}, {u(rng), {1, 2}}},
                                         {{u(rng), {3, 0}}, {u(rng), {0, 3}}}})));
  return out;
}

std::vector<SinkSystem> wide_systems(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<SinkSystem> out;
  for (double kappa : {2.0, 3.0, 2.5, 4.0}) {
    std::vector<double> c(6);
    for (auto& x : c) x = u(rng);
    out.push_back(wide_quadratic(-1.0, kappa, c));
  }
  return out;
}

}  // namespace

TEST_CASE("iterate terms all decay", "[iterates][property]") {
  std::mt19937_64 rng(5);
  auto systems = property_systems(rng);
  for (const auto& s : wide_systems(rng)) systems.push_back(s);
  for (const auto& sys : systems) {
    const IterateSet its = build_iterates(sys, 5);
    for (int m = 1; m <= 5; ++m) {
      for (const auto& comp : its.D(m)) {
        for (const auto& t : comp.terms()) CHECK(t.rate.value < 0.0);
      }
    }
  }
}

TEST_CASE("monotone refinement", "[iterates][property]") {
  std::mt19937_64 rng(17);
  auto systems = property_systems(rng);
  for (const auto& s : wide_systems(rng)) systems.push_back(s);
  for (const auto& sys : systems) {
    const IterateSet its = build_iterates(sys, 5);
    for (int m = 1; m < 5; ++m) {
      for (std::size_t j = 0; j < sys.dim(); ++j) {
        const ExpSeries next = truncate(its.D(m + 1)[j], its.rate_threshold(m), Boundary::drop);
        CHECK(series_close(its.D_simplified(m)[j], next, 1e-10));
      }
    }
  }
}

TEST_CASE("first iterate group ignores the fast initial value", "[iterates][property]") {
  std::mt19937_64 rng(23);
  for (const auto& sys : wide_systems(rng)) {
    const IterateSet its = iterate_widely_2d(sys, 5);
    for (int m = 1; m < its.plan.p; ++m) {
      CHECK_FALSE(its.D(m)[0].depends_on_param(1));
      CHECK_FALSE(its.D(m)[1].depends_on_param(1));
    }
  }
}

TEST_CASE("truncating the field does not change retained terms", "[iterates][property]") {
  std::mt19937_64 rng(29);
  auto systems = property_systems(rng);
  for (const auto& s : wide_systems(rng)) systems.push_back(s);
  // A field with degrees 2..4 so the Taylor truncation actually bites.
  systems.push_back(build_system(diag_matrix({-1.0, -1.2}),
                                 make_field({{{1.0, {2, 0}}, {0.5, {2, 2}}, {-0.3, {4, 0}}},
                                             {{-1.0, {1, 1}}, {0.7, {3, 0}}}})));
  for (const auto& sys : systems) {
    const Regime r = sys.classification == Spacing::closely ? Regime::closely : Regime::widely_2d;
    const SinkSystem d = sys.diagonal_form();
    const WidePlan plan = plan_blocks(d.spectrum, d.b);
    const IterateSet full = detail::build_iterates(d, plan, r, 5, {false});
    const IterateSet trunc = detail::build_iterates(d, plan, r, 5, {true});
    for (int m = 1; m <= 5; ++m) {
      for (std::size_t j = 0; j < sys.dim(); ++j) {
        CHECK(series_close(full.D_simplified(m)[j], trunc.D_simplified(m)[j], 1e-10));
      }
    }
  }
}

TEST_CASE("iterate defect decays at the guaranteed rate", "[iterates][property]") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  std::uniform_real_distribution<double> tt(0.5, 3.0);
  auto systems = property_systems(rng);
  for (const auto& sys : systems) {
    const SinkSystem d = sys.diagonal_form();
    const IterateSet its = build_iterates(d, 4);
    for (int m = 1; m <= 4; ++m) {
      const auto& D = its.D_simplified(m);
      const auto field = detail::apply_field(d.b, D, d.basis());
      for (std::size_t j = 0; j < d.dim(); ++j) {
        const ExpSeries R = differentiate(D[j]) - D[j] * d.spectrum.eigenvalues[j] - field[j];
        // Symbolic residual agrees with a finite-difference residual.
        const std::vector<double> p{u(rng), u(rng)};
        const double t = tt(rng), h = 1e-5;
        const double fd = (D[j].eval(t + h, p) - D[j].eval(t - h, p)) / (2 * h);
        std::vector<double> x;
        for (const auto& c : D) x.push_back(c.eval(t, p));
        const double numeric = fd - d.spectrum.eigenvalues[j] * x[j] -
                               d.b.component(j).eval(std::span<const double>(x));
        CHECK_THAT(R.eval(t, p), WithinAbs(numeric, 1e-8));
        CHECK(R.leading_rate() <= its.rate_threshold(m) + 1e-9);
      }
    }
  }
}
