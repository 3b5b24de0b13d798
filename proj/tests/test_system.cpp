#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "sinkasym/system.hpp"

using namespace sinkasym;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

// Michaelis-Menten linear part in (substrate, complex) coordinates.
Eigen::MatrixXd mm_matrix(double eps, double eta) {
  Eigen::MatrixXd A(2, 2);
  A << -1.0, 1.0 - eta, 1.0 / eps, -1.0 / eps;
  return A;
}

}  // namespace

TEST_CASE("star node spectrum", "[system]") {
  const Spectrum s = analyze(diag_matrix({-1.0, -1.0}));
  CHECK(s.eigenvalues == std::vector<double>{-1.0, -1.0});
  CHECK(s.kappa == 1.0);
  CHECK(s.P.isIdentity());
  CHECK(s.resonances.empty());
}

TEST_CASE("diag(-1,-2) has the 2:1 resonance", "[system]") {
  const Spectrum s = analyze(diag_matrix({-1.0, -2.0}));
  CHECK(s.kappa == 2.0);
  REQUIRE_FALSE(s.resonances.empty());
  const Resonance& r = s.resonances.front();
  CHECK(r.m == std::vector<int>{2, 0});
  CHECK(r.j == 1);
  CHECK(r.order == 2);
}

TEST_CASE("diagonal input is sorted slowest first", "[system]") {
  const Spectrum s = analyze(diag_matrix({-3.0, -1.0, -2.0}));
  CHECK(s.eigenvalues == std::vector<double>{-1.0, -2.0, -3.0});
  Eigen::MatrixXd L = diag_matrix(s.eigenvalues);
  CHECK((s.P * L * s.Pinv - diag_matrix({-3.0, -1.0, -2.0})).norm() < 1e-14);
}

TEST_CASE("Michaelis-Menten spectrum at eta = 8/9", "[system]") {
  const double eps = 1.0, eta = 8.0 / 9.0;
  // Independent oracle: roots of lambda^2 + tr*lambda + det with tr=(1+eps)/eps, det=eta/eps.
  const double tr = (1 + eps) / eps, det = eta / eps;
  const double lp = (-tr + std::sqrt(tr * tr - 4 * det)) / 2;
  const double lm = (-tr - std::sqrt(tr * tr - 4 * det)) / 2;
  CHECK_THAT(lp, WithinRel(-2.0 / 3.0, 1e-14));
  CHECK_THAT(lm, WithinRel(-4.0 / 3.0, 1e-14));
  const Spectrum s = analyze(mm_matrix(eps, eta));
  CHECK_THAT(s.eigenvalues[0], WithinRel(lp, 1e-13));
  CHECK_THAT(s.eigenvalues[1], WithinRel(lm, 1e-13));
  CHECK(s.kappa == 2.0);
  REQUIRE(s.kappa_exact);
  REQUIRE_FALSE(s.resonances.empty());
  CHECK(s.resonances.front().m == std::vector<int>{2, 0});
  CHECK(s.P(0, 0) > 0.0);
  Eigen::MatrixXd L = diag_matrix(s.eigenvalues);
  CHECK((s.P * L * s.Pinv - mm_matrix(eps, eta)).norm() < 1e-12);
}

TEST_CASE("analyze rejects unsupported matrices", "[system]") {
  Eigen::MatrixXd rot(2, 2);
  rot << -1.0, 2.0, -2.0, -1.0;
  auto kind_of = [](const Eigen::MatrixXd& A) {
    try {
      analyze(A);
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::input;
  };
  CHECK(kind_of(rot) == ErrorKind::unsupported_spectrum);
  CHECK(kind_of(diag_matrix({-1.0, 0.5})) == ErrorKind::not_a_sink);
  Eigen::MatrixXd jordan(2, 2);
  jordan << -1.0, 1.0, 0.0, -1.0;
  CHECK(kind_of(jordan) == ErrorKind::non_diagonalizable);
  Eigen::MatrixXd full3 = diag_matrix({-1.0, -2.0, -3.0});
  full3(0, 2) = 0.5;
  CHECK(kind_of(full3) == ErrorKind::unsupported_shape);
}

TEST_CASE("classification compares kappa with alpha", "[system]") {
  const auto quad = make_field({{{1.0, {2, 0}}}, {}});
  const auto cubic = make_field({{}, {{1.0, {3, 0}}}});
  CHECK(classify(analyze(diag_matrix({-1, -1})), quad) == Spacing::closely);
  CHECK(classify(analyze(diag_matrix({-1, -2})), cubic) == Spacing::closely);
  CHECK(classify(analyze(diag_matrix({-1, -2})), quad) == Spacing::widely);
  CHECK(cubic.alpha() == 3);
  CHECK(cubic.beta() == 2);
  CHECK(PolyVectorField::zero(2).alpha() == 2);
}

TEST_CASE("field validation", "[system]") {
  CHECK_THROWS_AS(make_field({{{1.0, {1, 0}}}, {}}), Error);
  CHECK_THROWS_AS(make_field({{{1.0, {2}}}, {}}), Error);
}

TEST_CASE("resonances among a three-rate diagonal spectrum", "[system]") {
  const Spectrum s = analyze(diag_matrix({-2.0 / 3.0, -4.0 / 3.0}));
  REQUIRE(s.resonances.size() == 1);
  CHECK(s.resonances[0].m == std::vector<int>{2, 0});

  // Brute-force oracle over exact integer multiples of 1/3.
  const Spectrum t = analyze(diag_matrix({-1.0, -2.0, -3.0}));
  const std::vector<int> ev{1, 2, 3};
  int expected = 0;
  for (int a = 0; a <= 4; ++a)
    for (int b = 0; b <= 4 - a; ++b)
      for (int c = 0; c <= 4 - a - b; ++c) {
        if (a + b + c < 2) continue;
        for (int j : ev) expected += (a * 1 + b * 2 + c * 3 == j) ? 1 : 0;
      }
  CHECK(static_cast<int>(detect_resonance(t, 4).size()) == expected);
  for (const auto& r : detect_resonance(t, 4)) {
    CHECK(-1.0 * r.m[0] - 2.0 * r.m[1] - 3.0 * r.m[2] == t.eigenvalues[r.j]);
  }
}

TEST_CASE("irrational ratios are never resonant", "[system]") {
  std::vector<std::string> warnings;
  Spectrum s = analyze(diag_matrix({-1.0, -2.0 - 1e-8}));
  CHECK(s.resonances.empty());
  CHECK_FALSE(s.warnings.empty());
}

TEST_CASE("diagonalized field reproduces Pinv b(P u)", "[system][property]") {
  const double eps = 1.0, eta = 0.5;
  // MM nonlinearity: b = (x1 x2, -x1 x2 / eps)
  const auto b = make_field({{{1.0, {1, 1}}}, {{-1.0 / eps, {1, 1}}}});
  const SinkSystem sys = build_system(mm_matrix(eps, eta), b);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 10; ++i) {
    Eigen::Vector2d uu(u(rng), u(rng));
    Eigen::Vector2d x = sys.spectrum.P * uu;
    const std::vector<double> xv{x(0), x(1)}, uv{uu(0), uu(1)};
    const auto bx = b.eval(std::span<const double>(xv));
    Eigen::Vector2d expect = sys.spectrum.Pinv * Eigen::Vector2d(bx[0], bx[1]);
    const auto r = sys.diagonalized_field.eval(std::span<const double>(uv));
    CHECK_THAT(r[0], WithinAbs(expect(0), 1e-10 * std::max(1.0, std::abs(expect(0)))));
    CHECK_THAT(r[1], WithinAbs(expect(1), 1e-10 * std::max(1.0, std::abs(expect(1)))));
  }
}

TEST_CASE("kappa >= alpha always classifies as widely spaced", "[system][property]") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> mu(-3.0, -0.2);
  std::uniform_real_distribution<double> ratio(1.0, 6.0);
  std::uniform_int_distribution<int> deg(2, 5);
  for (int i = 0; i < 100; ++i) {
    const double l1 = mu(rng);
    const double l2 = l1 * ratio(rng);
    const int d = deg(rng);
    const auto b = make_field({{{1.0, {d, 0}}}, {{0.5, {0, d}}}});
    const Spectrum s = analyze(diag_matrix({l1, l2}));
    CHECK(s.kappa >= 1.0);
    if (s.kappa >= d) CHECK(classify(s, b) == Spacing::widely);
    if (s.kappa < d) CHECK(classify(s, b) == Spacing::closely);
  }
}

TEST_CASE("linear flow norms on a diagonal spectrum", "[system]") {
  const std::vector<double> ev{-0.5, -1.25, -2.0};
  const double kappa = ev.back() / ev.front();
  for (double t : {0.0, 1.0, 5.0}) {
    Eigen::MatrixXd E = Eigen::MatrixXd::Zero(3, 3), Einv = Eigen::MatrixXd::Zero(3, 3);
    for (int i = 0; i < 3; ++i) {
      E(i, i) = std::exp(ev[i] * t);
      Einv(i, i) = std::exp(-ev[i] * t);
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> s1(E), s2(Einv);
    CHECK_THAT(s1.singularValues()(0), WithinRel(std::exp(ev.front() * t), 1e-14));
    CHECK_THAT(s2.singularValues()(0), WithinRel(std::exp(-kappa * ev.front() * t), 1e-14));
  }
}
