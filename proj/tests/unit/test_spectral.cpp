#include <catch_amalgamated.hpp>

#include <cmath>
#include <limits>

#include "entryexit/errors.hpp"
#include "entryexit/spectral.hpp"
#include "oracles.hpp"

using namespace entryexit;
using Catch::Matchers::WithinAbs;

namespace {

const char* kBuiltins[] = {"one_way_coupled", "eps_coupled", "nonlinear"};

FastSlowSystem linear_system(Interval dom, Coefficient f1, Coefficient f2, Coefficient g1, Coefficient g2) {
  FastSlowSystem s;
  s.name = "linear";
  s.domain = dom;
  s.jac_f1 = f1;
  s.jac_f2 = f2;
  s.jac_g1 = g1;
  s.jac_g2 = g2;
  s.rhs_z1 = [f1, f2](double x, double z1, double z2, double e) { return f1(x, e) * z1 + f2(x, e) * z2; };
  s.rhs_z2 = [g1, g2](double x, double z1, double z2, double e) { return g1(x, e) * z1 + g2(x, e) * z2; };
  return s;
}

Coefficient constant(double c) {
  return [c](double, double) { return c; };
}

}  // namespace

TEST_CASE("eigenvalues of the builtins", "[spectral]") {
  const auto s = make_builtin("one_way_coupled");
  auto e = eigenvalues_xi(s, -2.0, 0.0);
  CHECK(e.xi_plus == -1.0);
  CHECK(e.xi_minus == -2.0);
  e = eigenvalues_xi(s, -1.0, 0.0);
  CHECK(e.xi_plus == -1.0);
  CHECK(e.xi_minus == -1.0);
  const auto zero = linear_system({-1, 1}, constant(0), constant(0), constant(0), constant(0));
  e = eigenvalues_xi(zero, 0.3, 0.0);
  CHECK(e.xi_plus == 0.0);
  CHECK(e.xi_minus == 0.0);
}

TEST_CASE("complex eigenvalues are rejected", "[spectral]") {
  const auto rot = linear_system({-1, 1}, constant(0), constant(1), constant(-1), constant(0));
  CHECK_THROWS_AS(eigenvalues_xi(rot, 0.0, 0.0), ComplexEigenvalues);
}

TEST_CASE("collision point of the builtins", "[spectral]") {
  for (const char* name : kBuiltins) {
    INFO(name);
    CHECK_THAT(find_x_star(make_builtin(name), 0.0), WithinAbs(-1.0, 1e-9));
  }
}

TEST_CASE("collision point failures", "[spectral]") {
  const auto diag = linear_system({-3, 3}, [](double x, double) { return x - 2; }, constant(0), constant(0),
                                  [](double x, double) { return x + 2; });
  CHECK_THROWS_AS(find_x_star(diag, 0.0), NoCollision);

  const auto twice = linear_system({-2, 2}, [](double x, double) { return x * x; }, constant(0), constant(0),
                                   constant(1));
  try {
    find_x_star(twice, 0.0);
    FAIL("expected UniquenessViolation");
  } catch (const UniquenessViolation& e) {
    REQUIRE(e.candidates().size() == 2);
    CHECK_THAT(e.candidates()[0], WithinAbs(-1.0, 1e-7));
    CHECK_THAT(e.candidates()[1], WithinAbs(1.0, 1e-7));
  }

  // D = x^2 - 1 changes sign twice.
  const auto crossing = linear_system({-2, 2}, [](double x, double) { return x; }, constant(1), constant(-0.25),
                                      constant(0));
  const auto zeros = discriminant_zeros(crossing, 0.0);
  REQUIRE(zeros.size() == 2);
  CHECK_THAT(zeros[0], WithinAbs(-1.0, 1e-12));
  CHECK_THAT(zeros[1], WithinAbs(1.0, 1e-12));
}

TEST_CASE("zeros of the eigenvalue curves", "[spectral]") {
  for (const char* name : {"one_way_coupled", "eps_coupled"}) {
    const auto z = find_eigenvalue_zeros(make_builtin(name));
    REQUIRE(z.x_plus);
    CHECK_THAT(*z.x_plus, WithinAbs(0.0, 1e-12));
    CHECK_FALSE(z.x_minus);
  }
  const auto diag = linear_system({-3, 3}, [](double x, double) { return x - 2; }, constant(0), constant(0),
                                  [](double x, double) { return x + 2; });
  const auto z = find_eigenvalue_zeros(diag);
  REQUIRE(z.x_plus);
  REQUIRE(z.x_minus);
  CHECK_THAT(*z.x_plus, WithinAbs(-2.0, 1e-12));
  CHECK_THAT(*z.x_minus, WithinAbs(2.0, 1e-12));
}

TEST_CASE("geometric multiplicity at the collision", "[spectral]") {
  CHECK(geometric_multiplicity(make_builtin("one_way_coupled"), -1.0, 0.0) == 1);
  CHECK(geometric_multiplicity(make_builtin("eps_coupled"), -1.0, 0.0) == 1);
  CHECK(geometric_multiplicity(make_builtin("nonlinear"), -1.0, 0.0) == 2);
  CHECK_THROWS_AS(geometric_multiplicity(make_builtin("one_way_coupled"), 0.0, 0.0), PreconditionError);
}

TEST_CASE("assumption report", "[spectral]") {
  SECTION("one-way coupling from x0 = -2") {
    const auto p = check_assumptions(make_builtin("one_way_coupled"), -2.0);
    REQUIRE(p.assumption_report);
    const auto& item5 = (*p.assumption_report)[4];
    CHECK(item5.pass);
    REQUIRE(item5.witnesses.size() == 3);
    CHECK(std::isinf(item5.witnesses[0]));
    // integral_{-2}^{s} x dx = 0 at s = 2.
    const double oracle_root = oracle::bisect([](double s) { return 0.5 * (s * s - 4.0); }, 0.0, 3.0);
    CHECK_THAT(item5.witnesses[1], WithinAbs(oracle_root, 1e-9));
    CHECK(p.assumptions_hold());
  }
  SECTION("nonlinear example fails only the multiplicity item") {
    const auto p = check_assumptions(make_builtin("nonlinear"), -2.0);
    for (int i = 0; i < 5; ++i) CHECK((*p.assumption_report)[i].pass);
    CHECK_FALSE((*p.assumption_report)[5].pass);
    CHECK_FALSE(p.assumptions_hold());
  }
  SECTION("entry after the collision is rejected") {
    CHECK_THROWS_AS(check_assumptions(make_builtin("one_way_coupled"), -0.5), PreconditionError);
    CHECK_THROWS_AS(check_assumptions(make_builtin("one_way_coupled"), -7.0), PreconditionError);
  }
  SECTION("failures are verdicts") {
    const auto rot = linear_system({-1, 1}, constant(0), constant(1), constant(-1), constant(0));
    const auto p = check_assumptions(rot, 0.0);
    CHECK_FALSE((*p.assumption_report)[1].pass);
    CHECK_FALSE((*p.assumption_report)[3].pass);
  }
}

TEST_CASE("eigenvalues match trace and determinant", "[spectral][property]") {
  for (const char* name : kBuiltins) {
    const auto s = make_builtin(name);
    for (double eps : {0.0, 0.01, 0.05}) {
      for (int i = 0; i <= 400; ++i) {
        const double x = s.domain.lo + s.domain.span() * i / 400.0;
        const Matrix2 a = s.jacobian(x, eps);
        const auto e = eigenvalues_xi(s, x, eps);
        INFO(name << " x=" << x << " eps=" << eps);
        CHECK(e.xi_plus >= e.xi_minus);
        CHECK(std::abs(e.xi_plus + e.xi_minus - a.trace()) <= 1e-10 * (1 + std::abs(a.trace())));
        CHECK(std::abs(e.xi_plus * e.xi_minus - a.det()) <= 1e-10 * (1 + std::abs(a.det())));
        const auto ref = oracle::eig2(a.f1, a.f2, a.g1, a.g2);
        CHECK_THAT(e.xi_plus, WithinAbs(ref[0], 1e-7));
        CHECK_THAT(e.xi_minus, WithinAbs(ref[1], 1e-7));
      }
    }
  }
}

TEST_CASE("relabelled curves are smooth through the collision", "[spectral][property]") {
  for (const char* name : kBuiltins) {
    const auto s = make_builtin(name);
    const auto p = spectral_profile(s);
    INFO(name);
    for (int i = 0; i <= 200; ++i) {
      const double x = s.domain.lo + s.domain.span() * i / 200.0;
      const auto e = eigenvalues_xi(s, x, 0.0);
      CHECK_THAT(p.mu1(x), WithinAbs(-1.0, 1e-12));
      CHECK_THAT(p.mu2(x), WithinAbs(x, 1e-12));
      if (x < p.x_star) {
        CHECK(p.mu1(x) == e.xi_plus);
      } else if (x > p.x_star) {
        CHECK(p.mu1(x) == e.xi_minus);
      }
      const double lo = std::min(p.mu1(x), p.mu2(x));
      const double hi = std::max(p.mu1(x), p.mu2(x));
      CHECK_THAT(lo, WithinAbs(e.xi_minus, 1e-12));
      CHECK_THAT(hi, WithinAbs(e.xi_plus, 1e-12));
    }
    for (double h : {1e-6, 1e-9}) {
      CHECK_THAT(p.mu1(p.x_star - h), WithinAbs(p.xi_star, 1e-5));
      CHECK_THAT(p.mu1(p.x_star + h), WithinAbs(p.xi_star, 1e-5));
      CHECK_THAT(p.mu2(p.x_star - h), WithinAbs(p.xi_star, 1e-5));
      CHECK_THAT(p.mu2(p.x_star + h), WithinAbs(p.xi_star, 1e-5));
    }
  }
}

TEST_CASE("single-direction balance points", "[spectral]") {
  const auto b = balance_point([](double x) { return x; }, -2.0, 4.0);
  REQUIRE(b);
  CHECK_THAT(*b, WithinAbs(2.0, 1e-10));
  CHECK_FALSE(balance_point([](double) { return -1.0; }, -2.0, 4.0));
  CHECK_FALSE(balance_point([](double x) { return x; }, 0.5, 4.0));
}
