#include "oracles.hpp"

#include "nodal/errors.hpp"
#include "nodal/problem_model.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace nodal;

TEST_CASE("primitive matches quadrature and the p=3, q=6 closed form") {
  const auto nl = Nonlinearity::double_power(3, 6, 6, 3);
  for (double s : {1e-4, 0.01, 0.3, 0.9, 1.0, 1.1, 2.5, 10.0, 1e3}) {
    const double closed = (s * s * s - std::log1p(s * s * s)) / 3.0;
    CHECK(nl.primitive(s) == doctest::Approx(closed).epsilon(1e-12));
    CHECK(nl.primitive(s) == doctest::Approx(oracle::primitive_by_quadrature(nl, s)).epsilon(1e-11));
    CHECK(nl.primitive(-s) == nl.primitive(s));
    CHECK(nl.value(-s) == -nl.value(s));
  }
  // Non-integer exponent ratio exercises the general series branch.
  const auto odd = Nonlinearity::double_power(2.7, 5.3, 6, 2.5);
  for (double s : {1e-3, 0.5, 1.0, 1.7, 40.0, 1e4})
    CHECK(odd.primitive(s) == doctest::Approx(oracle::primitive_by_quadrature(odd, s)).epsilon(1e-10));
}

TEST_CASE("derivative agrees with central differences") {
  const auto nl = Nonlinearity::double_power(3, 6, 6, 3);
  for (double s : {0.05, 0.7, 1.0, 3.0, 50.0}) {
    const double h = 1e-6 * s;
    const double fd = (nl.value(s + h) - nl.value(s - h)) / (2 * h);
    CHECK(nl.derivative(s) == doctest::Approx(fd).epsilon(1e-7));
    CHECK(nl.eval(s, 1) == nl.derivative(s));
    CHECK(nl.eval(s, -1) == nl.primitive(s));
  }
  CHECK_THROWS_AS(nl.eval(std::nan(""), 0), DomainError);
}

TEST_CASE("parameter validation") {
  CHECK_THROWS_AS(Nonlinearity::double_power(2, 6, 6, 3), ConfigError);
  CHECK_THROWS_AS(Nonlinearity::double_power(4, 3, 6, 3), ConfigError);
  CHECK_THROWS_AS(Nonlinearity::double_power(3, 6, 6, 2), ConfigError);
}

TEST_CASE("hypothesis checkers on the default nonlinearity") {
  const auto grid = log_sample_grid();
  const auto nl = Nonlinearity::double_power(3, 6, 6, 3);
  const auto f1 = check_growth_f1(nl, 4, grid);
  const auto f2 = check_ar_f2(nl, grid);
  const auto f3 = check_odd_f3(nl, grid);
  CHECK(f1.ok);
  CHECK(f1.margin > 0);
  CHECK(f2.ok);
  CHECK(f2.margin > 0);
  CHECK(f3.ok);
  // Near zero f' ~ (q-1) s^{q-2}, so the envelope needs A1 >= q - 1.
  CHECK_FALSE(check_growth_f1(Nonlinearity::double_power(3, 6, 2, 3), 4, grid).ok);
  CHECK(minimal_growth_amplitude(nl, grid) == doctest::Approx(5.0).epsilon(1e-3));
}

TEST_CASE("critical pure power violates the growth envelope") {
  const auto grid = log_sample_grid();
  const auto crit = Nonlinearity::pure_power(critical_exponent(4), 10, 3);
  const auto r = check_growth_f1(crit, 4, grid);
  CHECK_FALSE(r.ok);
  CHECK(r.margin < 0);
}

TEST_CASE("Sobolev constant closed form against the bubble Rayleigh minimum") {
  for (int N : {3, 4, 5, 6}) {
    const auto m = sobolev_constant_rayleigh(N);
    CHECK(m.value == doctest::Approx(sobolev_constant(N)).epsilon(1e-7));
    CHECK(m.beta == doctest::Approx(0.5 * (N - 2)).epsilon(1e-3));
  }
  CHECK(sobolev_constant(4) == doctest::Approx(8 * std::numbers::pi / std::sqrt(6.0)).epsilon(1e-14));
}

TEST_CASE("V1 check") {
  const double S = sobolev_constant(4);
  SUBCASE("zero potential") {
    const auto r = check_v1(Potential::zero(), 4, 3.0);
    CHECK(r.ok);
    CHECK(r.vminus_integral == 0.0);
  }
  SUBCASE("gaussian integral is exact") {
    const auto r = check_v1(Potential::gaussian(2.0, 1.0), 4, 3.0);
    const double exact = 4.0 * std::numbers::pi * std::numbers::pi / 4.0;
    CHECK(r.vminus_integral == doctest::Approx(exact).epsilon(1e-9));
    CHECK(r.converged);
  }
  SUBCASE("critical depth brackets the analytic threshold") {
    const auto c = critical_gaussian_depth(1.0, 4, 3.0, 5e-5);
    const double exact = 2.0 * S / std::numbers::pi;
    CHECK(c.upper - c.lower < 1e-4);
    CHECK(c.lower <= exact);
    CHECK(c.upper >= exact);
    CHECK(check_v1(Potential::gaussian(c.lower, 1.0), 4, 3.0).ok);
    CHECK_FALSE(check_v1(Potential::gaussian(c.upper, 1.0), 4, 3.0).ok);
  }
  SUBCASE("slow tails diverge") {
    // |V|^{N/2} ~ r^{-4} in R^4 is not integrable.
    const auto v = Potential::table({1.0, 2.0}, {-0.5, -0.25}, 2.0);
    CHECK_THROWS_AS(check_v1(v, 4, 3.0), DivergenceError);
  }
  SUBCASE("fast tails converge") {
    const auto v = Potential::table({1.0, 2.0}, {-0.5, -0.25}, 3.0);
    CHECK(check_v1(v, 4, 3.0).converged);
  }
}

TEST_CASE("reduced coordinates") {
  Eigen::VectorXd x(4);
  x << 0.0, 2.0, 3.0, 4.0;
  const auto p = reduce(x);
  CHECK(p.radius == doctest::Approx(std::sqrt(29.0)));
  CHECK(p.rho == doctest::Approx(2.0));
  CHECK(p.theta == doctest::Approx(0.5 * std::numbers::pi));
  CHECK(p.y_norm == doctest::Approx(5.0));
}
