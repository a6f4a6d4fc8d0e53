#include <doctest.h>

#include <cmath>
#include <numbers>

#include "ibf/quadrature.hpp"

using namespace ibf;

TEST_CASE("gauss-legendre rules integrate polynomials of degree 2n-1 exactly") {
  for (int n : {1, 2, 5, 16, 40}) {
    const GaussRule r = gauss_legendre(n);
    REQUIRE(r.nodes.size() == n);
    CHECK(r.weights.sum() == doctest::Approx(2.0).epsilon(1e-14));
    for (int p = 0; p <= 2 * n - 1; ++p) {
      double s = 0.0;
      for (int i = 0; i < n; ++i) s += r.weights(i) * std::pow(r.nodes(i), p);
      const double exact = p % 2 ? 0.0 : 2.0 / (p + 1);
      CHECK(std::abs(s - exact) < 1e-14);
    }
    for (int i = 1; i < n; ++i) CHECK(r.nodes(i) > r.nodes(i - 1));
  }
}

TEST_CASE("gauss-legendre nodes are roots of P_n") {
  const GaussRule r = gauss_legendre(16);
  for (int i = 0; i < 16; ++i) CHECK(std::abs(std::legendre(16, r.nodes(i))) < 1e-13);
  CHECK(&gauss_legendre_16() == &gauss_legendre_16());
}

TEST_CASE("composite rule") {
  const double v = integrate_composite([](double x) { return std::sin(x); }, 0.0, std::numbers::pi, 0.5);
  CHECK(v == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(integrate_composite([](double) { return 1.0; }, 1.0, 1.0, 0.1) == 0.0);
  const double g = integrate_composite([](double x) { return std::exp(-x * x); }, -10.0, 10.0, 1.0);
  CHECK(g == doctest::Approx(std::sqrt(std::numbers::pi)).epsilon(1e-14));
}

TEST_CASE("adaptive integration") {
  const QuadResult r = integrate_adaptive([](double x) { return std::sqrt(x); }, 0.0, 1.0);
  CHECK(r.value == doctest::Approx(2.0 / 3.0).epsilon(1e-11));
  CHECK(r.evaluations > 0);
  const QuadResult p = integrate_adaptive([](double x) { return std::exp(-100.0 * (x - 0.3) * (x - 0.3)); }, -5.0, 5.0);
  CHECK(p.value == doctest::Approx(std::sqrt(std::numbers::pi) / 10.0).epsilon(1e-12));
}

TEST_CASE("adaptive integration reports failure") {
  QuadOptions opt;
  opt.max_intervals = 3;
  try {
    integrate_adaptive([](double x) { return std::sin(500.0 * x) * std::exp(x); }, 0.0, 10.0, opt);
    FAIL("expected a numeric failure");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::numeric_failure);
  }
}

TEST_CASE("semi-infinite and real-line maps") {
  const QuadResult e = integrate_to_infinity([](double x) { return std::exp(-x); }, 0.0, 1.0);
  CHECK(e.value == doctest::Approx(1.0).epsilon(1e-11));
  const QuadResult c = integrate_to_infinity([](double x) { return 1.0 / (1.0 + x * x); }, 0.0, 1.0);
  CHECK(c.value == doctest::Approx(std::numbers::pi / 2).epsilon(1e-10));
  const QuadResult g = integrate_real_line([](double x) { return std::exp(-x * x / 8.0); }, 2.0);
  CHECK(g.value == doctest::Approx(std::sqrt(8.0 * std::numbers::pi)).epsilon(1e-11));
}
