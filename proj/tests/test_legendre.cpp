#include <doctest.h>

#include <cmath>
#include <random>

#include "reluforge/error.hpp"
#include "reluforge/legendre.hpp"
#include "reluforge/quadrature.hpp"

using namespace reluforge;

TEST_CASE("Rodrigues coefficients are exact") {
  const auto p2 = rodrigues_coefficients(2);  // (3x^2 - 1) / 2
  REQUIRE(p2.size() == 3);
  CHECK(p2[0] == Rational(-1, 2));
  CHECK(p2[1] == 0);
  CHECK(p2[2] == Rational(3, 2));
  const auto p5 = rodrigues_coefficients(5);  // (63x^5 - 70x^3 + 15x) / 8
  CHECK(p5[5] == Rational(63, 8));
  CHECK(p5[3] == Rational(-70, 8));
  CHECK(p5[1] == Rational(15, 8));
}

TEST_CASE("low-degree shifted polynomials") {
  CHECK(ShiftedLegendre(0, 3.0, 2.0)(7.5) == 1.0);
  const auto p1 = ShiftedLegendre(1, 0.0, 1.0).coefficients_in_t();
  CHECK(p1[0] == doctest::Approx(-1.0));
  CHECK(p1[1] == doctest::Approx(2.0));
  const auto p2 = ShiftedLegendre(2, 0.0, 1.0).coefficients_in_t();
  CHECK(p2[0] == doctest::Approx(1.0));
  CHECK(p2[1] == doctest::Approx(-6.0));
  CHECK(p2[2] == doctest::Approx(6.0));
  // General interval against 6/l^2 t^2 - (12a/l^2 + 6/l) t + (6a^2/l^2 + 6a/l + 1).
  const double a = 0.3, l = 0.7;
  const auto g = ShiftedLegendre(2, a, l).coefficients_in_t();
  CHECK(g[2] == doctest::Approx(6.0 / (l * l)));
  CHECK(g[1] == doctest::Approx(-(12.0 * a / (l * l) + 6.0 / l)));
  CHECK(g[0] == doctest::Approx(6.0 * a * a / (l * l) + 6.0 * a / l + 1.0));
  CHECK_THROWS_AS(ShiftedLegendre(31, 0.0, 1.0), ValidationError);
  CHECK_THROWS_AS(ShiftedLegendre(2, 0.0, 0.0), ValidationError);
}

TEST_CASE("orthogonality on random intervals") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> start(-2.0, 2.0), len(0.05, 3.0);
  for (int trial = 0; trial < 20; ++trial) {
    const double a = start(rng), l = len(rng);
    for (int i = 0; i <= 8; ++i)
      for (int j = 0; j <= i; ++j) {
        const ShiftedLegendre pi(i, a, l), pj(j, a, l);
        const double v = quadrature::panel([&](double t) { return pi(t) * pj(t); }, a, a + l);
        const double expected = i == j ? l / (2 * i + 1) : 0.0;
        CHECK(std::abs(v - expected) <= 1e-9);
      }
  }
}

TEST_CASE("coefficients of x^2") {
  std::mt19937_64 rng(22);
  std::uniform_real_distribution<double> start(-1.0, 1.0), len(0.1, 2.0);
  const Polynomial p{{0.0, 0.0, 1.0}};
  const ScalarFunction f = [](double x) { return x * x; };
  for (int trial = 0; trial < 10; ++trial) {
    const double a = start(rng), l = len(rng);
    CHECK(std::abs(fl_coefficient(p, 2, a, l) - l * l / 6.0) <= 1e-10);
    CHECK(std::abs(fl_coefficient(f, 2, a, l) - l * l / 6.0) <= 1e-10);
    CHECK(std::abs(fl_coefficient(p, 3, a, l)) <= 1e-12);
  }
}

TEST_CASE("P~_2 has coefficient 1 on itself") {
  const ShiftedLegendre p2(2, 0.2, 0.5);
  CHECK(fl_coefficient([&](double t) { return p2(t); }, 2, 0.2, 0.5) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("linear fit error") {
  CHECK(linear_fit_error([](double x) { return x * x; }, 0.0, 1.0) == doctest::Approx(1.0 / 180.0).epsilon(1e-10));
  CHECK(std::abs(linear_fit_error([](double x) { return 2.0 - 5.0 * x; }, -1.0, 3.0)) <= 1e-12);
  CHECK(linear_fit_error([](double x) { return std::exp(x); }, 0.0, 1.0) >= 5.0 / 4096.0);
}

TEST_CASE("linear fit error agrees with direct quadrature of the residual") {
  for (const ScalarFunction& f : {ScalarFunction([](double x) { return std::exp(x); }),
                                  ScalarFunction([](double x) { return std::sin(3.0 * x); })}) {
    const double a = 0.2, l = 0.7;
    const auto fit = best_linear_fit(f, a, l);
    const ShiftedLegendre p1(1, a, l);
    const double direct = quadrature::integrate(
        [&](double t) {
          const double r = f(t) - fit.a0 - fit.a1 * p1(t);
          return r * r;
        },
        a, a + l, 1e-13);
    CHECK(std::abs(fit.error - direct) <= 1e-10);
  }
}

TEST_CASE("Parseval residual shrinks with K") {
  for (const ScalarFunction& f : {ScalarFunction([](double x) { return x * x; }),
                                  ScalarFunction([](double x) { return std::exp(x); }),
                                  ScalarFunction([](double x) { return std::sin(3.0 * x); })}) {
    const auto report = legendre_report(f, 0.0, 1.0, 20);
    double partial = 0.0, prev = INFINITY;
    for (std::size_t i = 0; i < report.coefficients.size(); ++i) {
      partial += report.coefficients[i] * report.coefficients[i] / (2.0 * static_cast<double>(i) + 1.0);
      const double residual = std::abs(report.norm_squared - partial);
      CHECK(residual <= prev + 1e-15);
      prev = residual;
    }
    CHECK(prev <= 1e-6);
    CHECK(std::abs(report.tail_estimate) <= 1e-6);
  }
}

TEST_CASE("second coefficient lower bound on strongly convex functions") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    const double c = 0.5 + u(rng), s = 2.0 * u(rng);
    // f'' = 2c + s^2 e^{s x} >= 2c on any interval.
    const ScalarFunction f = [=](double x) { return c * x * x + std::exp(s * x); };
    const double l = 0.05 + 0.95 * u(rng), a = (1.0 - l) * u(rng);
    const double lambda = 2.0 * c + s * s * std::exp(s * a);
    CHECK(fl_coefficient(f, 2, a, l) >= second_coefficient_lower_bound(lambda, l));
  }
}

TEST_CASE("closed-form bounds") {
  CHECK(quad_lower_bound(1.0, 1) == doctest::Approx(1.0 / 180.0));
  CHECK(quad_lower_bound(0.0, 3) == 0.0);
  CHECK(quad_lower_bound(3.0, 2) == doctest::Approx(9.0 / 2880.0));
  CHECK(strongly_convex_lower_bound(1.0, 1) == doctest::Approx(5.0 / 4096.0));
  CHECK(strongly_convex_lower_bound(0.0, 1) == 0.0);
  CHECK(strongly_convex_lower_bound(2.0, 2) == doctest::Approx(20.0 / (4096.0 * 16.0)));
  CHECK(second_coefficient_lower_bound(1.0, 1.0) == doctest::Approx(5.0 / 64.0));
}

TEST_CASE("C2 network lower bound") {
  const auto base = c2_lower_bound(1.0, 1.0, 1, 1);
  CHECK_FALSE(base.saturated);
  CHECK(base.value == doctest::Approx(5.0 / 4096.0 / 16.0));
  CHECK(c2_lower_bound(1.0, 0.0, 3, 2).value == 0.0);
  const double l2 = c2_lower_bound(2.0, 0.5, 3, 2).value, l4 = c2_lower_bound(2.0, 0.5, 3, 4).value;
  CHECK(l2 / l4 == doctest::Approx(std::pow(6.0, 8.0)).epsilon(1e-12));
  const auto huge = c2_lower_bound(1.0, 1.0, 1000000, 1000);
  CHECK(huge.saturated);
  CHECK(huge.value == 0.0);
  CHECK_THROWS_AS(c2_lower_bound(1.0, 1.5, 1, 1), ValidationError);
}

TEST_CASE("Hoelder power sums") {
  CHECK(partition_power_bound({0.25, 0.25, 0.25, 0.25}, 5.0) == doctest::Approx(1.0 / 256.0));
  CHECK(partition_power_bound({1.0}, 5.0) == 1.0);
  CHECK(partition_power_bound({0.9, 0.1}, 5.0) >= 1.0 / 16.0);
  CHECK_THROWS_AS(partition_power_bound({0.5, 0.4}, 5.0), ValidationError);
}

TEST_CASE("depth separation rows") {
  const auto coarse = depth_separation_row(1e-6, 1.0, 1.0, 1, 2, 1.0);
  const auto fine = depth_separation_row(1e-12, 1.0, 1.0, 1, 2, 1.0);
  CHECK(fine.min_width_fixed_depth > coarse.min_width_fixed_depth);
  CHECK(fine.circuit_size == doctest::Approx(2.0 * std::log2(1e12)));
  // Doubling the required precision doubles the circuit term but raises the
  // fixed-depth width polynomially.
  CHECK(fine.min_width_fixed_depth / coarse.min_width_fixed_depth > fine.circuit_size / coarse.circuit_size);
}
