#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>

#include "reluforge/error.hpp"
#include "reluforge/quadrature.hpp"

using namespace reluforge;

TEST_CASE("Gauss-Legendre rule: weights sum to 2, symmetric nodes") {
  const auto& rule = quadrature::gauss_legendre_rule();
  double sum = 0.0;
  for (double w : rule.weights) sum += w;
  CHECK(sum == doctest::Approx(2.0).epsilon(1e-14));
  for (int i = 0; i < quadrature::kPanelPoints; ++i)
    CHECK(rule.nodes[i] == doctest::Approx(-rule.nodes[quadrature::kPanelPoints - 1 - i]).epsilon(1e-14));
}

TEST_CASE("single panel is exact through degree 63") {
  const double v = quadrature::panel([](double x) { return std::pow(x, 63) + std::pow(x, 62); }, 0.0, 1.0);
  CHECK(v == doctest::Approx(1.0 / 64.0 + 1.0 / 63.0).epsilon(1e-13));
}

TEST_CASE("adaptive integration of smooth and kinked functions") {
  CHECK(quadrature::integrate([](double x) { return std::exp(x); }, 0.0, 1.0) ==
        doctest::Approx(std::exp(1.0) - 1.0).epsilon(1e-12));
  CHECK(quadrature::integrate([](double x) { return std::sin(3.0 * x); }, 0.0, std::numbers::pi) ==
        doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(quadrature::integrate([](double x) { return std::abs(x - 0.3); }, 0.0, 1.0) ==
        doctest::Approx(0.5 * (0.09 + 0.49)).epsilon(1e-10));
}

TEST_CASE("non-finite integrand is reported") {
  CHECK_THROWS_AS(quadrature::integrate([](double) { return std::numeric_limits<double>::quiet_NaN(); }, 0.0, 1.0),
                  ComputationError);
}
