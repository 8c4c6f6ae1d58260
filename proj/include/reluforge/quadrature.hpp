#pragma once

#include <array>
#include <functional>

namespace reluforge {

using ScalarFunction = std::function<double(double)>;

namespace quadrature {

inline constexpr int kPanelPoints = 32;

struct Rule {
  std::array<double, kPanelPoints> nodes;    // on [-1, 1], ascending
  std::array<double, kPanelPoints> weights;
};

/// 32-point Gauss-Legendre rule, computed once by Newton iteration on P_32.
const Rule& gauss_legendre_rule();

/// Single 32-point panel on [a, b]. Exact for polynomials of degree <= 63.
double panel(const ScalarFunction& f, double a, double b);

/// Composite 32-point Gauss-Legendre with interval bisection until the
/// relative change drops below `rel_tol`. Throws ComputationError on
/// non-finite integrand values or if bisection does not settle.
double integrate(const ScalarFunction& f, double a, double b, double rel_tol = 1e-10);

}  // namespace quadrature
}  // namespace reluforge
