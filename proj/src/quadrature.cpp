#include "reluforge/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "reluforge/error.hpp"

namespace reluforge::quadrature {

namespace {

Rule build_rule() {
  constexpr int n = kPanelPoints;
  Rule rule{};
  for (int i = 0; i < n / 2; ++i) {
    // Chebyshev-like initial guess for the i-th largest root.
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = pk;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double step = p1 / dp;
      x -= step;
      if (std::abs(step) < 1e-16) break;
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[n - 1 - i] = x;
    rule.nodes[i] = -x;
    rule.weights[n - 1 - i] = w;
    rule.weights[i] = w;
  }
  return rule;
}

double checked(const ScalarFunction& f, double x) {
  const double y = f(x);
  if (!std::isfinite(y)) throw ComputationError("integrand is not finite at x=" + std::to_string(x));
  return y;
}

struct PanelSums {
  double value;
  double magnitude;  // integral of |f|, used as the absolute floor
};

PanelSums panel_sums(const ScalarFunction& f, double a, double b) {
  const Rule& rule = gauss_legendre_rule();
  const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
  double sum = 0.0, mag = 0.0;
  for (int i = 0; i < kPanelPoints; ++i) {
    const double y = checked(f, mid + half * rule.nodes[i]);
    sum += rule.weights[i] * y;
    mag += rule.weights[i] * std::abs(y);
  }
  return {sum * half, mag * std::abs(half)};
}

double refine(const ScalarFunction& f, double a, double b, double whole, double rel_tol, double abs_floor, int depth) {
  const double mid = 0.5 * (a + b);
  const PanelSums l = panel_sums(f, a, mid);
  const PanelSums r = panel_sums(f, mid, b);
  const double left = l.value, right = r.value;
  const double split = left + right;
  // Rounding noise of the panel sums themselves; no split can beat it.
  const double noise = 64.0 * std::numeric_limits<double>::epsilon() * (l.magnitude + r.magnitude);
  if (std::abs(split - whole) <= std::max({rel_tol * std::abs(split), abs_floor, noise})) return split;
  if (depth >= 40) throw ComputationError("adaptive quadrature did not converge");
  return refine(f, a, mid, left, rel_tol, 0.5 * abs_floor, depth + 1) +
         refine(f, mid, b, right, rel_tol, 0.5 * abs_floor, depth + 1);
}

}  // namespace

const Rule& gauss_legendre_rule() {
  static const Rule rule = build_rule();
  return rule;
}

double panel(const ScalarFunction& f, double a, double b) { return panel_sums(f, a, b).value; }

double integrate(const ScalarFunction& f, double a, double b, double rel_tol) {
  if (a == b) return 0.0;
  const PanelSums top = panel_sums(f, a, b);
  // Integrals that cancel to ~0 can never meet a purely relative test.
  const double abs_floor = 1e-15 * top.magnitude;
  return refine(f, a, b, top.value, rel_tol, abs_floor, 0);
}

}  // namespace reluforge::quadrature
