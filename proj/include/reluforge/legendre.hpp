#pragma once

#include <cstdint>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "reluforge/quadrature.hpp"

namespace reluforge {

using Rational = boost::multiprecision::cpp_rational;

/// Exact monomial coefficients of the Legendre polynomial P_i on [-1, 1],
/// obtained from Rodrigues' formula P_i = (1 / (2^i i!)) d^i/dx^i (x^2 - 1)^i.
/// Entry k is the coefficient of x^k.
std::vector<Rational> rodrigues_coefficients(int degree);

/// Legendre polynomial of degree i shifted to [a, a + length]:
/// P~_i(t) = P_i(x) with x = (2/length) t - (2/length) a - 1.
class ShiftedLegendre {
 public:
  static constexpr int kMaxDegree = 30;

  ShiftedLegendre(int degree, double a, double length);

  int degree() const { return degree_; }
  double a() const { return a_; }
  double length() const { return length_; }
  /// Monomial coefficients of P_i in the normalized variable x.
  const std::vector<double>& coefficients() const { return coeffs_; }
  /// Monomial coefficients in t itself. Ill-conditioned for high degree or
  /// intervals far from the origin; intended for low-degree inspection.
  std::vector<double> coefficients_in_t() const;

  double operator()(double t) const;

 private:
  int degree_;
  double a_, length_;
  std::vector<double> coeffs_;
};

/// Polynomial in t, monomial coefficients (entry k multiplies t^k).
struct Polynomial {
  std::vector<double> coefficients;
  double operator()(double t) const;
  std::size_t degree() const { return coefficients.empty() ? 0 : coefficients.size() - 1; }
};

/// a~_i = (2i+1)/length * integral over [a, a+length] of P~_i(t) f(t) dt,
/// by adaptive Gauss-Legendre quadrature.
double fl_coefficient(const ScalarFunction& f, int i, double a, double length);
/// Closed-form path: a single 32-point panel is exact for deg(p) + i <= 63.
double fl_coefficient(const Polynomial& p, int i, double a, double length);

struct LinearFit {
  double a0;     // coefficient of P~_0
  double a1;     // coefficient of P~_1
  double error;  // integral of (f - Pf)^2 over the interval (not normalized)
};

/// Best L2 linear approximation Pf = a0 P~_0 + a1 P~_1 and its squared
/// error ||f||^2 - length (a0^2 + a1^2 / 3).
LinearFit best_linear_fit(const ScalarFunction& f, double a, double length);
inline double linear_fit_error(const ScalarFunction& f, double a, double length) {
  return best_linear_fit(f, a, length).error;
}

/// Integrals of f that determine its best linear fit on an interval.
/// `centered` is the integral of (t - midpoint) f(t).
struct FitMoments {
  double mass = 0.0;
  double centered = 0.0;
  double energy = 0.0;  // integral of f^2
};

/// Same projection as best_linear_fit, from precomputed moments:
/// a0 = mass / length, a1 = 3 / length * (2 / length) * centered.
LinearFit linear_fit_from_moments(const FitMoments& m, double length);

struct LegendreReport {
  double a = 0.0;
  double length = 1.0;
  std::vector<double> coefficients;  // a~_0 .. a~_K
  double norm_squared = 0.0;         // ||f||^2 on the interval
  double linear_fit_error = 0.0;
  /// ||f||^2 - length * sum_{i<=K} a~_i^2 / (2i+1): what the truncated
  /// series leaves unexplained.
  double tail_estimate = 0.0;
};

LegendreReport legendre_report(const ScalarFunction& f, double a, double length, int max_degree);

/// p2^2 / (180 n^4): least mean squared error of any n-piece fit of a
/// quadratic with leading coefficient p2 on [0, 1].
double quad_lower_bound(double p2, int n);
/// 5 lambda^2 / (4096 n^4) for lambda-strongly convex (or concave) f.
double strongly_convex_lower_bound(double lambda, int n);
/// 5 lambda length^2 / 64: lower bound on a~_2 over an interval of length
/// <= 1 where f'' >= lambda.
double second_coefficient_lower_bound(double lambda, double length);

struct BoundValue {
  double value;
  bool saturated;  // (2m)^{4l} overflowed; value reported as 0
};

/// (5/4096) lambda^2 sigma^5 / (2m)^{4l}: L2 lower bound for any width-m,
/// depth-l ReLU network on a C2 function with curvature measure sigma.
BoundValue c2_lower_bound(double lambda, double sigma_lambda, std::uint64_t width, std::uint64_t depth);

/// Sum of lengths^p, after checking Hoelder's bound sum >= 1 / n^{p-1}.
double partition_power_bound(const std::vector<double>& lengths, double p);

/// Fixed-depth width needed to push the C2 lower bound below eps, next to
/// the size of a compiled add/mul circuit: poly(1/eps) against
/// poly(log(1/eps)).
struct SeparationRow {
  double eps;
  double min_width_fixed_depth;  // smallest m with c2_lower_bound(m, depth) <= eps
  double circuit_size;           // t log2(1/eps) + t^2 log2(M)
};
SeparationRow depth_separation_row(double eps, double lambda, double sigma_lambda, std::uint64_t depth,
                                   std::uint64_t op_count, double bound_m);

}  // namespace reluforge
