#include "reluforge/legendre.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "reluforge/error.hpp"

namespace reluforge {

namespace {

constexpr double kC2Constant = 5.0 / 4096.0;

std::vector<Rational> differentiate(const std::vector<Rational>& p) {
  if (p.size() <= 1) return {Rational(0)};
  std::vector<Rational> d(p.size() - 1);
  for (std::size_t k = 1; k < p.size(); ++k) d[k - 1] = p[k] * static_cast<long>(k);
  return d;
}

}  // namespace

std::vector<Rational> rodrigues_coefficients(int degree) {
  if (degree < 0) throw ValidationError("Legendre degree must be non-negative");
  // (x^2 - 1)^i expanded by repeated multiplication.
  std::vector<Rational> p{Rational(1)};
  for (int k = 0; k < degree; ++k) {
    std::vector<Rational> next(p.size() + 2, Rational(0));
    for (std::size_t j = 0; j < p.size(); ++j) {
      next[j + 2] += p[j];
      next[j] -= p[j];
    }
    p = std::move(next);
  }
  for (int k = 0; k < degree; ++k) p = differentiate(p);
  boost::multiprecision::cpp_int scale = 1;
  for (int k = 1; k <= degree; ++k) scale *= 2 * k;  // 2^i i!
  for (auto& c : p) c /= Rational(scale);
  return p;
}

ShiftedLegendre::ShiftedLegendre(int degree, double a, double length) : degree_(degree), a_(a), length_(length) {
  if (degree < 0 || degree > kMaxDegree)
    throw ValidationError("shifted Legendre degree must be in [0, " + std::to_string(kMaxDegree) + "]");
  if (!(length > 0.0) || !std::isfinite(a) || !std::isfinite(length))
    throw ValidationError("shifted Legendre interval needs finite a and length > 0");
  for (const auto& c : rodrigues_coefficients(degree)) coeffs_.push_back(static_cast<double>(c));
}

double ShiftedLegendre::operator()(double t) const {
  const double x = (2.0 / length_) * (t - a_) - 1.0;
  // Bonnet recurrence; Horner on the monomial form loses ~1e-6 at degree 20.
  if (degree_ == 0) return 1.0;
  double p0 = 1.0, p1 = x;
  for (int k = 2; k <= degree_; ++k) {
    const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
    p0 = p1;
    p1 = pk;
  }
  return p1;
}

std::vector<double> ShiftedLegendre::coefficients_in_t() const {
  // x = alpha t + beta; expand sum c_k (alpha t + beta)^k.
  const double alpha = 2.0 / length_, beta = -2.0 * a_ / length_ - 1.0;
  std::vector<double> out(coeffs_.size(), 0.0);
  std::vector<double> power{1.0};  // (alpha t + beta)^k
  for (std::size_t k = 0; k < coeffs_.size(); ++k) {
    for (std::size_t j = 0; j < power.size(); ++j) out[j] += coeffs_[k] * power[j];
    std::vector<double> next(power.size() + 1, 0.0);
    for (std::size_t j = 0; j < power.size(); ++j) {
      next[j] += beta * power[j];
      next[j + 1] += alpha * power[j];
    }
    power = std::move(next);
  }
  return out;
}

double Polynomial::operator()(double t) const {
  double acc = 0.0;
  for (auto it = coefficients.rbegin(); it != coefficients.rend(); ++it) acc = acc * t + *it;
  return acc;
}

double fl_coefficient(const ScalarFunction& f, int i, double a, double length) {
  const ShiftedLegendre p(i, a, length);
  const double integral = quadrature::integrate([&](double t) { return p(t) * f(t); }, a, a + length);
  return (2.0 * i + 1.0) / length * integral;
}

double fl_coefficient(const Polynomial& poly, int i, double a, double length) {
  const ShiftedLegendre p(i, a, length);
  if (poly.degree() + static_cast<std::size_t>(i) > 2 * quadrature::kPanelPoints - 1)
    throw ValidationError("polynomial degree too high for the exact quadrature path");
  const double integral = quadrature::panel([&](double t) { return p(t) * poly(t); }, a, a + length);
  return (2.0 * i + 1.0) / length * integral;
}

LinearFit linear_fit_from_moments(const FitMoments& m, double length) {
  const double a0 = m.mass / length;
  const double a1 = 3.0 / length * (2.0 / length) * m.centered;
  const double error = m.energy - length * (a0 * a0 + a1 * a1 / 3.0);
  return {a0, a1, std::max(error, 0.0)};
}

LinearFit best_linear_fit(const ScalarFunction& f, double a, double length) {
  if (!(length > 0.0)) throw ValidationError("interval length must be positive");
  const double b = a + length;
  const double mid = a + 0.5 * length;
  FitMoments m;
  m.mass = quadrature::integrate(f, a, b);
  m.centered = quadrature::integrate([&](double t) { return (t - mid) * f(t); }, a, b);
  m.energy = quadrature::integrate(
      [&](double t) {
        const double y = f(t);
        return y * y;
      },
      a, b);
  return linear_fit_from_moments(m, length);
}

LegendreReport legendre_report(const ScalarFunction& f, double a, double length, int max_degree) {
  if (max_degree < 0 || max_degree > ShiftedLegendre::kMaxDegree)
    throw ValidationError("report degree must be in [0, " + std::to_string(ShiftedLegendre::kMaxDegree) + "]");
  LegendreReport report;
  report.a = a;
  report.length = length;
  report.norm_squared = quadrature::integrate(
      [&](double t) {
        const double y = f(t);
        return y * y;
      },
      a, a + length);
  double explained = 0.0;
  for (int i = 0; i <= max_degree; ++i) {
    const double c = fl_coefficient(f, i, a, length);
    report.coefficients.push_back(c);
    explained += length * c * c / (2.0 * i + 1.0);
  }
  report.linear_fit_error = linear_fit_error(f, a, length);
  report.tail_estimate = report.norm_squared - explained;
  return report;
}

double quad_lower_bound(double p2, int n) {
  if (n < 1) throw ValidationError("piece count n must be >= 1");
  const double n4 = std::pow(static_cast<double>(n), 4);
  return p2 * p2 / (180.0 * n4);
}

double strongly_convex_lower_bound(double lambda, int n) {
  if (n < 1) throw ValidationError("piece count n must be >= 1");
  if (lambda < 0.0) throw ValidationError("lambda must be non-negative");
  return kC2Constant * lambda * lambda / std::pow(static_cast<double>(n), 4);
}

double second_coefficient_lower_bound(double lambda, double length) {
  if (!(length > 0.0) || length > 1.0) throw ValidationError("interval length must be in (0, 1]");
  return 5.0 * lambda * length * length / 64.0;
}

BoundValue c2_lower_bound(double lambda, double sigma_lambda, std::uint64_t width, std::uint64_t depth) {
  if (lambda < 0.0) throw ValidationError("lambda must be non-negative");
  if (sigma_lambda < 0.0 || sigma_lambda > 1.0) throw ValidationError("sigma_lambda must lie in [0, 1]");
  if (width < 1 || depth < 1) throw ValidationError("width and depth must be >= 1");
  const double denom = std::pow(2.0 * static_cast<double>(width), 4.0 * static_cast<double>(depth));
  if (!std::isfinite(denom)) return {0.0, true};
  return {kC2Constant * lambda * lambda * std::pow(sigma_lambda, 5) / denom, false};
}

double partition_power_bound(const std::vector<double>& lengths, double p) {
  if (lengths.empty()) throw ValidationError("partition needs at least one interval");
  if (p < 1.0) throw ValidationError("Hoelder exponent p must be >= 1");
  double total = 0.0, sum = 0.0;
  for (double l : lengths) {
    if (!(l > 0.0)) throw ValidationError("partition lengths must be positive");
    total += l;
    sum += std::pow(l, p);
  }
  if (std::abs(total - 1.0) > 1e-9) throw ValidationError("partition lengths must sum to 1");
  const double floor = 1.0 / std::pow(static_cast<double>(lengths.size()), p - 1.0);
  if (sum < floor * (1.0 - 1e-12)) throw ComputationError("Hoelder bound violated");
  return sum;
}

SeparationRow depth_separation_row(double eps, double lambda, double sigma_lambda, std::uint64_t depth,
                                   std::uint64_t op_count, double bound_m) {
  if (!(eps > 0.0)) throw ValidationError("eps must be positive");
  if (depth < 1) throw ValidationError("depth must be >= 1");
  const double numerator = kC2Constant * lambda * lambda * std::pow(sigma_lambda, 5);
  double width = 1.0;
  if (numerator > eps) width = std::max(1.0, 0.5 * std::pow(numerator / eps, 1.0 / (4.0 * static_cast<double>(depth))));
  const double t = static_cast<double>(op_count);
  const double size = t * std::log2(1.0 / eps) + t * t * std::log2(std::max(bound_m, 1.0));
  return {eps, width, size};
}

}  // namespace reluforge
