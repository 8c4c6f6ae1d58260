// Segmented least squares over a knot grid. Interval costs come from
// prefix sums of per-cell moments, projected with the Legendre linear fit.

#include <cmath>
#include <limits>

#include "reluforge/error.hpp"
#include "reluforge/legendre.hpp"
#include "reluforge/parallel.hpp"
#include "reluforge/pwl.hpp"

namespace reluforge {

namespace {

struct PrefixMoments {
  std::vector<double> knots;
  std::vector<double> mass;    // integral of f
  std::vector<double> first;   // integral of t f
  std::vector<double> energy;  // integral of f^2

  FitMoments over(std::size_t i, std::size_t j) const {
    const double mid = 0.5 * (knots[i] + knots[j]);
    FitMoments m;
    m.mass = mass[j] - mass[i];
    m.centered = (first[j] - first[i]) - mid * m.mass;
    m.energy = energy[j] - energy[i];
    return m;
  }
};

PrefixMoments build_moments(const ScalarFunction& f, double lo, double hi, std::size_t cells) {
  PrefixMoments p;
  p.knots.resize(cells + 1);
  for (std::size_t i = 0; i <= cells; ++i)
    p.knots[i] = i == cells ? hi : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(cells);

  std::vector<double> mass(cells), first(cells), energy(cells);
  parallel_for(cells, [&](std::size_t c) {
    const double a = p.knots[c], b = p.knots[c + 1];
    mass[c] = quadrature::integrate(f, a, b);
    first[c] = quadrature::integrate([&](double t) { return t * f(t); }, a, b);
    energy[c] = quadrature::integrate(
        [&](double t) {
          const double y = f(t);
          return y * y;
        },
        a, b);
  });
  p.mass.assign(cells + 1, 0.0);
  p.first.assign(cells + 1, 0.0);
  p.energy.assign(cells + 1, 0.0);
  for (std::size_t c = 0; c < cells; ++c) {
    p.mass[c + 1] = p.mass[c] + mass[c];
    p.first[c + 1] = p.first[c] + first[c];
    p.energy[c + 1] = p.energy[c] + energy[c];
  }
  return p;
}

Segment segment_from_fit(const LinearFit& fit, double a, double b) {
  const double len = b - a, mid = 0.5 * (a + b);
  const double slope = 2.0 * fit.a1 / len;
  return {slope, fit.a0 - slope * mid};
}

// Least-squares continuous fit on fixed knots, using the hat-function basis.
PiecewiseLinear1D continuous_refit(const ScalarFunction& f, const std::vector<double>& knots) {
  const auto m = static_cast<Eigen::Index>(knots.size());
  Matrix gram = Matrix::Zero(m, m);
  Vector rhs = Vector::Zero(m);
  for (Eigen::Index k = 0; k + 1 < m; ++k) {
    const double a = knots[static_cast<std::size_t>(k)], b = knots[static_cast<std::size_t>(k) + 1];
    const double h = b - a;
    gram(k, k) += h / 3.0;
    gram(k + 1, k + 1) += h / 3.0;
    gram(k, k + 1) += h / 6.0;
    gram(k + 1, k) += h / 6.0;
    rhs[k] += quadrature::integrate([&](double t) { return f(t) * (b - t) / h; }, a, b);
    rhs[k + 1] += quadrature::integrate([&](double t) { return f(t) * (t - a) / h; }, a, b);
  }
  const Vector values = gram.ldlt().solve(rhs);
  std::vector<Segment> segments;
  for (Eigen::Index k = 0; k + 1 < m; ++k) {
    const double a = knots[static_cast<std::size_t>(k)], b = knots[static_cast<std::size_t>(k) + 1];
    const double slope = (values[k + 1] - values[k]) / (b - a);
    segments.push_back({slope, values[k] - slope * a});
  }
  std::vector<double> interior(knots.begin() + 1, knots.end() - 1);
  return PiecewiseLinear1D(knots.front(), knots.back(), std::move(interior), std::move(segments), true);
}

}  // namespace

OracleResult optimal_pwl_oracle(const ScalarFunction& f, int n, int grid_resolution, OracleOptions options) {
  if (n < 1) throw ValidationError("oracle needs n >= 1");
  if (grid_resolution < n) throw ValidationError("oracle needs grid_resolution >= n");
  if (!(options.lower < options.upper)) throw ValidationError("oracle interval must satisfy lower < upper");

  const auto cells = static_cast<std::size_t>(grid_resolution);
  const auto pieces = static_cast<std::size_t>(n);
  const PrefixMoments moments = build_moments(f, options.lower, options.upper, cells);
  auto cost = [&](std::size_t i, std::size_t j) {
    return linear_fit_from_moments(moments.over(i, j), moments.knots[j] - moments.knots[i]).error;
  };

  constexpr double inf = std::numeric_limits<double>::infinity();
  // best[p][j]: least error covering [knot_0, knot_j] with exactly p pieces.
  std::vector<std::vector<double>> best(pieces + 1, std::vector<double>(cells + 1, inf));
  std::vector<std::vector<std::size_t>> from(pieces + 1, std::vector<std::size_t>(cells + 1, 0));
  best[0][0] = 0.0;
  for (std::size_t p = 1; p <= pieces; ++p) {
    const auto& prev = best[p - 1];
    auto& row = best[p];
    auto& arg = from[p];
    parallel_for(cells + 1 - p, [&](std::size_t offset) {
      const std::size_t j = p + offset;
      double value = inf;
      std::size_t choice = p - 1;
      for (std::size_t i = p - 1; i < j; ++i) {
        if (prev[i] == inf) continue;
        const double candidate = prev[i] + cost(i, j);
        if (candidate < value) {
          value = candidate;
          choice = i;
        }
      }
      row[j] = value;
      arg[j] = choice;
    });
  }

  std::vector<std::size_t> knots_idx{cells};
  for (std::size_t p = pieces, j = cells; p > 0; --p) {
    j = from[p][j];
    knots_idx.push_back(j);
  }
  std::vector<double> knots;
  for (auto it = knots_idx.rbegin(); it != knots_idx.rend(); ++it) knots.push_back(moments.knots[*it]);
  std::vector<double> interior(knots.begin() + 1, knots.end() - 1);

  if (options.continuous) {
    PiecewiseLinear1D fit = continuous_refit(f, knots);
    const double error = l2_error(fit, f, options.lower, options.upper);
    return {error, std::move(interior), std::move(fit)};
  }

  std::vector<Segment> segments;
  for (std::size_t k = 0; k + 1 < knots_idx.size(); ++k) {
    const std::size_t i = knots_idx[knots_idx.size() - 1 - k], j = knots_idx[knots_idx.size() - 2 - k];
    const auto fit = linear_fit_from_moments(moments.over(i, j), moments.knots[j] - moments.knots[i]);
    segments.push_back(segment_from_fit(fit, moments.knots[i], moments.knots[j]));
  }
  PiecewiseLinear1D fit(options.lower, options.upper, interior, std::move(segments), false);
  return {best[pieces][cells], std::move(interior), std::move(fit)};
}

}  // namespace reluforge
