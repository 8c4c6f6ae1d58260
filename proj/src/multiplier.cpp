// Product network built from binary digit extraction.
//
// x is rescaled to x' in [0, 1) and its first k binary digits x_i are read
// off triangle waves z_i = phi^i(x' - 2^{-i-1}) (z_i > 1/2 iff x_i = 1).
// Instead of a separate soft-threshold layer, each digit is thresholded
// inside the product layer by the pair
//
//   [2^{-i} y + K (z_i - 1/2)]+ - [K (z_i - 1/2)]+  =  2^{-i} x_i y,
//
// which is exact whenever |z_i - 1/2| >= delta and K delta >= 2^{-i} M.
// Digit 1 uses the mirrored pair, giving -(1 - x_1) y / 2, which absorbs
// the -M y term of x y = scale x' y - M y without a separate y neuron.

#include <algorithm>
#include <cmath>
#include <utility>

#include "reluforge/constructors.hpp"
#include "reluforge/error.hpp"

namespace reluforge {

namespace {

// Sparse linear functional over the neurons of the previous layer.
struct Expr {
  std::vector<std::pair<Eigen::Index, double>> terms;
  double offset = 0.0;
};

struct LayerBuilder {
  std::vector<Expr> rows;
  std::vector<double> scale;  // multiplies the expression
  std::vector<double> bias;

  Eigen::Index add(const Expr& e, double s, double b) {
    rows.push_back(e);
    scale.push_back(s);
    bias.push_back(b + s * e.offset);
    return static_cast<Eigen::Index>(rows.size()) - 1;
  }

  Layer build(Eigen::Index fan_in) const {
    const auto n = static_cast<Eigen::Index>(rows.size());
    Matrix w = Matrix::Zero(n, fan_in);
    Vector b(n);
    for (Eigen::Index r = 0; r < n; ++r) {
      for (auto [idx, coeff] : rows[static_cast<std::size_t>(r)].terms) w(r, idx) += scale[static_cast<std::size_t>(r)] * coeff;
      b[r] = bias[static_cast<std::size_t>(r)];
    }
    return Layer{std::move(w), std::move(b), Activation::relu};
  }
};

Expr neuron(Eigen::Index i) { return Expr{{{i, 1.0}}, 0.0}; }
Expr difference(Eigen::Index i, Eigen::Index j) { return Expr{{{i, 1.0}, {j, -1.0}}, 0.0}; }

// phi^i(t) for t <= 1 without going through a network.
double triangle(int i, double t) {
  if (t <= 0.0) return 0.0;
  const double s = std::ldexp(t, i - 1);
  const double frac = s - std::floor(s);
  return 1.0 - std::abs(2.0 * frac - 1.0);
}

int ceil_log2(double v) { return static_cast<int>(std::ceil(std::log2(v))); }

void check_design_args(double bound, double eps) {
  if (!(bound > 0.0) || !std::isfinite(bound)) throw ValidationError("multiplier needs M > 0");
  if (!(eps > 0.0) || !(eps < bound)) throw ValidationError("multiplier needs 0 < eps < M");
}

}  // namespace

double MultiplierDesign::rescale(double x) const { return (x + bound) / scale; }

bool MultiplierDesign::in_bad_set(double x) const {
  const double xr = rescale(x);
  for (int i = 1; i <= bits; ++i) {
    const double z = triangle(i, xr - std::ldexp(1.0, -i - 1));
    // Rounding in the network's triangle waves grows like 2^i ulp.
    const double band = delta + std::ldexp(1e-15, i);
    if (std::abs(z - 0.5) < band) return true;
  }
  return false;
}

double MultiplierDesign::error_bound() const {
  return bound * (scale * std::ldexp(1.0, -bits) + (0.5 * scale - bound));
}

MultiplierDesign multiplier_design_from_bits(double bound, int bits, double delta) {
  if (!(bound > 0.0) || !std::isfinite(bound)) throw ValidationError("multiplier needs M > 0");
  if (bits < 1) throw ValidationError("multiplier needs at least one bit");
  if (!(delta > 0.0) || !(delta < 0.25)) throw ValidationError("multiplier band delta must lie in (0, 1/4)");
  MultiplierDesign d{};
  d.bound = bound;
  d.bits = bits;
  d.delta = delta;
  d.scale = 2.0 * bound / (1.0 - std::ldexp(1.0, -bits - 1));
  d.eps = d.error_bound();
  return d;
}

MultiplierDesign multiplier_design(double bound, double eps, const MultiplierOptions& options) {
  check_design_args(bound, eps);
  int bits = 2 * ceil_log2(8.0 * bound / eps);
  auto design = multiplier_design_from_bits(bound, bits, 0.125);
  while (design.error_bound() > eps) {
    ++bits;
    design = multiplier_design_from_bits(bound, bits, 0.125);
  }
  if (bits > options.max_bits)
    throw ValidationError("multiplier needs " + std::to_string(bits) + " bits, above the cap of " +
                          std::to_string(options.max_bits));
  // The gate pair cancels terms of size ~M/delta and the output scales them by
  // ~2M, so rounding contributes ~M^2 2^-51 / delta per bit group. The floor
  // keeps that below eps/4; the default band is far narrower once M/eps is large.
  const double rounding_floor = bound * bound * std::ldexp(1.0, -46) / eps;
  const double delta = options.delta.value_or(std::max(eps / (8.0 * std::ldexp(1.0, bits) * bound), rounding_floor));
  design = multiplier_design_from_bits(bound, bits, delta);
  design.eps = eps;
  return design;
}

std::size_t multiplier_width_limit(double bound, double eps) {
  check_design_args(bound, eps);
  return static_cast<std::size_t>(4 * ceil_log2(bound / eps) + 13);
}

std::size_t multiplier_depth_limit(double bound, double eps) {
  check_design_args(bound, eps);
  return static_cast<std::size_t>(std::ceil(2.0 * std::log2(bound / eps)) + 9);
}

Network multiplier(const MultiplierDesign& design) {
  const int k = design.bits;
  const double m = design.bound;
  const double a = 1.0 / design.scale;  // x' = a x + a M

  std::vector<Layer> layers;
  // Where each digit's running triangle-wave value lives in the last layer.
  std::vector<Expr> chain(static_cast<std::size_t>(k));
  Expr y_plus;  // y + M, non-negative for |y| <= M

  {
    LayerBuilder first;
    const Expr x_rescaled{{{0, a}}, a * m};
    for (int i = 1; i <= k; ++i) {
      Expr w = x_rescaled;
      w.offset -= std::ldexp(1.0, -i - 1);
      const auto p = first.add(w, 2.0, 0.0);
      const auto q = first.add(w, 4.0, -2.0);
      chain[static_cast<std::size_t>(i - 1)] = difference(p, q);
    }
    y_plus = neuron(first.add(Expr{{{1, 1.0}}, m}, 1.0, 0.0));
    layers.push_back(first.build(2));
  }

  for (int j = 2; j <= k; ++j) {
    LayerBuilder next;
    for (int i = 1; i <= k; ++i) {
      Expr& v = chain[static_cast<std::size_t>(i - 1)];
      if (i >= j) {
        const auto p = next.add(v, 2.0, 0.0);
        const auto q = next.add(v, 4.0, -2.0);
        v = difference(p, q);
      } else {
        v = neuron(next.add(v, 1.0, 0.0));  // finished wave, value in [0, 1]
      }
    }
    y_plus = neuron(next.add(y_plus, 1.0, 0.0));
    layers.push_back(next.build(static_cast<Eigen::Index>(layers.back().outputs())));
  }

  LayerBuilder product;
  std::vector<double> out_weights;
  for (int i = 1; i <= k; ++i) {
    const Expr& z = chain[static_cast<std::size_t>(i - 1)];
    const double gain = std::ldexp(m, -i) / design.delta;
    const double coef = std::ldexp(1.0, -i);
    const double sign = i == 1 ? -1.0 : 1.0;
    // sign * (coef * y + gain * (z - 1/2)), with y = y_plus - M.
    Expr combined = z;
    for (auto& t : combined.terms) t.second *= gain;
    combined.offset = gain * (z.offset - 0.5);
    for (auto t : y_plus.terms) combined.terms.push_back({t.first, coef * t.second});
    combined.offset += coef * (y_plus.offset - m);
    product.add(combined, sign, 0.0);

    Expr gate = z;
    gate.offset -= 0.5;
    product.add(gate, sign * gain, 0.0);
    out_weights.push_back(design.scale);
    out_weights.push_back(-design.scale);
  }
  layers.push_back(product.build(static_cast<Eigen::Index>(layers.back().outputs())));

  Matrix out(1, static_cast<Eigen::Index>(out_weights.size()));
  for (std::size_t c = 0; c < out_weights.size(); ++c) out(0, static_cast<Eigen::Index>(c)) = out_weights[c];
  layers.push_back(Layer{std::move(out), Vector::Zero(1), Activation::identity});
  return Network(2, std::move(layers));
}

Network multiplier(double bound, double eps, const MultiplierOptions& options) {
  const MultiplierDesign design = multiplier_design(bound, eps, options);
  Network net = multiplier(design);
  if (design.bits == 2 * ceil_log2(8.0 * bound / eps)) {
    if (net.width() > multiplier_width_limit(bound, eps) || net.depth() > multiplier_depth_limit(bound, eps))
      throw ComputationError("multiplier exceeds its size formula");
  }
  return net;
}

Network square(const MultiplierDesign& design) {
  return affine_pre(multiplier(design), Matrix::Ones(2, 1), Vector::Zero(2));
}

Network square(double bound, double eps, const MultiplierOptions& options) {
  return affine_pre(multiplier(bound, eps, options), Matrix::Ones(2, 1), Vector::Zero(2));
}

}  // namespace reluforge
