#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "reluforge/network.hpp"

namespace reluforge {

/// phi^i with phi(x) = [2x]+ - [4x-2]+: a triangle wave with 2^{i-1} teeth
/// on [0, 1], identically zero for x <= 0. Depth i+1, width 2.
Network triangle_wave(int i);

/// [x/(2d) - 1/(4d) + 1/2]+ - [x/(2d) - 1/(4d) - 1/2]+: 0 below 1/2 - d,
/// 1 above 1/2 + d, linear in between.
Network soft_threshold(double delta);

/// soft_threshold(delta) applied to phi^i(x - 2^{-i-1}); recovers the i-th
/// binary digit of x in [0, 1] away from the switch points. Depth i+2.
Network bit_extractor(int i, double delta);

/// Parameters of a product network on [-M, M]^2.
struct MultiplierDesign {
  double bound;    // M
  double eps;      // target sup error (0 when built from an explicit bit count)
  int bits;        // k, number of extracted binary digits of the rescaled x
  double delta;    // half-width of the threshold band, in triangle-wave units
  double scale;    // x = scale * x' - M with x' the rescaled input

  /// Rescaled x-port value in [0, 1).
  double rescale(double x) const;
  /// True when x falls inside the threshold band of some extracted bit,
  /// where the error guarantee does not hold.
  bool in_bad_set(double x) const;
  /// Guaranteed |net(x, y) - xy| for x outside the bad set and |x|, |y| <= M.
  double error_bound() const;
};

struct MultiplierOptions {
  int max_bits = 48;
  /// Overrides the default band max(eps / (8 2^k M), M^2 2^-46 / eps).
  std::optional<double> delta;
};

MultiplierDesign multiplier_design(double bound, double eps, const MultiplierOptions& options = {});
MultiplierDesign multiplier_design_from_bits(double bound, int bits, double delta);

/// Two-input network approximating (x, y) -> xy on [-M, M]^2 to within eps
/// outside the bad set of its design. Width 2k+1, depth k+2.
Network multiplier(double bound, double eps, const MultiplierOptions& options = {});
Network multiplier(const MultiplierDesign& design);

/// x -> x * x through a multiplier with both ports fed by x.
Network square(double bound, double eps, const MultiplierOptions& options = {});
Network square(const MultiplierDesign& design);

/// 4 * ceil(log2(M/eps)) + 13 and ceil(2 log2(M/eps)) + 9.
std::size_t multiplier_width_limit(double bound, double eps);
std::size_t multiplier_depth_limit(double bound, double eps);

/// (x, y) -> alpha x + beta y, exactly, with one hidden layer of 4 neurons.
Network affine_adder(double alpha, double beta);

struct BallIndicatorOptions {
  /// Emit ~1 inside the unit ball instead of ~1 outside it.
  bool complement = false;
};

/// Depth-3 network that is ~1 where ||x||^2 >= 1 + shell_eps and ~0 where
/// ||x||^2 <= 1 - shell_eps (flip with `complement`). The first hidden layer
/// interpolates min{x_i^2, 4} per coordinate, the second is an exact ramp.
Network ball_indicator(int d, double delta, double shell_eps, BallIndicatorOptions options = {});
/// Knots per coordinate used by ball_indicator.
std::size_t ball_indicator_knots(int d, double delta);

/// f(z) = c + a z + sum_j jump_j [z - knot_j]+ on z >= 0.
struct RadialPWL {
  double constant = 0.0;
  double slope = 0.0;
  std::vector<double> knots;  // strictly increasing, >= 0
  std::vector<double> jumps;

  void validate() const;
  double operator()(double z) const;
};

/// x -> f(||x||_1), exactly, with hidden layers of width 2d and
/// |knots| + 1 (+1 when f has a constant term).
Network l1_radial(const RadialPWL& f, int d);

}  // namespace reluforge
