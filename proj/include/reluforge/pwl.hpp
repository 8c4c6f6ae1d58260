#pragma once

#include <cstdint>
#include <vector>

#include "reluforge/network.hpp"
#include "reluforge/quadrature.hpp"

namespace reluforge {

struct Segment {
  double slope = 0.0;
  double intercept = 0.0;
  double operator()(double t) const { return slope * t + intercept; }
};

/// Piecewise-linear function on [lower, upper]. Segment j covers
/// [breakpoint_{j-1}, breakpoint_j] with the domain ends as outer bounds.
class PiecewiseLinear1D {
 public:
  PiecewiseLinear1D(double lower, double upper, std::vector<double> breakpoints, std::vector<Segment> segments,
                    bool continuous = true);

  double lower() const { return lower_; }
  double upper() const { return upper_; }
  const std::vector<double>& breakpoints() const { return breakpoints_; }
  const std::vector<Segment>& segments() const { return segments_; }
  std::size_t segment_count() const { return segments_.size(); }
  bool continuous() const { return continuous_; }

  /// Left end of segment j (domain lower bound for j = 0).
  double segment_begin(std::size_t j) const { return j == 0 ? lower_ : breakpoints_[j - 1]; }
  double segment_end(std::size_t j) const { return j == breakpoints_.size() ? upper_ : breakpoints_[j]; }

  double operator()(double t) const;

 private:
  double lower_, upper_;
  std::vector<double> breakpoints_;
  std::vector<Segment> segments_;
  bool continuous_;
};

/// t -> base + t * direction for t in [lower, upper]; direction is unit length.
struct LineRestriction {
  Vector base;
  Vector direction;
  double lower = 0.0;
  double upper = 1.0;

  LineRestriction(Vector base, Vector direction, double lower, double upper);
  /// The scalar line x = t on [lower, upper].
  static LineRestriction scalar(double lower, double upper);
  Vector at(double t) const { return base + t * direction; }
};

struct RestrictOptions {
  /// Adjacent pieces whose slopes agree to this relative tolerance are
  /// reported as one segment (kinks of inner neurons that cancel out).
  double merge_tolerance = 1e-9;
};

/// Exact restriction of a scalar-output network to a line, by propagating
/// the affine pieces of every neuron layer by layer and splitting at the
/// analytic roots of each pre-activation.
PiecewiseLinear1D restrict_to_line(const Network& net, const LineRestriction& line, RestrictOptions options = {});

struct RegionBound {
  std::uint64_t value;
  bool saturated;  // (2m)^l did not fit; value is UINT64_MAX
};

/// (2m)^l: upper bound on the number of linear pieces along any line for a
/// network of width m and depth l.
RegionBound region_bound(std::uint64_t width, std::uint64_t depth);
inline std::size_t segment_count(const PiecewiseLinear1D& pwl) { return pwl.segment_count(); }

/// Integral over [a, b] of (f - pwl)^2 against Lebesgue measure, which is
/// the uniform distribution when the domain is [0, 1].
double l2_error(const PiecewiseLinear1D& pwl, const ScalarFunction& f, double a, double b);

struct OracleOptions {
  double lower = 0.0;
  double upper = 1.0;
  /// Refit the optimal partition with a continuous piecewise-linear function.
  bool continuous = false;
};

struct OracleResult {
  double error;                     // summed squared L2 error over the pieces
  std::vector<double> breakpoints;  // interior knots of the optimal partition
  PiecewiseLinear1D fit;
};

/// Best fit of f by at most n linear pieces with knots restricted to a
/// uniform grid of `grid_resolution` cells. The result is an upper bound on
/// the infimum over all n-piece fits and converges to it as the grid is
/// refined. Pieces are fitted independently (discontinuous) unless
/// `options.continuous` is set.
OracleResult optimal_pwl_oracle(const ScalarFunction& f, int n, int grid_resolution, OracleOptions options = {});

}  // namespace reluforge
