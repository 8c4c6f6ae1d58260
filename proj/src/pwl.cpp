#include "reluforge/pwl.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "reluforge/error.hpp"

namespace reluforge {

PiecewiseLinear1D::PiecewiseLinear1D(double lower, double upper, std::vector<double> breakpoints,
                                     std::vector<Segment> segments, bool continuous)
    : lower_(lower), upper_(upper), breakpoints_(std::move(breakpoints)), segments_(std::move(segments)),
      continuous_(continuous) {
  if (!(lower_ < upper_)) throw ValidationError("piecewise-linear domain must satisfy lower < upper");
  if (segments_.size() != breakpoints_.size() + 1)
    throw ValidationError("segment count must equal breakpoint count + 1");
  double prev = lower_;
  for (double bp : breakpoints_) {
    if (!(bp > prev)) throw ValidationError("breakpoints must be strictly increasing and interior");
    prev = bp;
  }
  if (!breakpoints_.empty() && !(breakpoints_.back() < upper_))
    throw ValidationError("breakpoints must be strictly increasing and interior");
  if (continuous_) {
    for (std::size_t j = 0; j < breakpoints_.size(); ++j) {
      const double t = breakpoints_[j];
      const Segment& l = segments_[j];
      const Segment& r = segments_[j + 1];
      const double scale =
          std::max({1.0, std::abs(l.slope * t), std::abs(l.intercept), std::abs(r.slope * t), std::abs(r.intercept)});
      if (std::abs(l(t) - r(t)) > 1e-9 * scale)
        throw ValidationError("piecewise-linear function is discontinuous at t=" + std::to_string(t));
    }
  }
}

double PiecewiseLinear1D::operator()(double t) const {
  const auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), t);
  return segments_[static_cast<std::size_t>(it - breakpoints_.begin())](t);
}

LineRestriction::LineRestriction(Vector base_, Vector direction_, double lower_, double upper_)
    : base(std::move(base_)), direction(std::move(direction_)), lower(lower_), upper(upper_) {
  if (base.size() != direction.size() || base.size() == 0)
    throw ValidationError("line base and direction must have equal positive dimension");
  if (std::abs(direction.norm() - 1.0) > 1e-12) throw ValidationError("line direction must have unit norm");
  if (!(lower < upper)) throw ValidationError("line range must satisfy lower < upper");
}

LineRestriction LineRestriction::scalar(double lower, double upper) {
  return LineRestriction(Vector::Zero(1), Vector::Ones(1), lower, upper);
}

namespace {

// Affine pieces of every neuron of one layer over a partition of the line.
// Column p of `slope`/`offset` describes the layer on [ends[p], ends[p+1]].
struct LayerPieces {
  std::vector<double> ends;
  Matrix slope;
  Matrix offset;
};

// A root counts as a tie with a piece end when the pre-activation there is
// zero up to the rounding of s * t + o.
bool vanishes(double s, double o, double t) {
  return std::abs(s * t + o) <= 64.0 * std::numeric_limits<double>::epsilon() * (std::abs(s * t) + std::abs(o));
}

LayerPieces apply_relu(const Matrix& zs, const Matrix& zo, const std::vector<double>& ends) {
  LayerPieces out;
  out.ends.push_back(ends.front());
  std::vector<Eigen::Index> source;
  std::vector<double> roots;
  const Eigen::Index width = zs.rows();
  for (std::size_t p = 0; p + 1 < ends.size(); ++p) {
    const double lo = ends[p], hi = ends[p + 1];
    roots.clear();
    for (Eigen::Index n = 0; n < width; ++n) {
      const double s = zs(n, static_cast<Eigen::Index>(p)), o = zo(n, static_cast<Eigen::Index>(p));
      if (s == 0.0) continue;  // constant on the piece: no sign change
      const double t = -o / s;
      if (t > lo && t < hi && !vanishes(s, o, lo) && !vanishes(s, o, hi)) roots.push_back(t);
    }
  std::sort(roots.begin(), roots.end());
    double last = lo;
    for (double t : roots) {
      if (t <= last) continue;
      out.ends.push_back(t);
      source.push_back(static_cast<Eigen::Index>(p));
      last = t;
    }
    out.ends.push_back(hi);
    source.push_back(static_cast<Eigen::Index>(p));
  }

  const auto pieces = static_cast<Eigen::Index>(source.size());
  out.slope.resize(width, pieces);
  out.offset.resize(width, pieces);
  for (Eigen::Index q = 0; q < pieces; ++q) {
    const Eigen::Index p = source[static_cast<std::size_t>(q)];
    const double mid = 0.5 * (out.ends[static_cast<std::size_t>(q)] + out.ends[static_cast<std::size_t>(q) + 1]);
    for (Eigen::Index n = 0; n < width; ++n) {
      const double s = zs(n, p), o = zo(n, p);
      const bool active = s * mid + o > 0.0;
      out.slope(n, q) = active ? s : 0.0;
      out.offset(n, q) = active ? o : 0.0;
    }
  }
  return out;
}

}  // namespace

PiecewiseLinear1D restrict_to_line(const Network& net, const LineRestriction& line, RestrictOptions options) {
  if (static_cast<std::size_t>(line.base.size()) != net.input_dim())
    throw ValidationError("line dimension does not match network input dimension");
  if (net.output_dim() != 1) throw ValidationError("restrict_to_line needs a scalar-output network");

  LayerPieces cur;
  cur.ends = {line.lower, line.upper};
  cur.slope = line.direction;
  cur.offset = line.base;
  for (const Layer& layer : net.layers()) {
    Matrix zs = layer.weights * cur.slope;
    Matrix zo = layer.weights * cur.offset;
    zo.colwise() += layer.bias;
    if (layer.activation == Activation::relu) {
      cur = apply_relu(zs, zo, cur.ends);
    } else {
      cur.slope = std::move(zs);
      cur.offset = std::move(zo);
    }
  }

  std::vector<double> breakpoints;
  std::vector<Segment> pieces;
  pieces.push_back({cur.slope(0, 0), cur.offset(0, 0)});
  for (Eigen::Index q = 1; q < cur.slope.cols(); ++q) {
    const Segment next{cur.slope(0, q), cur.offset(0, q)};
    const Segment& prev = pieces.back();
    const double scale = std::max({1.0, std::abs(prev.slope), std::abs(next.slope)});
    if (std::abs(prev.slope - next.slope) <= options.merge_tolerance * scale) continue;
    breakpoints.push_back(cur.ends[static_cast<std::size_t>(q)]);
    pieces.push_back(next);
  }

  // Rebuild every piece from its end values. Neighbouring formulas agree at
  // a knot only up to the rounding of the large cancelling terms inside deep
  // constructions; interpolating the knot values keeps the result continuous.
  std::vector<double> knots{line.lower}, values{pieces.front()(line.lower)};
  for (std::size_t j = 0; j < breakpoints.size(); ++j) {
    knots.push_back(breakpoints[j]);
    values.push_back(0.5 * (pieces[j](breakpoints[j]) + pieces[j + 1](breakpoints[j])));
  }
  knots.push_back(line.upper);
  values.push_back(pieces.back()(line.upper));
  std::vector<Segment> segments;
  for (std::size_t j = 0; j + 1 < knots.size(); ++j) {
    const double slope = (values[j + 1] - values[j]) / (knots[j + 1] - knots[j]);
    segments.push_back({slope, values[j] - slope * knots[j]});
  }
  return PiecewiseLinear1D(line.lower, line.upper, std::move(breakpoints), std::move(segments));
}

RegionBound region_bound(std::uint64_t width, std::uint64_t depth) {
  if (width < 1 || depth < 1) throw ValidationError("region_bound needs width >= 1 and depth >= 1");
  constexpr auto max = std::numeric_limits<std::uint64_t>::max();
  if (width > max / 2) return {max, true};
  const std::uint64_t base = 2 * width;
  std::uint64_t value = 1;
  for (std::uint64_t i = 0; i < depth; ++i) {
    if (value > max / base) return {max, true};
    value *= base;
  }
  return {value, false};
}

double l2_error(const PiecewiseLinear1D& pwl, const ScalarFunction& f, double a, double b) {
  if (!(a < b) || a < pwl.lower() || b > pwl.upper())
    throw ValidationError("l2_error interval must lie inside the piecewise-linear domain");
  double total = 0.0;
  for (std::size_t j = 0; j < pwl.segment_count(); ++j) {
    const double lo = std::max(a, pwl.segment_begin(j));
    const double hi = std::min(b, pwl.segment_end(j));
    if (!(lo < hi)) continue;
    const Segment seg = pwl.segments()[j];
    total += quadrature::integrate(
        [&](double t) {
          const double r = f(t) - seg(t);
          return r * r;
        },
        lo, hi);
  }
  return total;
}

}  // namespace reluforge
