#include "reluforge/constructors.hpp"

#include <cmath>
#include <string>

#include "reluforge/error.hpp"

namespace reluforge {

namespace {

Layer hidden(Matrix w, Vector b) { return Layer{std::move(w), std::move(b), Activation::relu}; }
Layer linear_out(Matrix w) {
  const auto rows = w.rows();
  return Layer{std::move(w), Vector::Zero(rows), Activation::identity};
}

Network phi() {
  Matrix w(2, 1);
  w << 2.0, 4.0;
  Vector b(2);
  b << 0.0, -2.0;
  Matrix out(1, 2);
  out << 1.0, -1.0;
  return Network(1, {hidden(std::move(w), std::move(b)), linear_out(std::move(out))});
}

}  // namespace

Network triangle_wave(int i) {
  if (i < 1) throw ValidationError("triangle_wave needs i >= 1");
  Network net = phi();
  for (int k = 1; k < i; ++k) net = stack(net, phi());
  return net;
}

Network soft_threshold(double delta) {
  if (!(delta > 0.0) || !std::isfinite(delta)) throw ValidationError("soft_threshold needs delta > 0");
  const double s = 1.0 / (2.0 * delta);
  const double shift = -1.0 / (4.0 * delta);
  Matrix w(2, 1);
  w << s, s;
  Vector b(2);
  b << shift + 0.5, shift - 0.5;
  Matrix out(1, 2);
  out << 1.0, -1.0;
  return Network(1, {hidden(std::move(w), std::move(b)), linear_out(std::move(out))});
}

Network bit_extractor(int i, double delta) {
  if (i < 1) throw ValidationError("bit_extractor needs i >= 1");
  Matrix a = Matrix::Ones(1, 1);
  Vector shift = Vector::Constant(1, -std::ldexp(1.0, -i - 1));
  return stack(affine_pre(triangle_wave(i), a, shift), soft_threshold(delta));
}

Network affine_adder(double alpha, double beta) {
  Matrix w(4, 2);
  w << 1, 0, -1, 0, 0, 1, 0, -1;
  Matrix out(1, 4);
  out << alpha, -alpha, beta, -beta;
  return Network(2, {hidden(std::move(w), Vector::Zero(4)), linear_out(std::move(out))});
}

std::size_t ball_indicator_knots(int d, double delta) {
  if (d < 1) throw ValidationError("ball_indicator needs d >= 1");
  if (!(delta > 0.0)) throw ValidationError("ball_indicator needs delta > 0");
  return static_cast<std::size_t>(std::max(2.0, std::floor(8.0 * d / delta)));
}

Network ball_indicator(int d, double delta, double shell_eps, BallIndicatorOptions options) {
  const std::size_t knots = ball_indicator_knots(d, delta);
  if (!(shell_eps > 2.0 * delta)) throw ValidationError("ball_indicator needs shell_eps > 2 delta");
  if (!(shell_eps < 1.0)) throw ValidationError("ball_indicator needs shell_eps < 1");
  if (1.0 + std::sqrt(delta / 2.0) > std::sqrt(2.0)) throw ValidationError("ball_indicator needs delta <= 0.34");

  // Linear interpolation of l(x) = min{x^2, 4} on uniform knots over [-2, 2],
  // written as 4 + sum_j jump_j [x - t_j]+.
  const double h = 4.0 / static_cast<double>(knots - 1);
  if (h * h / 4.0 > delta / d) throw ComputationError("ball_indicator knot spacing too coarse");
  std::vector<double> t(knots), jump(knots);
  double prev_slope = 0.0;
  for (std::size_t j = 0; j < knots; ++j) {
    t[j] = -2.0 + h * static_cast<double>(j);
    double slope = 0.0;
    if (j + 1 < knots) {
      const double right = -2.0 + h * static_cast<double>(j + 1);
      slope = (std::min(right * right, 4.0) - std::min(t[j] * t[j], 4.0)) / h;
    }
    jump[j] = slope - prev_slope;
    prev_slope = slope;
  }

  const auto width = static_cast<Eigen::Index>(knots) * d;
  Matrix w1 = Matrix::Zero(width, d);
  Vector b1(width);
  for (int i = 0; i < d; ++i)
    for (std::size_t j = 0; j < knots; ++j) {
      const auto row = static_cast<Eigen::Index>(i * static_cast<int>(knots) + static_cast<int>(j));
      w1(row, i) = 1.0;
      b1[row] = -t[j];
    }

  // z = c (l~(x) - 1) with c = 1/shell_eps; ramp [z + 1/2]+ - [z - 1/2]+.
  // The complement uses -z, which turns the ramp into 1 - ramp(z).
  const double c = (options.complement ? -1.0 : 1.0) / shell_eps;
  Matrix w2(2, width);
  Vector b2(2);
  for (Eigen::Index r = 0; r < width; ++r) {
    w2(0, r) = c * jump[static_cast<std::size_t>(r) % knots];
    w2(1, r) = w2(0, r);
  }
  const double z0 = c * (4.0 * d - 1.0);
  b2 << z0 + 0.5, z0 - 0.5;
  Matrix out(1, 2);
  out << 1.0, -1.0;

  Network net(static_cast<std::size_t>(d), {hidden(std::move(w1), std::move(b1)), hidden(std::move(w2), std::move(b2)),
                                             linear_out(std::move(out))});
  const double limit = std::max(8.0 * d * d / delta, std::sqrt(1.0 / (2.0 * delta)));
  if (static_cast<double>(net.width()) > limit) throw ComputationError("ball_indicator exceeds its width budget");
  return net;
}

void RadialPWL::validate() const {
  if (knots.size() != jumps.size()) throw ValidationError("radial function needs one jump per knot");
  if (!std::isfinite(constant) || !std::isfinite(slope)) throw ValidationError("radial function must be finite");
  for (std::size_t j = 0; j < knots.size(); ++j) {
    if (!std::isfinite(knots[j]) || !std::isfinite(jumps[j])) throw ValidationError("radial function must be finite");
    if (knots[j] < 0.0) throw ValidationError("radial knots must be non-negative");
    if (j > 0 && !(knots[j] > knots[j - 1])) throw ValidationError("radial knots must be strictly increasing");
  }
}

double RadialPWL::operator()(double z) const {
  double v = constant + slope * z;
  for (std::size_t j = 0; j < knots.size(); ++j) v += jumps[j] * std::max(0.0, z - knots[j]);
  return v;
}

Network l1_radial(const RadialPWL& f, int d) {
  f.validate();
  if (d < 1) throw ValidationError("l1_radial needs d >= 1");
  Matrix w1 = Matrix::Zero(2 * d, d);
  for (int i = 0; i < d; ++i) {
    w1(2 * i, i) = 1.0;
    w1(2 * i + 1, i) = -1.0;
  }

  const bool has_constant = f.constant != 0.0;
  const auto n2 = static_cast<Eigen::Index>(f.knots.size() + 1 + (has_constant ? 1 : 0));
  Matrix w2 = Matrix::Zero(n2, 2 * d);
  Vector b2 = Vector::Zero(n2);
  Matrix out(1, n2);
  // Row 0 passes ||x||_1 through; it is non-negative so the ReLU is exact.
  w2.row(0).setOnes();
  out(0, 0) = f.slope;
  for (std::size_t j = 0; j < f.knots.size(); ++j) {
    const auto r = static_cast<Eigen::Index>(j + 1);
    w2.row(r).setOnes();
    b2[r] = -f.knots[j];
    out(0, r) = f.jumps[j];
  }
  if (has_constant) {
    b2[n2 - 1] = 1.0;
    out(0, n2 - 1) = f.constant;
  }
  return Network(static_cast<std::size_t>(d), {hidden(std::move(w1), Vector::Zero(2 * d)),
                                               hidden(std::move(w2), std::move(b2)), linear_out(std::move(out))});
}

}  // namespace reluforge
