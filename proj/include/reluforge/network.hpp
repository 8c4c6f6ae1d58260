#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace reluforge {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

enum class Activation { relu, identity };

struct Layer {
  Matrix weights;  // n_out x n_in
  Vector bias;     // n_out
  Activation activation = Activation::relu;

  std::size_t inputs() const { return static_cast<std::size_t>(weights.cols()); }
  std::size_t outputs() const { return static_cast<std::size_t>(weights.rows()); }
};

/// Feed-forward ReLU network. Interior layers are ReLU, the last layer is
/// linear with zero bias. Depth counts weight layers including the output
/// layer, so one hidden layer plus the output is a depth-2 network.
///
/// Immutable once constructed; the constructor validates every invariant.
class Network {
 public:
  Network(std::size_t input_dim, std::vector<Layer> layers);

  std::size_t input_dim() const { return input_dim_; }
  std::size_t output_dim() const { return layers_.back().outputs(); }
  std::size_t depth() const { return layers_.size(); }
  /// Maximum layer size over all layers, output layer included.
  std::size_t width() const;
  /// Total number of weights and biases.
  std::size_t parameter_count() const;
  const std::vector<Layer>& layers() const { return layers_; }

  Vector evaluate(const Vector& x) const;
  /// Columns of `points` are inputs; returns one output column per input.
  Matrix evaluate_batch(const Matrix& points) const;
  /// Convenience for scalar-input, scalar-output networks.
  double operator()(double x) const;
  double operator()(std::span<const double> x) const;

 private:
  std::size_t input_dim_;
  std::vector<Layer> layers_;
};

/// Purely linear depth-1 network computing x -> x on R^n.
Network identity_network(std::size_t n);

/// second(first(x)). The linear output layer of `first` is folded into the
/// first layer of `second`: depth(first) + depth(second) - 1.
Network stack(const Network& first, const Network& second);

/// One block of a parallel combination: `net` reads `inputs` (indices into
/// the shared input vector, in order).
struct ParallelPart {
  Network net;
  std::vector<std::size_t> inputs;
};

/// Block-diagonal combination; outputs are concatenated in part order.
/// Shorter parts are padded with carried values up to the common depth.
Network parallel(const std::vector<ParallelPart>& parts, std::size_t input_dim);
/// Every net reads the whole (shared) input.
Network parallel(const std::vector<Network>& nets);

/// Pointwise-equal network of exactly `target_depth` layers. Each output
/// value v is carried through the extra layers as [v]+ - [-v]+.
Network propagate_pad(const Network& net, std::size_t target_depth);

/// x -> net(A x + b). Depth is unchanged.
Network affine_pre(const Network& net, const Matrix& A, const Vector& b);
/// x -> C net(x) + d. Depth is unchanged. A nonzero offset needs a hidden
/// layer to hold a constant neuron, so it is rejected on depth-1 networks.
Network affine_post(const Network& net, const Matrix& C, const Vector& d);

/// Text format, see README. Round trip is exact (17 significant digits).
void write_network(std::ostream& out, const Network& net);
Network read_network(std::istream& in);
void save(const Network& net, const std::filesystem::path& path);
Network load(const std::filesystem::path& path);

}  // namespace reluforge
