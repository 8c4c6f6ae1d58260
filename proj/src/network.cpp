#include "reluforge/network.hpp"

#include <algorithm>
#include <string>

#include "reluforge/error.hpp"

namespace reluforge {

namespace {

Layer relu_layer(Matrix w, Vector b) { return Layer{std::move(w), std::move(b), Activation::relu}; }

Layer output_layer(Matrix w) {
  Vector b = Vector::Zero(w.rows());
  return Layer{std::move(w), std::move(b), Activation::identity};
}

}  // namespace

Network::Network(std::size_t input_dim, std::vector<Layer> layers)
    : input_dim_(input_dim), layers_(std::move(layers)) {
  if (input_dim_ == 0) throw ValidationError("network input dimension must be positive");
  if (layers_.empty()) throw ValidationError("network needs at least one layer");
  std::size_t expected = input_dim_;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const Layer& layer = layers_[i];
    const std::string where = "layer " + std::to_string(i + 1);
    if (layer.inputs() != expected)
      throw ValidationError(where + " expects " + std::to_string(layer.inputs()) + " inputs, previous layer gives " +
                            std::to_string(expected));
    if (layer.outputs() == 0) throw ValidationError(where + " is empty");
    if (static_cast<std::size_t>(layer.bias.size()) != layer.outputs())
      throw ValidationError(where + " bias size does not match its output count");
    const bool last = i + 1 == layers_.size();
    if (last && layer.activation != Activation::identity)
      throw ValidationError("output layer must be linear");
    if (!last && layer.activation != Activation::relu) throw ValidationError(where + " must be a relu layer");
    if (last && !layer.bias.isZero(0.0)) throw ValidationError("output layer must have zero bias");
    if (!layer.weights.allFinite() || !layer.bias.allFinite())
      throw ValidationError(where + " has non-finite parameters");
    expected = layer.outputs();
  }
}

std::size_t Network::width() const {
  std::size_t w = 0;
  for (const auto& layer : layers_) w = std::max(w, layer.outputs());
  return w;
}

std::size_t Network::parameter_count() const {
  std::size_t n = 0;
  for (const auto& layer : layers_) n += layer.outputs() * (layer.inputs() + 1);
  return n;
}

Vector Network::evaluate(const Vector& x) const {
  if (static_cast<std::size_t>(x.size()) != input_dim_)
    throw ValidationError("input has dimension " + std::to_string(x.size()) + ", network expects " +
                          std::to_string(input_dim_));
  Vector h = x;
  for (const auto& layer : layers_) {
    Vector z = layer.weights * h + layer.bias;
    if (layer.activation == Activation::relu) z = z.cwiseMax(0.0);
    h = std::move(z);
  }
  return h;
}

Matrix Network::evaluate_batch(const Matrix& points) const {
  if (static_cast<std::size_t>(points.rows()) != input_dim_)
    throw ValidationError("batch rows do not match network input dimension");
  Matrix h = points;
  for (const auto& layer : layers_) {
    Matrix z = layer.weights * h;
    z.colwise() += layer.bias;
    if (layer.activation == Activation::relu) z = z.cwiseMax(0.0);
    h = std::move(z);
  }
  return h;
}

double Network::operator()(double x) const {
  Vector v(1);
  v[0] = x;
  return evaluate(v)[0];
}

double Network::operator()(std::span<const double> x) const {
  Vector v = Eigen::Map<const Vector>(x.data(), static_cast<Eigen::Index>(x.size()));
  return evaluate(v)[0];
}

Network identity_network(std::size_t n) {
  return Network(n, {output_layer(Matrix::Identity(n, n))});
}

Network stack(const Network& first, const Network& second) {
  if (first.output_dim() != second.input_dim())
    throw ValidationError("stack: first network outputs " + std::to_string(first.output_dim()) +
                          " values, second expects " + std::to_string(second.input_dim()));
  std::vector<Layer> layers(first.layers().begin(), first.layers().end() - 1);
  const Matrix& boundary = first.layers().back().weights;
  const Layer& head = second.layers().front();
  layers.push_back(Layer{head.weights * boundary, head.bias, head.activation});
  layers.insert(layers.end(), second.layers().begin() + 1, second.layers().end());
  return Network(first.input_dim(), std::move(layers));
}

Network propagate_pad(const Network& net, std::size_t target_depth) {
  if (target_depth < net.depth())
    throw ValidationError("propagate_pad: target depth " + std::to_string(target_depth) + " is below network depth " +
                          std::to_string(net.depth()));
  if (target_depth == net.depth()) return net;

  const auto n = static_cast<Eigen::Index>(net.output_dim());
  std::vector<Layer> layers(net.layers().begin(), net.layers().end() - 1);
  const Matrix& out = net.layers().back().weights;

  Matrix split(2 * n, out.cols());
  split << out, -out;
  layers.push_back(relu_layer(std::move(split), Vector::Zero(2 * n)));

  Matrix carry(2 * n, 2 * n);
  carry << Matrix::Identity(n, n), -Matrix::Identity(n, n), -Matrix::Identity(n, n), Matrix::Identity(n, n);
  while (layers.size() + 1 < target_depth) layers.push_back(relu_layer(carry, Vector::Zero(2 * n)));

  Matrix merge(n, 2 * n);
  merge << Matrix::Identity(n, n), -Matrix::Identity(n, n);
  layers.push_back(output_layer(std::move(merge)));
  return Network(net.input_dim(), std::move(layers));
}

Network parallel(const std::vector<ParallelPart>& parts, std::size_t input_dim) {
  if (parts.empty()) throw ValidationError("parallel: no networks given");
  std::size_t depth = 0;
  for (const auto& part : parts) {
    if (part.inputs.size() != part.net.input_dim())
      throw ValidationError("parallel: slice map size does not match a network's input dimension");
    for (auto idx : part.inputs)
      if (idx >= input_dim) throw ValidationError("parallel: slice index out of range");
    depth = std::max(depth, part.net.depth());
  }

  std::vector<Network> padded;
  padded.reserve(parts.size());
  for (const auto& part : parts) padded.push_back(propagate_pad(part.net, depth));

  std::vector<Layer> layers;
  for (std::size_t li = 0; li < depth; ++li) {
    Eigen::Index rows = 0, cols = 0;
    for (const auto& net : padded) {
      rows += static_cast<Eigen::Index>(net.layers()[li].outputs());
      cols += li == 0 ? 0 : static_cast<Eigen::Index>(net.layers()[li].inputs());
    }
    if (li == 0) cols = static_cast<Eigen::Index>(input_dim);
    Matrix w = Matrix::Zero(rows, cols);
    Vector b(rows);
    Eigen::Index r = 0, c = 0;
    for (std::size_t p = 0; p < padded.size(); ++p) {
      const Layer& layer = padded[p].layers()[li];
      const auto lr = static_cast<Eigen::Index>(layer.outputs());
      if (li == 0) {
        for (std::size_t k = 0; k < parts[p].inputs.size(); ++k)
          w.block(r, static_cast<Eigen::Index>(parts[p].inputs[k]), lr, 1) += layer.weights.col(static_cast<Eigen::Index>(k));
      } else {
        w.block(r, c, lr, layer.weights.cols()) = layer.weights;
        c += layer.weights.cols();
      }
      b.segment(r, lr) = layer.bias;
      r += lr;
    }
    layers.push_back(Layer{std::move(w), std::move(b), li + 1 == depth ? Activation::identity : Activation::relu});
  }
  return Network(input_dim, std::move(layers));
}

Network parallel(const std::vector<Network>& nets) {
  if (nets.empty()) throw ValidationError("parallel: no networks given");
  const std::size_t d = nets.front().input_dim();
  std::vector<ParallelPart> parts;
  for (const auto& net : nets) {
    if (net.input_dim() != d) throw ValidationError("parallel: shared-input networks must have equal input dimension");
    std::vector<std::size_t> all(d);
    for (std::size_t i = 0; i < d; ++i) all[i] = i;
    parts.push_back({net, std::move(all)});
  }
  return parallel(parts, d);
}

Network affine_pre(const Network& net, const Matrix& A, const Vector& b) {
  if (static_cast<std::size_t>(A.rows()) != net.input_dim() || A.rows() != b.size() || A.cols() == 0)
    throw ValidationError("affine_pre: A must be input_dim x k and b of length input_dim");
  std::vector<Layer> layers = net.layers();
  Layer& first = layers.front();
  if (first.activation == Activation::identity) {
    // Depth-1 network: the bias would land in the output layer.
    if (!(first.weights * b).isZero(0.0))
      throw ValidationError("affine_pre: offset on a purely linear network has no hidden layer to absorb it");
    first.weights = first.weights * A;
  } else {
    first.bias = first.bias + first.weights * b;
    first.weights = first.weights * A;
  }
  return Network(static_cast<std::size_t>(A.cols()), std::move(layers));
}

Network affine_post(const Network& net, const Matrix& C, const Vector& d) {
  if (static_cast<std::size_t>(C.cols()) != net.output_dim() || C.rows() != d.size() || C.rows() == 0)
    throw ValidationError("affine_post: C must be k x output_dim and d of length k");
  std::vector<Layer> layers = net.layers();
  Layer& last = layers.back();
  if (d.isZero(0.0)) {
    last.weights = C * last.weights;
    return Network(net.input_dim(), std::move(layers));
  }
  if (layers.size() < 2)
    throw ValidationError("affine_post: offset on a purely linear network has no hidden layer to absorb it");
  // A constant neuron [1]+ in the last hidden layer carries the offset.
  Layer& hidden = layers[layers.size() - 2];
  const auto h = hidden.weights.rows();
  hidden.weights.conservativeResize(h + 1, Eigen::NoChange);
  hidden.weights.row(h).setZero();
  hidden.bias.conservativeResize(h + 1);
  hidden.bias[h] = 1.0;
  Matrix w(C.rows(), h + 1);
  w << C * last.weights, d;
  last.weights = std::move(w);
  last.bias = Vector::Zero(C.rows());
  return Network(net.input_dim(), std::move(layers));
}

}  // namespace reluforge
