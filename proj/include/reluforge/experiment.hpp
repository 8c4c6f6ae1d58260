#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "reluforge/network.hpp"

namespace reluforge {

struct DatasetSpec {
  int d = 20;
  std::size_t n_train = 100000;
  std::size_t n_valid = 10000;
  double r_max = 2.0;
  std::uint64_t seed = 1;

  void validate() const;
};

/// Points are columns. Labels are 1 inside the closed unit ball, else 0.
struct Dataset {
  Matrix x_train;
  Vector y_train;
  Matrix x_valid;
  Vector y_valid;
};

/// x = r u with u uniform on the sphere and r uniform on [0, r_max].
Dataset generate_dataset(const DatasetSpec& spec);

/// Fully connected ReLU net with a single linear output.
struct Mlp {
  std::vector<Matrix> weights;
  std::vector<Vector> biases;

  /// Gaussian weights with standard deviation sqrt(2 / fan_in), zero biases.
  static Mlp he_init(int input_dim, const std::vector<int>& hidden, std::uint64_t seed);

  std::size_t parameter_count() const;
  Vector parameters() const;
  void set_parameters(const Vector& flat);
  /// Columns of x are inputs; returns one prediction per column.
  Vector predict(const Matrix& x) const;
  Network to_network() const;
};

struct LossGradient {
  double loss = 0.0;  // mean squared error over the batch
  Vector gradient;    // flattened like Mlp::parameters()
};

/// Backpropagation of the mean squared error. The ReLU derivative at 0 is 0.
LossGradient loss_and_gradient(const Mlp& net, const Matrix& x, const Vector& y);

/// Classical momentum: v <- mu v - lr g, theta <- theta + v.
struct MomentumSgd {
  double momentum = 0.95;
  Vector velocity;

  void step(Vector& params, const Vector& gradient, double lr);
};

struct TrainConfig {
  std::vector<int> hidden;
  std::size_t batch_size = 100;
  double momentum = 0.95;
  double lr = 0.1;
  double decay = 0.95;
  std::size_t decay_period = 1000;
  double lr_floor = 1e-4;
  /// Cap on the number of batches. Without it training stops when the
  /// schedule reaches lr_floor.
  std::optional<std::size_t> max_batches;
  std::size_t window = 200;
  /// Size of the fixed training subsample used for train RMSE.
  std::size_t train_eval_samples = 10000;
  std::uint64_t seed = 1;

  void validate() const;
  /// Batches until the schedule first drops below lr_floor, capped.
  std::size_t total_batches() const;
};

struct CurvePoint {
  std::size_t batch;
  double train_rmse;
  double valid_rmse;
};

struct TrainRun {
  TrainConfig config;
  std::vector<CurvePoint> curve;
  std::size_t params = 0;
  std::uint64_t digest = 0;  // FNV-1a over the final parameter bytes
  Mlp model;

  double final_valid_rmse() const { return curve.empty() ? 0.0 : curve.back().valid_rmse; }
};

double rmse(const Mlp& net, const Matrix& x, const Vector& y);

/// Shuffled mini-batch SGD with momentum and step decay. Deterministic given
/// the config seed. Throws ComputationError when an RMSE exceeds 1e3.
TrainRun train(const Dataset& data, const TrainConfig& config);

struct SweepConfig {
  int d = 20;
  double scale = 0.2;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  /// Hidden widths at scale 1; scaled widths are rounded and at least 1.
  std::vector<int> three_layer{100, 20};
  std::vector<int> two_layer{100, 200, 400, 800};
  std::size_t n_train = 500000;  // at scale 1
  std::size_t n_valid = 10000;
  double r_max = 2.0;
  std::optional<std::size_t> max_batches;
  TrainConfig base;  // schedule settings; hidden and seed are overridden
};

struct SweepCell {
  std::string arch;  // e.g. "3L-20-4", "2L-40"
  std::vector<int> hidden;
  std::uint64_t seed;
  TrainRun run;
};

struct SweepResult {
  std::vector<SweepCell> cells;  // architectures in config order, then seeds
  std::size_t n_train = 0;

  /// Per seed: true when the 3-layer net's final validation RMSE is below
  /// every 2-layer net's.
  std::vector<bool> deep_wins() const;
  /// Per seed: successive improvements from doubling the 2-layer width.
  std::vector<std::vector<double>> width_improvements() const;
  /// Per seed: improvements are non-increasing.
  std::vector<bool> diminishing_returns() const;
};

std::vector<int> scaled_widths(const std::vector<int>& widths, double scale);
std::string arch_name(const std::vector<int>& hidden);

/// Trains the 3-layer architecture and every 2-layer width for every seed.
/// The dataset for seed s is generated with seed s.
SweepResult depth_vs_width_sweep(const SweepConfig& config);

}  // namespace reluforge
