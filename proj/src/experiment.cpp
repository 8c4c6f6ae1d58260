#include "reluforge/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <map>
#include <numeric>
#include <random>

#include "reluforge/error.hpp"
#include "reluforge/io.hpp"
#include "reluforge/parallel.hpp"

namespace reluforge {

namespace {

std::mt19937_64 seeded(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream)};
  return std::mt19937_64(seq);
}

void fill_points(Matrix& x, Vector& y, double r_max, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> radius(0.0, r_max);
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    double norm = 0.0;
    do {
      for (Eigen::Index i = 0; i < x.rows(); ++i) x(i, j) = normal(rng);
      norm = x.col(j).norm();
    } while (norm == 0.0);
    const double r = radius(rng);
    x.col(j) *= r / norm;
    y[j] = x.col(j).norm() <= 1.0 ? 1.0 : 0.0;
  }
}

std::uint64_t fnv1a(const Vector& v) {
  std::uint64_t h = 14695981039346656037ULL;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    unsigned char bytes[sizeof(double)];
    const double value = v[i];
    std::memcpy(bytes, &value, sizeof value);
    for (unsigned char b : bytes) {
      h ^= b;
      h *= 1099511628211ULL;
    }
  }
  return h;
}

}  // namespace

void DatasetSpec::validate() const {
  if (d < 1) throw ValidationError("dataset needs d >= 1");
  if (n_train < 1 || n_valid < 1) throw ValidationError("dataset needs at least one train and one valid sample");
  if (!(r_max > 1.0) || !std::isfinite(r_max)) throw ValidationError("dataset needs r_max > 1");
}

Dataset generate_dataset(const DatasetSpec& spec) {
  spec.validate();
  Dataset data;
  auto rng = seeded(spec.seed, 0);
  data.x_train.resize(spec.d, static_cast<Eigen::Index>(spec.n_train));
  data.y_train.resize(static_cast<Eigen::Index>(spec.n_train));
  data.x_valid.resize(spec.d, static_cast<Eigen::Index>(spec.n_valid));
  data.y_valid.resize(static_cast<Eigen::Index>(spec.n_valid));
  fill_points(data.x_train, data.y_train, spec.r_max, rng);
  fill_points(data.x_valid, data.y_valid, spec.r_max, rng);
  return data;
}

Mlp Mlp::he_init(int input_dim, const std::vector<int>& hidden, std::uint64_t seed) {
  if (input_dim < 1) throw ValidationError("network needs at least one input");
  auto rng = seeded(seed, 1);
  std::normal_distribution<double> normal(0.0, 1.0);
  Mlp net;
  int fan_in = input_dim;
  std::vector<int> sizes = hidden;
  sizes.push_back(1);
  for (int out : sizes) {
    if (out < 1) throw ValidationError("hidden widths must be positive");
    const double sd = std::sqrt(2.0 / fan_in);
    Matrix w(out, fan_in);
    for (Eigen::Index c = 0; c < w.cols(); ++c)
      for (Eigen::Index r = 0; r < w.rows(); ++r) w(r, c) = sd * normal(rng);
    net.weights.push_back(std::move(w));
    net.biases.push_back(Vector::Zero(out));
    fan_in = out;
  }
  return net;
}

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) n += static_cast<std::size_t>(weights[l].size() + biases[l].size());
  return n;
}

Vector Mlp::parameters() const {
  Vector flat(static_cast<Eigen::Index>(parameter_count()));
  Eigen::Index at = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    flat.segment(at, weights[l].size()) = weights[l].reshaped();
    at += weights[l].size();
    flat.segment(at, biases[l].size()) = biases[l];
    at += biases[l].size();
  }
  return flat;
}

void Mlp::set_parameters(const Vector& flat) {
  if (static_cast<std::size_t>(flat.size()) != parameter_count()) throw ValidationError("parameter vector has the wrong size");
  Eigen::Index at = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    weights[l].reshaped() = flat.segment(at, weights[l].size());
    at += weights[l].size();
    biases[l] = flat.segment(at, biases[l].size());
    at += biases[l].size();
  }
}

Vector Mlp::predict(const Matrix& x) const {
  Matrix a = x;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    Matrix z = (weights[l] * a).colwise() + biases[l];
    a = l + 1 < weights.size() ? Matrix(z.cwiseMax(0.0)) : z;
  }
  return a.row(0).transpose();
}

Network Mlp::to_network() const {
  std::vector<Layer> layers;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    const bool last = l + 1 == weights.size();
    layers.push_back(Layer{weights[l], last ? Vector::Zero(biases[l].size()) : biases[l],
                           last ? Activation::identity : Activation::relu});
  }
  Network net(static_cast<std::size_t>(weights.front().cols()), std::move(layers));
  if (biases.back()[0] == 0.0 || weights.size() == 1) return net;
  return affine_post(net, Matrix::Ones(1, 1), biases.back());
}

LossGradient loss_and_gradient(const Mlp& net, const Matrix& x, const Vector& y) {
  const std::size_t depth = net.weights.size();
  const auto batch = static_cast<double>(x.cols());
  std::vector<Matrix> acts{x};
  std::vector<Matrix> pre;
  for (std::size_t l = 0; l < depth; ++l) {
    pre.push_back((net.weights[l] * acts.back()).colwise() + net.biases[l]);
    if (l + 1 < depth) acts.push_back(pre.back().cwiseMax(0.0));
  }
  const Eigen::RowVectorXd residual = pre.back().row(0) - y.transpose();

  LossGradient out;
  out.loss = residual.squaredNorm() / batch;
  out.gradient.resize(static_cast<Eigen::Index>(net.parameter_count()));

  std::vector<Eigen::Index> offsets(depth);
  Eigen::Index at = 0;
  for (std::size_t l = 0; l < depth; ++l) {
    offsets[l] = at;
    at += net.weights[l].size() + net.biases[l].size();
  }

  Matrix delta = (2.0 / batch) * residual;
  for (std::size_t l = depth; l-- > 0;) {
    const Matrix gw = delta * acts[l].transpose();
    out.gradient.segment(offsets[l], gw.size()) = gw.reshaped();
    out.gradient.segment(offsets[l] + gw.size(), net.biases[l].size()) = delta.rowwise().sum();
    if (l == 0) break;
    Matrix back = net.weights[l].transpose() * delta;
    delta = back.cwiseProduct((pre[l - 1].array() > 0.0).cast<double>().matrix());
  }
  return out;
}

void MomentumSgd::step(Vector& params, const Vector& gradient, double lr) {
  if (velocity.size() != params.size()) velocity = Vector::Zero(params.size());
  velocity = momentum * velocity - lr * gradient;
  params += velocity;
}

void TrainConfig::validate() const {
  if (hidden.empty()) throw ValidationError("architecture needs at least one hidden layer");
  for (int w : hidden)
    if (w < 1) throw ValidationError("hidden widths must be positive");
  if (batch_size < 1 || decay_period < 1 || window < 1 || train_eval_samples < 1)
    throw ValidationError("batch size, decay period, window and eval samples must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ValidationError("momentum must lie in [0, 1)");
  if (!(lr > 0.0) || !(decay > 0.0 && decay <= 1.0) || !(lr_floor > 0.0))
    throw ValidationError("learning-rate schedule must be positive with decay in (0, 1]");
  if (max_batches && *max_batches < 1) throw ValidationError("max batches must be positive");
  if (!max_batches && decay == 1.0 && lr >= lr_floor)
    throw ValidationError("schedule never reaches the lr floor; set max batches");
}

std::size_t TrainConfig::total_batches() const {
  std::size_t scheduled = 0;
  if (lr >= lr_floor && decay < 1.0) {
    // Number of decay steps m with lr decay^m >= floor.
    const auto steps = static_cast<std::size_t>(std::floor(std::log(lr_floor / lr) / std::log(decay) + 1e-9)) + 1;
    scheduled = steps * decay_period;
  } else if (lr >= lr_floor) {
    scheduled = max_batches.value_or(0);
  }
  return max_batches ? std::min(scheduled, *max_batches) : scheduled;
}

double rmse(const Mlp& net, const Matrix& x, const Vector& y) {
  return std::sqrt((net.predict(x) - y).squaredNorm() / static_cast<double>(y.size()));
}

TrainRun train(const Dataset& data, const TrainConfig& config) {
  config.validate();
  const auto n = static_cast<std::size_t>(data.x_train.cols());
  const Eigen::Index d = data.x_train.rows();
  if (n == 0 || data.x_valid.cols() == 0) throw ValidationError("training needs non-empty train and valid sets");

  TrainRun run;
  run.config = config;
  run.model = Mlp::he_init(static_cast<int>(d), config.hidden, config.seed);
  auto rng = seeded(config.seed, 2);

  const auto eval_n = static_cast<Eigen::Index>(std::min(n, config.train_eval_samples));
  const Matrix x_eval = data.x_train.leftCols(eval_n);
  const Vector y_eval = data.y_train.head(eval_n);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::size_t cursor = n;

  const std::size_t total = config.total_batches();
  const auto bs = static_cast<Eigen::Index>(config.batch_size);
  Matrix xb(d, bs);
  Vector yb(bs);
  MomentumSgd opt{config.momentum, Vector()};
  Vector params = run.model.parameters();

  auto evaluate = [&](std::size_t batch) {
    const double tr = rmse(run.model, x_eval, y_eval);
    const double va = rmse(run.model, data.x_valid, data.y_valid);
    if (!std::isfinite(tr) || !std::isfinite(va) || tr > 1e3 || va > 1e3)
      throw ComputationError("training diverged at batch " + std::to_string(batch) + " (train rmse " +
                             io::format_double(tr, 6) + ", lr " + io::format_double(config.lr, 6) + ")");
    run.curve.push_back({batch, tr, va});
  };

  for (std::size_t t = 0; t < total; ++t) {
    for (Eigen::Index j = 0; j < bs; ++j) {
      if (cursor == n) {
        std::shuffle(order.begin(), order.end(), rng);
        cursor = 0;
      }
      const auto src = static_cast<Eigen::Index>(order[cursor++]);
      xb.col(j) = data.x_train.col(src);
      yb[j] = data.y_train[src];
    }
    const double lr = config.lr * std::pow(config.decay, static_cast<double>(t / config.decay_period));
    const LossGradient lg = loss_and_gradient(run.model, xb, yb);
    opt.step(params, lg.gradient, lr);
    run.model.set_parameters(params);
    if ((t + 1) % config.window == 0 || t + 1 == total) evaluate(t + 1);
  }
  if (run.curve.empty()) evaluate(0);

  run.params = run.model.parameter_count();
  run.digest = fnv1a(params);
  return run;
}

std::vector<int> scaled_widths(const std::vector<int>& widths, double scale) {
  std::vector<int> out;
  for (int w : widths) out.push_back(std::max(1, static_cast<int>(std::lround(w * scale))));
  return out;
}

std::string arch_name(const std::vector<int>& hidden) {
  std::string name = std::to_string(hidden.size() + 1) + "L";
  for (int w : hidden) name += "-" + std::to_string(w);
  return name;
}

std::vector<bool> SweepResult::deep_wins() const {
  std::map<std::uint64_t, std::pair<double, double>> by_seed;  // deep rmse, best shallow rmse
  for (const auto& c : cells) {
    auto [it, fresh] = by_seed.try_emplace(c.seed, std::numeric_limits<double>::infinity(),
                                           std::numeric_limits<double>::infinity());
    if (c.hidden.size() >= 2)
      it->second.first = c.run.final_valid_rmse();
    else
      it->second.second = std::min(it->second.second, c.run.final_valid_rmse());
  }
  std::vector<bool> out;
  for (const auto& [seed, v] : by_seed) out.push_back(v.first < v.second);
  return out;
}

std::vector<std::vector<double>> SweepResult::width_improvements() const {
  std::map<std::uint64_t, std::vector<double>> shallow;
  for (const auto& c : cells)
    if (c.hidden.size() == 1) shallow[c.seed].push_back(c.run.final_valid_rmse());
  std::vector<std::vector<double>> out;
  for (const auto& [seed, r] : shallow) {
    std::vector<double> gains;
    for (std::size_t i = 0; i + 1 < r.size(); ++i) gains.push_back(r[i] - r[i + 1]);
    out.push_back(std::move(gains));
  }
  return out;
}

std::vector<bool> SweepResult::diminishing_returns() const {
  std::vector<bool> out;
  for (const auto& gains : width_improvements()) {
    bool ok = true;
    for (std::size_t i = 0; i + 1 < gains.size(); ++i) ok = ok && gains[i + 1] <= gains[i];
    out.push_back(ok);
  }
  return out;
}

SweepResult depth_vs_width_sweep(const SweepConfig& config) {
  if (!(config.scale > 0.0 && config.scale <= 1.0)) throw ValidationError("sweep scale must lie in (0, 1]");
  if (config.d < 1) throw ValidationError("sweep needs d >= 1");

  std::vector<std::vector<int>> archs;
  if (!config.three_layer.empty()) archs.push_back(scaled_widths(config.three_layer, config.scale));
  for (int w : config.two_layer) archs.push_back(scaled_widths({w}, config.scale));

  SweepResult result;
  result.n_train = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(config.n_train * config.scale)));

  std::map<std::uint64_t, Dataset> datasets;
  for (std::uint64_t seed : config.seeds) {
    if (datasets.count(seed)) throw ValidationError("sweep seeds must be distinct");
    datasets[seed] = generate_dataset({config.d, result.n_train, config.n_valid, config.r_max, seed});
  }

  for (const auto& hidden : archs)
    for (std::uint64_t seed : config.seeds) result.cells.push_back({arch_name(hidden), hidden, seed, {}});

  TrainConfig base = config.base;
  if (config.max_batches) base.max_batches = config.max_batches;
  base.hidden = {1};
  base.validate();
  parallel_for(result.cells.size(), [&](std::size_t i) {
    auto& cell = result.cells[i];
    TrainConfig tc = base;
    tc.hidden = cell.hidden;
    tc.seed = cell.seed;
    cell.run = train(datasets.at(cell.seed), tc);
  });
  return result;
}

}  // namespace reluforge
