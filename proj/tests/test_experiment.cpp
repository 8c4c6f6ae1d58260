#include <doctest.h>

#include <cmath>
#include <random>

#include "reluforge/error.hpp"
#include "reluforge/experiment.hpp"

using namespace reluforge;

TEST_CASE("dataset: radii, labels, balance and determinism") {
  const Dataset a = generate_dataset({10, 20000, 1000, 2.0, 5});
  std::size_t inside = 0;
  for (Eigen::Index j = 0; j < a.x_train.cols(); ++j) {
    const double r = a.x_train.col(j).norm();
    CHECK(r <= 2.0 + 1e-12);
    CHECK(a.y_train[j] == (r <= 1.0 ? 1.0 : 0.0));
    inside += a.y_train[j] == 1.0;
  }
  const double p = static_cast<double>(inside) / 20000.0;
  CHECK(std::abs(p - 0.5) <= 3.0 * std::sqrt(0.25 / 20000.0));
  const Dataset b = generate_dataset({10, 20000, 1000, 2.0, 5});
  CHECK(a.x_train == b.x_train);
  CHECK(a.x_valid == b.x_valid);
  CHECK_THROWS_AS(generate_dataset({10, 10, 10, 1.0, 1}), ValidationError);
}

TEST_CASE("He initialization") {
  const Mlp net = Mlp::he_init(50, {400}, 3);
  const double sd = std::sqrt(net.weights[0].squaredNorm() / static_cast<double>(net.weights[0].size()));
  CHECK(sd == doctest::Approx(std::sqrt(2.0 / 50.0)).epsilon(0.03));
  CHECK(net.biases[0].isZero(0.0));
  CHECK(net.parameter_count() == 50 * 400 + 400 + 400 + 1);
}

TEST_CASE("gradient matches central differences") {
  std::mt19937_64 rng(61);
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix x(3, 16);
  Vector y(16);
  for (auto& v : x.reshaped()) v = g(rng);
  for (auto& v : y) v = g(rng);
  for (int point = 0; point < 20; ++point) {
    Mlp net = Mlp::he_init(3, {4, 4}, 100 + point);
    Vector theta = net.parameters();
    for (auto& v : theta) v += 0.3 * g(rng);
    net.set_parameters(theta);
    const Vector grad = loss_and_gradient(net, x, y).gradient;
    const double h = 1e-5;
    Vector numeric(theta.size());
    for (Eigen::Index i = 0; i < theta.size(); ++i) {
      Vector plus = theta, minus = theta;
      plus[i] += h;
      minus[i] -= h;
      net.set_parameters(plus);
      const double lp = loss_and_gradient(net, x, y).loss;
      net.set_parameters(minus);
      const double lm = loss_and_gradient(net, x, y).loss;
      numeric[i] = (lp - lm) / (2.0 * h);
    }
    CHECK((grad - numeric).norm() / std::max(1e-12, grad.norm()) <= 1e-5);
  }
}

TEST_CASE("momentum update algebra on one parameter") {
  // theta0 = 1, gradients 2 then 3, mu = 0.9, lr = 0.1:
  // v1 = -0.2, theta1 = 0.8; v2 = 0.9 (-0.2) - 0.3 = -0.48, theta2 = 0.32.
  MomentumSgd opt{0.9, Vector()};
  Vector theta{{1.0}};
  opt.step(theta, Vector{{2.0}}, 0.1);
  CHECK(theta[0] == doctest::Approx(0.8).epsilon(1e-15));
  opt.step(theta, Vector{{3.0}}, 0.1);
  CHECK(opt.velocity[0] == doctest::Approx(-0.48).epsilon(1e-15));
  CHECK(theta[0] == doctest::Approx(0.32).epsilon(1e-15));
}

TEST_CASE("predict agrees with the exported network") {
  Mlp net = Mlp::he_init(4, {6, 3}, 7);
  Vector theta = net.parameters();
  theta.setLinSpaced(-1.0, 1.0);
  net.set_parameters(theta);
  const Network exported = net.to_network();
  Matrix x = Matrix::Random(4, 20);
  CHECK((exported.evaluate_batch(x).row(0).transpose() - net.predict(x)).norm() <= 1e-12);
}

TEST_CASE("schedule length") {
  TrainConfig c;
  c.hidden = {4};
  // 0.1 * 0.95^m >= 1e-4 for m <= 134.
  CHECK(c.total_batches() == 135 * 1000);
  c.max_batches = 500;
  CHECK(c.total_batches() == 500);
  c.hidden = {};
  CHECK_THROWS_AS(c.validate(), ValidationError);
}

TEST_CASE("constant-zero labels are learned quickly") {
  Dataset data = generate_dataset({5, 2000, 500, 2.0, 1});
  data.y_train.setZero();
  data.y_valid.setZero();
  TrainConfig c;
  c.hidden = {8};
  c.max_batches = 200;
  c.window = 50;
  const TrainRun run = train(data, c);
  CHECK(run.final_valid_rmse() < 0.05);
}

TEST_CASE("1D threshold with a width-8 net") {
  // y = 1[x >= 0] on x uniform in [-2, 2]: one linearly separable step.
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  Dataset data;
  data.x_train.resize(1, 5000);
  data.y_train.resize(5000);
  data.x_valid.resize(1, 1000);
  data.y_valid.resize(1000);
  for (Eigen::Index i = 0; i < 5000; ++i) {
    data.x_train(0, i) = u(rng);
    data.y_train[i] = data.x_train(0, i) >= 0.0 ? 1.0 : 0.0;
  }
  for (Eigen::Index i = 0; i < 1000; ++i) {
    data.x_valid(0, i) = u(rng);
    data.y_valid[i] = data.x_valid(0, i) >= 0.0 ? 1.0 : 0.0;
  }
  TrainConfig c;
  c.hidden = {8};
  c.max_batches = 4000;
  c.lr = 0.02;
  c.seed = 3;
  const TrainRun run = train(data, c);
  CHECK(run.final_valid_rmse() < 0.1);
}

TEST_CASE("training is reproducible and curves are well formed") {
  const Dataset data = generate_dataset({6, 3000, 500, 2.0, 4});
  TrainConfig c;
  c.hidden = {10, 4};
  c.max_batches = 1000;
  const TrainRun a = train(data, c), b = train(data, c);
  REQUIRE(a.curve.size() == 5);
  CHECK(a.digest == b.digest);
  for (std::size_t i = 0; i < a.curve.size(); ++i) {
    CHECK(a.curve[i].valid_rmse == b.curve[i].valid_rmse);
    CHECK(a.curve[i].train_rmse >= 0.0);
    if (i > 0) CHECK(a.curve[i].batch > a.curve[i - 1].batch);
  }
}

TEST_CASE("smoothed training curve is mostly non-increasing") {
  // Default schedule and cadence on the d = 20 ball task.
  const Dataset data = generate_dataset({20, 100000, 10000, 2.0, 1});
  TrainConfig c;
  c.hidden = {20, 4};
  const TrainRun run = train(data, c);
  // Means over consecutive blocks of 50 evaluations.
  std::vector<double> blocks;
  for (std::size_t start = 0; start + 50 <= run.curve.size(); start += 50) {
    double s = 0.0;
    for (std::size_t i = start; i < start + 50; ++i) s += run.curve[i].train_rmse;
    blocks.push_back(s / 50.0);
  }
  REQUIRE(blocks.size() >= 10);
  std::size_t ok = 0;
  for (std::size_t i = 0; i + 1 < blocks.size(); ++i) ok += blocks[i + 1] <= blocks[i];
  CHECK(static_cast<double>(ok) >= 0.9 * static_cast<double>(blocks.size() - 1));
}

TEST_CASE("divergence is reported") {
  const Dataset data = generate_dataset({5, 2000, 200, 2.0, 1});
  TrainConfig c;
  c.hidden = {8};
  c.lr = 50.0;
  c.max_batches = 400;
  c.window = 10;
  CHECK_THROWS_AS(train(data, c), ComputationError);
}

TEST_CASE("sweep bookkeeping") {
  SweepConfig s;
  s.d = 4;
  s.scale = 0.01;
  s.seeds = {1};
  s.three_layer = {};
  s.two_layer = {400};
  s.n_train = 200000;
  s.n_valid = 200;
  s.max_batches = 100;
  const auto result = depth_vs_width_sweep(s);
  REQUIRE(result.cells.size() == 1);
  CHECK(result.cells[0].arch == "2L-4");
  CHECK(result.n_train == 2000);
  CHECK(scaled_widths({100, 20}, 0.2) == std::vector<int>{20, 4});
  CHECK(arch_name({20, 4}) == "3L-20-4");
}

TEST_CASE("parameter counts at full scale") {
  const Mlp shallow = Mlp::he_init(100, {800}, 1), deep = Mlp::he_init(100, {100, 20}, 1);
  CHECK(shallow.parameter_count() == 100 * 800 + 800 + 801);
  CHECK(deep.parameter_count() == 100 * 100 + 100 + 100 * 20 + 20 + 21);
}
