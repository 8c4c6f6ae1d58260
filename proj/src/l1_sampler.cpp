#include <cmath>

#include "reluforge/error.hpp"
#include "reluforge/parallel.hpp"
#include "reluforge/sampling.hpp"

namespace reluforge {

namespace {

constexpr std::size_t kShards = 64;

std::mt19937_64 derived_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return std::mt19937_64(seq);
}

}  // namespace

double l1_sphere_scale(int d) {
  if (d < 2) throw ValidationError("L1 sphere sampler needs d >= 2");
  return std::sqrt(1.0 / (4.0 * std::log(4.0 * d)));
}

L1SphereSampler::L1SphereSampler(int d, std::uint64_t seed, std::uint64_t stream)
    : d_(d), c_d_(l1_sphere_scale(d)), rng_(derived_rng(seed, stream)) {}

L1SphereSample L1SphereSampler::draw() {
  std::bernoulli_distribution coin(0.5);
  std::normal_distribution<double> normal(0.0, 1.0);
  L1SphereSample s;
  s.c_d = c_d_;
  s.sigma.resize(static_cast<std::size_t>(d_));
  for (int& v : s.sigma) v = coin(rng_) ? 1 : -1;
  const double inv_d = 1.0 / d_;

  s.gaussian.resize(d_);
  s.point.resize(d_);
  for (std::size_t attempt = 1; attempt <= kMaxAttempts; ++attempt) {
    ++attempts_;
    double along = 0.0;
    for (int i = 0; i < d_; ++i) {
      s.gaussian[i] = normal(rng_);
      along += s.sigma[static_cast<std::size_t>(i)] * s.gaussian[i];
    }
    bool on_facet = true;
    for (int i = 0; i < d_; ++i) {
      const double sg = s.sigma[static_cast<std::size_t>(i)];
      const double projected = s.gaussian[i] - sg * along * inv_d;
      s.point[i] = inv_d * (sg + c_d_ * projected);
      if (sg * s.point[i] < 0.0) on_facet = false;
    }
    if (on_facet) {
      ++accepted_;
      s.attempts = attempt;
      return s;
    }
  }
  throw ComputationError("L1 sphere sampler exceeded " + std::to_string(kMaxAttempts) + " attempts");
}

double L1SphereSampler::acceptance_rate() const {
  return attempts_ == 0 ? 0.0 : static_cast<double>(accepted_) / static_cast<double>(attempts_);
}

L1SphereSample l1_sphere_sampler(int d, std::uint64_t seed) { return L1SphereSampler(d, seed).draw(); }

SlabEstimate slab_probability(const Vector& w, double eps, int d, std::size_t samples, std::uint64_t seed) {
  if (samples < 1000) throw ValidationError("slab_probability needs at least 1000 samples");
  if (!(eps > 0.0) || !(eps < 1.0)) throw ValidationError("slab_probability needs eps in (0, 1)");
  if (w.size() != d) throw ValidationError("slab_probability: w must have d entries");
  l1_sphere_scale(d);

  std::vector<std::size_t> hits(kShards, 0);
  parallel_for(kShards, [&](std::size_t shard) {
    const std::size_t begin = samples * shard / kShards, end = samples * (shard + 1) / kShards;
    L1SphereSampler sampler(d, seed, shard + 1);
    std::size_t count = 0;
    for (std::size_t i = begin; i < end; ++i) {
      const double dot = w.dot(sampler.draw().point);
      if (dot >= 1.0 - eps && dot <= 1.0) ++count;
    }
    hits[shard] = count;
  });

  SlabEstimate est;
  est.samples = samples;
  for (std::size_t h : hits) est.hits += h;
  const double n = static_cast<double>(samples);
  est.probability = static_cast<double>(est.hits) / n;
  est.half_width = 1.96 * std::sqrt(est.probability * (1.0 - est.probability) / n);
  return est;
}

}  // namespace reluforge
