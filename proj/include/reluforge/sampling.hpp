#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

#include "reluforge/network.hpp"

namespace reluforge {

/// One accepted draw on the L1 unit sphere.
struct L1SphereSample {
  std::vector<int> sigma;  // sign pattern, entries +-1
  Vector gaussian;         // the accepted Gaussian draw
  double c_d = 0.0;
  Vector point;  // on the facet {x : sign(x_i) in {0, sigma_i}, sum_i |x_i| = 1}
  std::size_t attempts = 0;
};

/// c_d = sqrt(1 / (4 ln(4d))).
double l1_sphere_scale(int d);

/// Draws sigma uniformly from {+-1}^d, then Gaussian n until
/// v = (sigma + c_d (I - sigma sigma^T / d) n) / d has every coordinate on
/// sigma's side of zero. sigma is kept across redraws of n.
class L1SphereSampler {
 public:
  static constexpr std::size_t kMaxAttempts = 10000;

  /// `stream` selects an independent generator for the same seed.
  L1SphereSampler(int d, std::uint64_t seed, std::uint64_t stream = 0);
  L1SphereSample draw();
  int dimension() const { return d_; }
  /// Accepted draws over attempts so far.
  double acceptance_rate() const;

 private:
  int d_;
  double c_d_;
  std::mt19937_64 rng_;
  std::size_t accepted_ = 0;
  std::size_t attempts_ = 0;
};

L1SphereSample l1_sphere_sampler(int d, std::uint64_t seed);

struct SlabEstimate {
  double probability = 0.0;
  /// 95% normal-approximation binomial half-width.
  double half_width = 0.0;
  std::size_t hits = 0;
  std::size_t samples = 0;
};

/// Monte-Carlo estimate of Pr(<w, v> in [1 - eps, 1]) for v from the L1
/// sphere sampler. Work is split into fixed shards seeded by (seed, shard),
/// so the result does not depend on the thread count.
SlabEstimate slab_probability(const Vector& w, double eps, int d, std::size_t samples, std::uint64_t seed);

}  // namespace reluforge
