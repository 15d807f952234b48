#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace covclust {

/// Seeded random source used by every sampler. Identical seeds give
/// bit-identical streams on a given standard library implementation.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on the open interval (0, 1).
  double uniform();
  double uniform(double lo, double hi);
  /// Uniform integer on the closed range [lo, hi].
  int uniform_int(int lo, int hi);
  double normal();
  /// Gamma with shape-rate parameterization.
  double gamma(double shape, double rate);
  double beta(double a, double b);
  /// Inverse-Gamma(shape, scale); mean scale / (shape - 1).
  double inv_gamma(double shape, double scale);
  double exponential(double mean);
  bool bernoulli(double p);
  /// Draws an index with probability proportional to exp(log_weights[i]).
  std::size_t categorical_log(std::span<const double> log_weights);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

/// Derives a well-mixed child seed (splitmix64) so that related streams do
/// not share state.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace covclust
