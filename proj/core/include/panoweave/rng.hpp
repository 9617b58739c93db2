#pragma once

#include <cstdint>
#include <random>

#include "panoweave/tensor.hpp"

namespace panoweave {

/// Deterministic random source. std::mt19937_64 gives the same stream on
/// every platform; the Gaussian transform is hand rolled because
/// std::normal_distribution is implementation defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  /// Uniform double in [0, 1).
  double uniform();

  /// Standard normal via Box-Muller. Draws two values at a time and caches
  /// the second one.
  double normal();

  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t integer(std::uint64_t n);

  void fill_normal(Tensor& t);

 private:
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace panoweave
