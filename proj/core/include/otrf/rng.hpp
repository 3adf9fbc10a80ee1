#pragma once

#include <cstdint>
#include <random>

#include "otrf/latent.hpp"

namespace otrf {

struct RngSeed {
  std::uint64_t value = 0;
};

// splitmix64 finalizer applied to the mixed inputs. Used to give every run,
// input and replicate its own independent stream.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0);

// Standard normal draws with a fixed, documented algorithm ("normal-v1"):
// std::mt19937_64 (bit-exact by the standard) feeding Box-Muller on
// 53-bit uniforms, both outputs of each pair consumed in order.
class NormalStream {
 public:
  static constexpr const char* kAlgorithm = "normal-v1";

  explicit NormalStream(RngSeed seed);

  double next();
  LatentState next_vector(Eigen::Index dimension);
  // Uniform in [0, 1) with 53 random bits.
  double uniform();
  // Uniform integer in [0, n).
  std::uint64_t index(std::uint64_t n);

 private:
  std::mt19937_64 engine_;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace otrf
