#include "otrf/rng.hpp"

#include <cmath>
#include <numbers>

namespace otrf {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b) {
  std::uint64_t h = splitmix64(base);
  h = splitmix64(h ^ (a + 0x632BE59BD9B4E019ULL));
  h = splitmix64(h ^ (b + 0x8CB92BA72F3D8DD7ULL));
  return h;
}

NormalStream::NormalStream(RngSeed seed) : engine_(seed.value) {}

double NormalStream::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double NormalStream::next() {
  if (has_cached_) {
    has_cached_ = false;
    return cached_;
  }
  // 1 - u keeps the log argument in (0, 1].
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  cached_ = r * std::sin(theta);
  has_cached_ = true;
  return r * std::cos(theta);
}

LatentState NormalStream::next_vector(Eigen::Index dimension) {
  LatentState v(dimension);
  for (Eigen::Index i = 0; i < dimension; ++i) v[i] = next();
  return v;
}

std::uint64_t NormalStream::index(std::uint64_t n) {
  // Rejection sampling keeps the draw unbiased.
  const std::uint64_t limit = (~std::uint64_t{0}) - ((~std::uint64_t{0}) % n);
  std::uint64_t x = engine_();
  while (x >= limit) x = engine_();
  return x % n;
}

}  // namespace otrf
