#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace ked {

// Stateless counter-based generator. Output i of stream s under seed k is
// mix(mix(key(k, s) ^ i * golden) + i); any draw can be produced independently,
// which makes sharded Monte Carlo reproducible. Substreams are derived by
// hashing the parent stream id with a child id.
//
// Gaussian variates use the cosine branch of Box-Muller on the uniform pair
// at counters (2c, 2c+1).
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0) : seed_(seed), stream_(stream) {
    key_ = mix(seed_ + 0x9E3779B97F4A7C15ULL) ^ mix(stream_ * 0xD1B54A32D192ED03ULL + 0x8CB92BA72F3D8DD7ULL);
  }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

  std::uint64_t bits(std::uint64_t counter) const {
    return mix(mix(key_ ^ (counter * 0x9E3779B97F4A7C15ULL)) + counter);
  }

  // Uniform on the open interval (0, 1).
  double uniform(std::uint64_t counter) const {
    return (static_cast<double>(bits(counter) >> 11) + 0.5) * 0x1.0p-53;
  }

  double normal(std::uint64_t counter) const {
    const double u1 = uniform(2 * counter);
    const double u2 = uniform(2 * counter + 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  CounterRng substream(std::uint64_t id) const {
    return CounterRng(seed_, mix(stream_ ^ mix(id + 0xA0761D6478BD642FULL)));
  }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t key_;
};

}  // namespace ked
