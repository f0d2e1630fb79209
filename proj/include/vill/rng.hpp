#pragma once

#include <array>
#include <cstdint>
#include <span>

namespace vill {

// xoshiro256** seeded through splitmix64. The generator and every derived
// distribution below are implemented here rather than taken from <random>,
// whose distributions are not specified bit-for-bit across standard libraries.
class Rng {
 public:
  static constexpr const char* kAlgorithm = "xoshiro256**/splitmix64";

  explicit Rng(std::uint64_t seed);

  // Independent stream: the seed's generator advanced by `stream` jumps of 2^128.
  static Rng stream(std::uint64_t seed, unsigned stream);

  std::uint64_t next();

  // Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi);
  // Uniform integer in [0, n), unbiased (rejection sampling).
  std::uint64_t below(std::uint64_t n);
  // Standard normal via Box-Muller; the second variate is discarded.
  double normal();
  // Index drawn from a discrete distribution (weights need not be normalized).
  std::size_t categorical(std::span<const double> weights);

  void jump();

 private:
  std::array<std::uint64_t, 4> s_{};
};

}  // namespace vill
