#pragma once

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace adr {

std::uint64_t splitmix64(std::uint64_t x);

// Order-sensitive combination of seed material into one 64-bit seed.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c);

// Deterministic random source. Only mt19937_64 raw output is used; the
// distributions are implemented here because the standard ones are not
// specified bit-for-bit across library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  // Uniform in [0, 1) with 53 bits.
  double uniform();
  // Uniform integer in [0, n); n > 0.
  std::size_t below(std::size_t n);
  double normal(double mean = 0.0, double stddev = 1.0);

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const std::size_t j = below(i);
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace adr
