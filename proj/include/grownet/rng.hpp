#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace grownet {

// All randomness in the project flows from a single seed through the
// derivations below, so runs are reproducible bit for bit. Distributions
// are hand-rolled on top of mt19937_64 (whose output sequence the standard
// pins down) instead of <random> distributions, which are
// implementation-defined.

constexpr uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Per-index substream, e.g. one seed per benchmark draw or surrogate set.
constexpr uint64_t derive_seed(uint64_t base, uint64_t index) {
  return splitmix64(base + index);
}

// Per-stage substream: the stage name is FNV-1a hashed into the seed.
constexpr uint64_t derive_seed(uint64_t base, std::string_view stage) {
  uint64_t h = 14695981039346656037ULL;
  for (char c : stage) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ULL;
  }
  return splitmix64(base ^ h);
}

class Rng {
 public:
  explicit Rng(uint64_t seed) : eng_(splitmix64(seed)) {}

  // Uniform on [0, 1), 53 bits.
  double uniform01() {
    return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller; two uniforms per draw, no cached state.
  double normal() {
    const double u1 = (static_cast<double>(eng_() >> 11) + 1.0) * 0x1.0p-53;
    const double u2 = static_cast<double>(eng_() >> 11) * 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
  }

  // Uniform integer in [0, n); unbiased via 128-bit multiply.
  int uniform_int(int n) {
    const auto wide = static_cast<unsigned __int128>(eng_()) *
                      static_cast<unsigned __int128>(n);
    return static_cast<int>(wide >> 64);
  }

 private:
  std::mt19937_64 eng_;
};

}  // namespace grownet
