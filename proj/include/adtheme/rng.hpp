#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace adtheme {

// FNV-1a over a byte string. Used for config hashes and for deriving named
// RNG sub-streams from a single master seed.
std::uint64_t fnv1a64(const std::string& bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);

// Deterministic RNG stream. All randomness in the project flows through
// this: distributions are implemented by hand so results do not depend on
// the standard library's (implementation-defined) distribution code.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Sub-stream derived from (seed, name). Independent streams for split /
  // init / sampling keep components individually reproducible.
  static Rng stream(std::uint64_t seed, const std::string& name);

  std::uint64_t next() { return engine_(); }

  // Uniform integer in [0, n), n > 0. Rejection sampling, no modulo bias.
  std::uint64_t below(std::uint64_t n);

  // Uniform double in [0, 1).
  double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Standard normal via Box-Muller (one value per call, cache discarded).
  double normal();

  // Normal truncated to [-2s, 2s] by resampling, then snapped to the
  // nearest float32 so freshly initialized parameters survive the 32-bit
  // checkpoint payload bit-exactly.
  double trunc_normal_f32(double stddev);

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace adtheme
