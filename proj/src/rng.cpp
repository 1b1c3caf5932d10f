#include "adtheme/rng.hpp"

#include <cmath>

namespace adtheme {

std::uint64_t fnv1a64(const std::string& bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

Rng Rng::stream(std::uint64_t seed, const std::string& name) {
  std::uint64_t h = fnv1a64(name);
  // Mix the master seed in byte by byte so streams differ for every seed.
  for (int i = 0; i < 8; ++i) {
    h ^= (seed >> (8 * i)) & 0xff;
    h *= 0x100000001b3ULL;
  }
  return Rng(h);
}

std::uint64_t Rng::below(std::uint64_t n) {
  const std::uint64_t limit = ~0ULL - (~0ULL % n);
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return x % n;
}

double Rng::normal() {
  double u1, u2;
  do {
    u1 = unit();
  } while (u1 <= 0.0);
  u2 = unit();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

double Rng::trunc_normal_f32(double stddev) {
  double x;
  do {
    x = normal();
  } while (std::abs(x) > 2.0);
  return static_cast<double>(static_cast<float>(x * stddev));
}

}  // namespace adtheme
