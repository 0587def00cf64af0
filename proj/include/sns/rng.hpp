#pragma once

#include <cmath>
#include <cstdint>

namespace sns {

// splitmix64 finaliser.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Counter-based N(0,1) draw addressed by (seed, stream, index).  Purely
// functional, so a path is reproducible bit for bit under any evaluation
// order or thread count.
inline double gaussian_at(std::uint64_t seed, std::uint64_t stream,
                          std::uint64_t index) {
  std::uint64_t k = mix64(seed);
  k = mix64(k ^ (0x9e3779b97f4a7c15ull * (stream + 1)));
  const std::uint64_t h1 = mix64(k ^ (0xd1b54a32d192ed03ull * (index + 1)));
  const std::uint64_t h2 = mix64(h1 ^ 0xbf58476d1ce4e5b9ull);
  // Box-Muller, cosine branch; u1 in (0,1] keeps the log finite.
  const double u1 = (static_cast<double>(h1 >> 11) + 1.0) * 0x1.0p-53;
  const double u2 = static_cast<double>(h2 >> 11) * 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * 3.14159265358979323846 * u2);
}

// Per-sample seed stream derived from one master seed.
inline std::uint64_t sample_seed(std::uint64_t master, int sample_index) {
  return mix64(master ^ (0x9e3779b97f4a7c15ull *
                         (static_cast<std::uint64_t>(sample_index) + 1)));
}

}  // namespace sns
