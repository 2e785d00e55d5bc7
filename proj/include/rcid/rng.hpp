#pragma once

// Deterministic RNG stream derivation.
//
// Every random stream in the toolkit is an std::mt19937_64 seeded from
//   derive_seed(master, domain, a, b)
// which folds the four 64-bit words through SplitMix64:
//   s = mix(master ^ C0); s = mix(s ^ domain); s = mix(s ^ a); s = mix(s ^ b)
// `domain` identifies the consumer (see StreamDomain), `a` is usually the
// building index and `b` the seed index. Streams therefore do not depend on
// scheduling order or worker count.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>

namespace rcid {

enum class StreamDomain : std::uint64_t {
  Weather = 1,
  Occupancy = 2,
  MeasurementNoise = 3,
  FleetSpecs = 4,
  ScratchSeed = 5,
  Finetune = 6,
  Pretrain = 7,
  Genetic = 8,
  NetInit = 9,
  Targets = 10,
};

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t master, StreamDomain domain,
                                    std::uint64_t a = 0, std::uint64_t b = 0) {
  std::uint64_t s = splitmix64(master ^ 0x5DEECE66DULL);
  s = splitmix64(s ^ static_cast<std::uint64_t>(domain));
  s = splitmix64(s ^ a);
  return splitmix64(s ^ b);
}

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t master, StreamDomain domain, std::uint64_t a = 0,
                    std::uint64_t b = 0) {
  return Rng(derive_seed(master, domain, a, b));
}

// Uniform double in [0, 1) built from the top 53 bits; unlike
// std::uniform_real_distribution this is specified bit-for-bit.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform(Rng& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

// Standard normal via Box-Muller (one draw per call; the pair partner is
// discarded to keep the stream position a simple function of call count).
inline double standard_normal(Rng& rng) {
  constexpr double kTwoPi = 6.283185307179586476925286766559;
  double u1 = uniform01(rng);
  const double u2 = uniform01(rng);
  if (u1 <= 0.0) u1 = 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
}

// Uniform index in [0, n).
inline std::size_t uniform_index(Rng& rng, std::size_t n) {
  return static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n)) % n;
}

// Fisher-Yates shuffle driven by uniform_index.
template <typename It>
void shuffle(It first, It last, Rng& rng) {
  const auto n = static_cast<std::size_t>(last - first);
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = uniform_index(rng, i);
    using std::swap;
    swap(first[i - 1], first[j]);
  }
}

}  // namespace rcid
