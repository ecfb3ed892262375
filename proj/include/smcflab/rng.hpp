#pragma once

#include <cmath>
#include <cstdint>

namespace smcflab {

// Counter-based random numbers: every draw is a pure function of a key and a
// counter, so streams can be sampled in any order, from any thread, with
// identical results. The generator is the splitmix64 output permutation
// applied to key + counter * golden gamma (the standard splitmix64 stream).

namespace rng {

constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;

inline std::uint64_t mix64(std::uint64_t x) {
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebULL;
  x ^= x >> 31;
  return x;
}

// Derive a stream key by absorbing words one at a time.
inline std::uint64_t key(std::uint64_t seed) { return mix64(seed + kGamma); }
inline std::uint64_t key(std::uint64_t seed, std::uint64_t a) {
  return mix64(key(seed) + a * kGamma + kGamma);
}
inline std::uint64_t key(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  return mix64(key(seed, a) + b * kGamma + kGamma);
}
inline std::uint64_t key(std::uint64_t seed, std::uint64_t a, std::uint64_t b,
                         std::uint64_t c) {
  return mix64(key(seed, a, b) + c * kGamma + kGamma);
}

inline std::uint64_t at(std::uint64_t stream_key, std::uint64_t counter) {
  return mix64(stream_key + (counter + 1) * kGamma);
}

// Uniform in [0,1) with 53 random bits.
inline double uniform(std::uint64_t stream_key, std::uint64_t counter) {
  return static_cast<double>(at(stream_key, counter) >> 11) * 0x1.0p-53;
}

// Standard normal via Box-Muller; consumes exactly counters 2k and 2k+1, so
// the k-th normal is addressable without generating its predecessors.
inline double normal(std::uint64_t stream_key, std::uint64_t counter) {
  const double u1 = 1.0 - uniform(stream_key, 2 * counter);      // (0,1]
  const double u2 = uniform(stream_key, 2 * counter + 1);        // [0,1)
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * 3.14159265358979323846 * u2);
}

}  // namespace rng

}  // namespace smcflab
