#pragma once

// Counter-based pseudorandomness.
//
// Every random quantity in the toolkit is a pure function of a 64-bit key and
// a counter, so results never depend on iteration order or thread count.
//
//   mix64(x)              SplitMix64 finalizer
//   hash(key, counter)    mix64(key ^ mix64(counter + golden))
//   split(seed, i)        hash(seed, i)                 per-image / per-learner seeds
//   derive(seed, role)    hash(seed, fnv1a64(role))     named sub-streams
//
// Uniform doubles take the top 53 bits of a hash.

#include <cmath>
#include <cstdint>
#include <string_view>

namespace stegcheck::rng {

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

constexpr std::uint64_t mix64(std::uint64_t x)
{
  x ^= x >> 30;
  x *= 0xBF58476D1CE4E5B9ULL;
  x ^= x >> 27;
  x *= 0x94D049BB133111EBULL;
  x ^= x >> 31;
  return x;
}

constexpr std::uint64_t hash(std::uint64_t key, std::uint64_t counter)
{
  return mix64(key ^ mix64(counter + kGolden));
}

constexpr std::uint64_t fnv1a64(std::string_view s)
{
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ULL;
  }
  return h;
}

constexpr std::uint64_t split(std::uint64_t seed, std::uint64_t index)
{
  return hash(seed, index);
}

constexpr std::uint64_t derive(std::uint64_t seed, std::string_view role)
{
  return hash(seed, fnv1a64(role));
}

/// Uniform in [0, 1) with 53 bits of resolution.
constexpr double uniform01(std::uint64_t bits)
{
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

/// Uniform integer in [0, bound) by multiply-shift; bound must be > 0.
inline std::uint64_t below(std::uint64_t bits, std::uint64_t bound)
{
  return static_cast<std::uint64_t>((static_cast<unsigned __int128>(bits) * bound) >> 64);
}

/// Sequential stream over one key; the n-th draw is hash(key, n).
class Stream {
 public:
  explicit constexpr Stream(std::uint64_t key) : key_(key) {}

  constexpr std::uint64_t next() { return hash(key_, counter_++); }
  constexpr double uniform() { return uniform01(next()); }
  std::uint64_t below(std::uint64_t bound) { return rng::below(next(), bound); }

  /// Standard normal via Box-Muller (one value per call).
  double normal()
  {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace stegcheck::rng
