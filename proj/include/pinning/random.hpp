#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace pinning {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer (Steele, Lea, Flood 2014).
constexpr std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// 64-bit FNV-1a hash.
constexpr std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Per-stream seed derived from a base seed, a replica index and a tag
/// naming the consumer (usually the subcommand):
///
///   stream_seed = splitmix64(base ^ splitmix64(replica ^ splitmix64(fnv1a64(tag))))
///
/// Test vectors are listed in docs/seeding.md.
constexpr std::uint64_t stream_seed(std::uint64_t base, std::uint64_t replica, std::string_view tag) {
  return splitmix64(base ^ splitmix64(replica ^ splitmix64(fnv1a64(tag))));
}

inline Rng make_rng(std::uint64_t base, std::uint64_t replica, std::string_view tag) {
  return Rng(stream_seed(base, replica, tag));
}

/// Uniform double in [0, 1) built from the top 53 bits, so the stream is
/// fixed by the engine alone and does not depend on the standard library's
/// distribution implementation.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Standard normal via the Marsaglia polar method.
class NormalSource {
 public:
  double operator()(Rng& rng) {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform01(rng) - 1.0;
      v = 2.0 * uniform01(rng) - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    has_spare_ = true;
    return u * f;
  }

 private:
  double spare_ = 0.0;
  bool has_spare_ = false;
};

inline double exponential(Rng& rng, double rate) {
  return -std::log1p(-uniform01(rng)) / rate;
}

}  // namespace pinning
