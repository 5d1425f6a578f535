#ifndef CURVESCOPE_RNG_HPP
#define CURVESCOPE_RNG_HPP

#include <cmath>
#include <cstdint>
#include <numbers>

namespace curvescope {

// Counter-based pseudo-random generator. Each draw is a pure function of
// (seed, stream, counter), so parallel generation keyed by example index is
// layout-independent and reproducible across reruns. The mixer is the
// splitmix64 finalizer applied to the combined key.
class CounterRng {
public:
  CounterRng(std::uint64_t seed, std::uint64_t stream)
      : seed_(seed), stream_(stream), counter_(0) {}

  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t next_u64() {
    std::uint64_t k = mix(seed_);
    k = mix(k ^ stream_);
    return mix(k ^ counter_++);
  }

  // Uniform in [0, 1), 53-bit resolution.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller; consumes two uniforms per draw.
  double next_gaussian() {
    double u1 = next_double();
    double u2 = next_double();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  // Uniform integer in [0, n).
  std::uint64_t next_below(std::uint64_t n) { return next_u64() % n; }

private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t counter_;
};

// Stable sub-seed derivation: stages and substreams hash their names/indices
// into the master seed so every stage draws from an independent stream.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
  return CounterRng::mix(CounterRng::mix(seed) ^ tag);
}

inline std::uint64_t hash_name(const char* name) {
  // FNV-1a, enough to separate stage names.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const char* p = name; *p; ++p) {
    h ^= static_cast<std::uint64_t>(static_cast<unsigned char>(*p));
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace curvescope

#endif
