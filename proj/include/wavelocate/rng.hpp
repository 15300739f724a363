#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>

namespace wavelocate {

// splitmix64 finalizer; used to derive independent child seeds from a master
// seed plus a tag path. The derivation is pure arithmetic, so two streams
// built from the same (master, path) are identical regardless of how many
// other streams were consumed in between.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master,
                                 std::initializer_list<std::uint64_t> path) {
  std::uint64_t h = splitmix64(master);
  for (std::uint64_t id : path) h = splitmix64(h ^ splitmix64(id));
  return h;
}

// Stream tags. Each randomized quantity draws from its own derived stream so
// that adding or removing one consumer never perturbs the others.
namespace streams {
inline constexpr std::uint64_t kSensors = 1;
inline constexpr std::uint64_t kLocations = 2;
inline constexpr std::uint64_t kAlpha = 3;
inline constexpr std::uint64_t kNoise = 4;
inline constexpr std::uint64_t kInit = 5;
inline constexpr std::uint64_t kShuffle = 6;
inline constexpr std::uint64_t kDropout = 7;
inline constexpr std::uint64_t kSweep = 8;
inline constexpr std::uint64_t kNoiseRoot = 9;
inline constexpr std::uint64_t kDistortionRoot = 10;
}  // namespace streams

// mt19937_64 wrapper with explicit scalar conversions. Gaussian draws use
// Box-Muller instead of std::normal_distribution, whose output sequence is
// not pinned by the standard; bitwise reproducibility across toolchains
// matters more here than speed.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : engine_(seed) {}

  static RngStream derive(std::uint64_t master,
                          std::initializer_list<std::uint64_t> path) {
    return RngStream(derive_seed(master, path));
  }

  std::uint64_t next_u64() { return engine_(); }

  // uniform in [0, 1), 53-bit resolution
  double uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // uniform over {0, ..., n-1} by rejection, bias-free
  std::uint64_t uniform_index(std::uint64_t n) {
    const std::uint64_t limit = n * (UINT64_MAX / n);
    std::uint64_t v;
    do {
      v = engine_();
    } while (v >= limit);
    return v % n;
  }

  // standard normal via Box-Muller; one draw per call, no caching, so the
  // consumed engine state per call is fixed
  double normal() {
    const double u1 = 1.0 - uniform01();  // (0, 1]
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * 3.14159265358979323846 * u2);
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace wavelocate
