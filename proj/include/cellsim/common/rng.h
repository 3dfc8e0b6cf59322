#ifndef CELLSIM_COMMON_RNG_H_
#define CELLSIM_COMMON_RNG_H_

#include <cstdint>
#include <limits>
#include <string_view>

namespace cellsim {

// SplitMix64 generator. Small state keeps per-agent streams cheap to
// snapshot; satisfies UniformRandomBitGenerator so <random> distributions
// work on it.
class Rng {
 public:
  using result_type = std::uint64_t;

  Rng() = default;
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return ((*this)() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n). n must be > 0.
  std::uint64_t below(std::uint64_t n) {
    // Lemire's multiply-shift with rejection.
    unsigned __int128 m = static_cast<unsigned __int128>((*this)()) * n;
    auto low = static_cast<std::uint64_t>(m);
    if (low < n) {
      const std::uint64_t threshold = (0 - n) % n;
      while (low < threshold) {
        m = static_cast<unsigned __int128>((*this)()) * n;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  std::uint64_t state() const { return state_; }
  void set_state(std::uint64_t s) { state_ = s; }

 private:
  std::uint64_t state_ = 0;
};

// Mixes a base seed with a stream label so independent components get
// uncorrelated generators.
inline std::uint64_t DeriveSeed(std::uint64_t base, std::uint64_t stream) {
  Rng r(base ^ (stream * 0xd1342543de82ef95ULL + 0x632be59bd9b4e019ULL));
  r();
  return r();
}

// FNV-1a; stable across platforms and runs, unlike std::hash.
inline std::uint64_t StableHash(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace cellsim

#endif  // CELLSIM_COMMON_RNG_H_
