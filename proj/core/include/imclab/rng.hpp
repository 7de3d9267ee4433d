#pragma once

#include <cmath>
#include <cstdint>

namespace imclab {

/// Deterministic per-replica stream: the generator state is a pure function
/// of (master, replica), so replicas can be drawn in any order on any number
/// of workers and still produce bit-identical samples.
struct SeedStream {
  std::uint64_t master = 0;
  std::uint64_t replica = 0;
};

namespace detail {
inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}
inline std::uint64_t rotl(std::uint64_t x, int k) {
  return (x << k) | (x >> (64 - k));
}
}  // namespace detail

/// xoshiro256++ with Box-Muller Gaussians. Self-contained so results do not
/// depend on the standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(SeedStream seed) {
    std::uint64_t x = seed.master ^ 0x6a09e667f3bcc909ULL;
    x ^= detail::splitmix64(x) + seed.replica * 0x2545f4914f6cdd1dULL;
    for (auto& s : state_) s = detail::splitmix64(x);
  }

  std::uint64_t next_u64() {
    const std::uint64_t result =
        detail::rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = detail::rotl(state_[3], 45);
    return result;
  }

  /// Uniform in (0, 1).
  double uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller, one cached value.
  double gaussian() {
    if (have_cached_) {
      have_cached_ = false;
      return cached_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    cached_ = r * std::sin(a);
    have_cached_ = true;
    return r * std::cos(a);
  }

 private:
  std::uint64_t state_[4] = {};
  double cached_ = 0.0;
  bool have_cached_ = false;
};

}  // namespace imclab
