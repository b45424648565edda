#pragma once

#include <cstdint>
#include <vector>

namespace coordc {

/// splitmix64. Small, fast, and identical on every platform, which is what the
/// replay-determinism guarantees need. One master seed per run; sub-streams are
/// derived by hashing (master, stream id) so agent-level randomness is
/// order-independent.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform in [0, 1), 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Unbiased uniform integer in [0, n). n must be > 0.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t threshold = -n % n;  // 2^64 mod n
    for (;;) {
      std::uint64_t r = next();
      if (r >= threshold) return r % n;
    }
  }

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::uint64_t state_;
};

inline std::uint64_t mix64(std::uint64_t a, std::uint64_t b) {
  Rng r(a ^ (0x9e3779b97f4a7c15ULL * (b + 1)));
  r.next();
  return r.next();
}

/// Stream 0 is reserved for the coordinator; agent i uses stream i + 1.
inline Rng derive_stream(std::uint64_t master, std::uint64_t stream) {
  return Rng(mix64(master, stream));
}

inline Rng coordinator_stream(std::uint64_t master) { return derive_stream(master, 0); }
inline Rng agent_stream(std::uint64_t master, std::size_t agent) {
  return derive_stream(master, static_cast<std::uint64_t>(agent) + 1);
}

}  // namespace coordc
