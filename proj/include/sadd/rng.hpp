#pragma once

#include <cstdint>

namespace sadd {

// splitmix64: one-step mixer, used to expand seeds and to derive substreams.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Derives an independent stream seed from (seed, tag0, tag1). Each tag is
// folded through one splitmix step so that nearby tags give unrelated streams.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t tag0,
                              std::uint64_t tag1 = 0) {
  std::uint64_t s = seed;
  std::uint64_t a = splitmix64(s) ^ tag0;
  std::uint64_t b = splitmix64(a) ^ tag1;
  return splitmix64(b);
}

// xoshiro256** (Blackman & Vigna). Integer-only state transitions, so the
// stream is identical on every platform for a given seed. Seeding runs the
// 64-bit seed through splitmix64 four times, as the reference code does.
class Xoshiro256 {
 public:
  explicit Xoshiro256(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& w : s_) w = splitmix64(sm);
  }

  static Xoshiro256 stream(std::uint64_t seed, std::uint64_t tag0,
                           std::uint64_t tag1 = 0) {
    return Xoshiro256(mix_seed(seed, tag0, tag1));
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Uniform double in [0, 1): top 53 bits of the next output.
  double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n) via the multiply-shift reduction.
  std::uint64_t below(std::uint64_t n) {
    return std::uint64_t((static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }
  std::uint64_t s_[4];
};

}  // namespace sadd
