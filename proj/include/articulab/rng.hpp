#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace articulab {

// splitmix64 finalizer; used to derive independent seed streams.
inline uint64_t mix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline uint64_t hash_str(std::string_view s) {
  uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline uint64_t seed_combine(uint64_t a, uint64_t b) { return mix64(a ^ mix64(b)); }

// Named substream: disjoint seed domains for e.g. train vs eval instances.
inline uint64_t seed_stream(std::string_view tag, uint64_t a) {
  return seed_combine(hash_str(tag), a);
}
inline uint64_t seed_stream(std::string_view tag, uint64_t a, uint64_t b) {
  return seed_combine(seed_combine(hash_str(tag), a), b);
}
inline uint64_t seed_stream(std::string_view tag, uint64_t a, uint64_t b, uint64_t c) {
  return seed_combine(seed_combine(seed_combine(hash_str(tag), a), b), c);
}

// mt19937_64 with hand-rolled distributions. The engine's output sequence is
// fixed by the standard; std::*_distribution is not, so sampling is done here.
class Rng {
 public:
  explicit Rng(uint64_t seed) : eng_(seed) {}

  uint64_t next_u64() { return eng_(); }

  // [0, 1)
  double uniform() { return (eng_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Box-Muller, one value per call (second branch discarded).
  double normal() {
    double u1 = 1.0 - uniform();  // (0, 1]
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  // Inclusive on both ends. Rejection-free modulo would bias; use rejection.
  int64_t uniform_int(int64_t lo, int64_t hi) {
    uint64_t range = static_cast<uint64_t>(hi - lo) + 1;
    uint64_t limit = UINT64_MAX - UINT64_MAX % range;
    uint64_t x;
    do {
      x = eng_();
    } while (x >= limit);
    return lo + static_cast<int64_t>(x % range);
  }

  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::mt19937_64 eng_;
};

}  // namespace articulab
