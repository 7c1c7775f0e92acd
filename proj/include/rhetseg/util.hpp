#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace rhetseg {

// 64-bit FNV-1a. Used for feature hashing and vocabulary fingerprints so that
// hashes are stable across platforms and standard library implementations.
inline std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

// splitmix64, for deriving independent sub-seeds from a master seed.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t s = seed ^ (0x9e3779b97f4a7c15ull * (stream + 1));
  return splitmix64(s);
}

// Deterministic xorshift generator. std::shuffle and the distribution classes
// are implementation-defined, so anything whose output is pinned by a seed in
// tests or reports goes through this instead.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) : state_(seed) {
    // avoid the all-zero fixed point and decorrelate small seeds
    state_ = splitmix64(state_);
    if (state_ == 0) state_ = 0x106689d45497fdb5ull;
  }

  std::uint64_t next() {
    std::uint64_t x = state_;
    x ^= x << 13;
    x ^= x >> 7;
    x ^= x << 17;
    state_ = x;
    return x;
  }

  // uniform in [0, n)
  std::uint64_t below(std::uint64_t n) { return n ? next() % n : 0; }

  // uniform in [lo, hi)
  double uniform(double lo, double hi) {
    double u = static_cast<double>(next() >> 11) * 0x1.0p-53;
    return lo + u * (hi - lo);
  }

 private:
  std::uint64_t state_;
};

// Fisher-Yates with the portable generator above.
template <typename T>
void seeded_shuffle(std::vector<T>& v, SeededRng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(rng.below(i));
    std::swap(v[i - 1], v[j]);
  }
}

inline std::string to_hex(std::uint64_t h) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[h & 0xf];
    h >>= 4;
  }
  return out;
}

}  // namespace rhetseg
