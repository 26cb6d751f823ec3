#ifndef DST_RNG_H_
#define DST_RNG_H_

#include <cstdint>
#include <random>
#include <string_view>

namespace dst {

// 64-bit FNV-1a over raw bytes.
constexpr uint64_t Fnv1a64(std::string_view bytes) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : bytes) {
    h ^= static_cast<uint8_t>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

// SplitMix64 finalizer; also the step function of SplitMix64Stream.
constexpr uint64_t SplitMix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Small, fully specified generator. Used wherever another process (the
// encoder sidecar) must reproduce the exact same numbers.
class SplitMix64Stream {
 public:
  explicit SplitMix64Stream(uint64_t state) : state_(state) {}

  uint64_t Next() {
    state_ += 0x9e3779b97f4a7c15ULL;
    uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [-1, 1) built from the top 53 bits.
  double NextSigned() {
    double u = static_cast<double>(Next() >> 11) * 0x1.0p-53;
    return 2.0 * u - 1.0;
  }

 private:
  uint64_t state_;
};

// Seed splitting: every consumer of randomness derives its own stream
// seed as SplitMix64(root ^ Fnv1a64(tag)). Tags in use: "init/mrc",
// "init/wd", "init/intent", "init/reqslot", "shuffle/<task>",
// "negatives/<task>".
inline uint64_t DeriveSeed(uint64_t root, std::string_view tag) {
  return SplitMix64(root ^ Fnv1a64(tag));
}

inline std::mt19937_64 MakeEngine(uint64_t root, std::string_view tag) {
  return std::mt19937_64(DeriveSeed(root, tag));
}

}  // namespace dst

#endif  // DST_RNG_H_
