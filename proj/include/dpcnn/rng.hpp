// Deterministic, platform-independent random streams.
//
// Streams are keyed by (seed, tag, indices) rather than by draw order, so
// parallel dataset generation and training produce identical results for any
// worker count. SplitMix64 drives key mixing; the stream itself is xoshiro256**.
#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace dpcnn {

inline uint64_t splitmix64(uint64_t& state) {
  uint64_t z = (state += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// xoshiro256** seeded from an arbitrary list of 64-bit key words.
class Rng {
 public:
  explicit Rng(uint64_t seed) { init(&seed, 1); }
  Rng(std::initializer_list<uint64_t> key) { init(key.begin(), key.size()); }

  uint64_t next_u64() {
    const uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Uniform in [0, 1).
  double uniform() { return (next_u64() >> 11) * 0x1.0p-53; }

  // Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Integer in [0, n).
  uint64_t below(uint64_t n) { return next_u64() % n; }

  // Standard normal via Box-Muller; draws are paired and cached.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

 private:
  static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  void init(const uint64_t* key, size_t n) {
    uint64_t mix = 0x6a09e667f3bcc908ull;
    for (size_t i = 0; i < n; ++i) {
      mix ^= key[i] + 0x9e3779b97f4a7c15ull + (mix << 6) + (mix >> 2);
      splitmix64(mix);
    }
    for (auto& s : s_) s = splitmix64(mix);
  }

  uint64_t s_[4];
  double spare_ = 0.0;
  bool have_spare_ = false;
};

// Stream tags keep independent uses of the same (seed, index) apart.
enum class StreamTag : uint64_t {
  kRenderNoise = 1,
  kGlyph = 2,
  kSplit = 3,
  kAugment = 4,
  kWeightInit = 5,
  kParamInit = 6,
  kBatch = 7,
  kDropout = 8,
  kPattern = 9,
};

inline Rng make_stream(uint64_t seed, StreamTag tag, uint64_t a = 0, uint64_t b = 0) {
  return Rng{seed, static_cast<uint64_t>(tag), a, b};
}

}  // namespace dpcnn
