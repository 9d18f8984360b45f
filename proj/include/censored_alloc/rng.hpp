#pragma once

#include <cstdint>
#include <random>

namespace censored_alloc {

// splitmix64 finalizer, used to mix (master seed, replication, stream tag)
// into independent stream seeds.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Stream seed derivation rule: mix the replication index, then the tag.
// Environment draws use tag 0, policy-side randomness (if any) tag 1.
inline std::uint64_t derive_stream_seed(std::uint64_t master,
                                        std::uint64_t replication,
                                        std::uint64_t tag) {
  std::uint64_t s = splitmix64(master ^ 0x6a09e667f3bcc909ULL);
  s = splitmix64(s + 0x9e3779b97f4a7c15ULL * (replication + 1));
  s = splitmix64(s ^ splitmix64(tag + 0xbb67ae8584caa73bULL));
  return s;
}

// Deterministic uniform stream. std::uniform_real_distribution is
// implementation-defined, so uniforms are assembled from raw 64-bit draws:
// identical seeds give bit-identical sequences on any conforming platform.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : engine_(splitmix64(seed)) {}

  // uniform in [0, 1), 53 random bits
  double uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  bool bernoulli(double p) { return uniform01() < p; }

  std::uint64_t next_u64() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace censored_alloc
