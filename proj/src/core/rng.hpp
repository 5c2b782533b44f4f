#pragma once

#include <cmath>
#include <cstdint>

namespace b3d {

inline std::uint64_t splitmix64_next(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// xoshiro256** generator. Every random choice in the project flows from one
// u64 seed through `split` chains: split(k) is a pure function of (seed, k),
// independent of how much the parent stream has been consumed. This is what
// makes per-particle / per-item streams reproducible under any thread count.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  Rng split(std::uint64_t k0, std::uint64_t k1 = 0, std::uint64_t k2 = 0) const;

  std::uint64_t next_u64();

  // uniform in [0, 1)
  double uniform();
  // uniform in [lo, hi)
  double uniform(double lo, double hi);
  // uniform integer in [0, n), n >= 1
  std::uint64_t uniform_int(std::uint64_t n);
  // standard normal via Box-Muller (always consumes two uniforms)
  double normal();
  double normal(double mean, double stddev);

  std::uint64_t seed() const noexcept { return seed_; }

 private:
  std::uint64_t seed_;
  std::uint64_t s_[4];
};

}  // namespace b3d
