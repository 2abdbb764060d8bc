#pragma once

#include <cstdint>
#include <random>

namespace rwb {

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Per-replica stream. Replica r of a run with master seed s is seeded from
// splitmix64(s ^ splitmix64(r)) so streams can be regenerated independently.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  static Rng for_replica(std::uint64_t master_seed, std::uint64_t replica) {
    return Rng(splitmix64(master_seed ^ splitmix64(replica + 0x632be59bd9b4e019ULL)));
  }

  static constexpr result_type min() { return std::mt19937_64::min(); }
  static constexpr result_type max() { return std::mt19937_64::max(); }
  result_type operator()() { return engine_(); }

  // Uniform integer in [0, k) by multiply-high.
  std::uint32_t below(std::uint32_t k) {
    return static_cast<std::uint32_t>((static_cast<unsigned __int128>(engine_()) * k) >> 64);
  }

  // Uniform double in (0, 1].
  double uniform_open0() { return static_cast<double>((engine_() >> 11) + 1) * 0x1.0p-53; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace rwb
