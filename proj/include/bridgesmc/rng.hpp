#pragma once

#include <cstdint>
#include <random>

namespace bridgesmc {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Per-chain random stream. Replicate streams are derived from the root seed by
/// replicate index, so results do not depend on how work is scheduled.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(splitmix64(seed ^ 0xD1B54A32D192ED03ULL)) {}

  static std::uint64_t derive(std::uint64_t root, std::uint64_t index) {
    return splitmix64(root + 0x9E3779B97F4A7C15ULL * (index + 1));
  }

  double uniform() { return unif_(gen_); }
  double normal() { return norm_(gen_); }
  std::uint64_t raw() { return gen_(); }

 private:
  std::mt19937_64 gen_;
  std::uniform_real_distribution<double> unif_{0.0, 1.0};
  std::normal_distribution<double> norm_{0.0, 1.0};
};

}  // namespace bridgesmc
