#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace evopath {

// Seeded random stream. Child streams are derived from a parent seed and a
// text label, so a stream's draws never depend on how many values other
// streams consumed or on which thread runs it.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : seed_(seed), engine_(mix(seed)) {}

  std::uint64_t seed() const { return seed_; }

  Rng derive(std::string_view label) const { return Rng(mix(seed_ ^ fnv1a(label))); }
  Rng derive(std::string_view label, std::uint64_t index) const {
    return Rng(mix(mix(seed_ ^ fnv1a(label)) + index));
  }

  double normal() { return normal_(engine_); }
  double uniform() { return uniform_(engine_); }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  std::uint64_t bits() { return engine_(); }

  std::mt19937_64& engine() { return engine_; }

  static std::uint64_t mix(std::uint64_t x) {
    // splitmix64 finalizer
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  }

  static std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
    return h;
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

}  // namespace evopath
