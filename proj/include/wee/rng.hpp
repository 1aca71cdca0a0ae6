#pragma once

#include <cmath>
#include <cstdint>

namespace wee {

// SplitMix64 based generator. Self-contained so that streams are
// bit-reproducible across platforms and standard-library versions
// (std::normal_distribution is not portable).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1) with 53-bit resolution.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) { return n == 0 ? 0 : next_u64() % n; }

  // Standard normal via Box-Muller with a cached spare.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u = 1.0 - uniform01();  // avoid log(0)
    double v = uniform01();
    double r = std::sqrt(-2.0 * std::log(u));
    double theta = 6.283185307179586476925286766559 * v;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

 private:
  std::uint64_t state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Order-free stream derivation: hash_seed(seed, a, b) gives a stable seed for
// the (a, b)-th work item, so parallel generation is order-independent.
inline std::uint64_t hash_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
  Rng mix(seed ^ (a * 0xd1342543de82ef95ULL) ^ (b * 0xaf251af3b0f025b5ULL));
  mix.next_u64();
  return mix.next_u64();
}

}  // namespace wee
