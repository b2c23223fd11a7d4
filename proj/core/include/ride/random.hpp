#ifndef RIDE_RANDOM_HPP
#define RIDE_RANDOM_HPP

#include <cmath>
#include <cstdint>
#include <random>

namespace ride {

// Deterministic random stream. All variate generation is implemented on top
// of the raw mt19937_64 output so that results are bit-identical across
// platforms and standard library versions (std::normal_distribution and
// friends are implementation-defined).
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed)
      : seed_(seed), engine_(mix(seed)) {}

  // Child stream whose draws are independent of this stream's position.
  // Used to give each (epoch, batch) or candidate its own stream so worker
  // count and evaluation order never change results.
  RandomStream fork(std::uint64_t tag_a, std::uint64_t tag_b = 0) const {
    std::uint64_t s = seed_;
    s = mix(s ^ (0x9e3779b97f4a7c15ULL + tag_a));
    s = mix(s ^ (0xbf58476d1ce4e5b9ULL + tag_b));
    return RandomStream(s);
  }

  std::uint64_t raw() { return engine_(); }

  // Uniform on [0, 1), 53-bit resolution.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller, one spare value cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * 3.141592653589793238462643383279502884 * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  // Uniform integer in [0, bound). Rejection sampling, no modulo bias.
  std::uint64_t uniform_index(std::uint64_t bound) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t v;
    do {
      v = engine_();
    } while (v >= limit);
    return v % bound;
  }

  std::uint64_t seed() const { return seed_; }

 private:
  // splitmix64 finalizer; decorrelates nearby seeds.
  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t seed_;
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace ride

#endif  // RIDE_RANDOM_HPP
