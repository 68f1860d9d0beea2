#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace markovpca {

// splitmix64 finalizer. All seed derivation in the project goes through this
// so runs are reproducible from the master seed alone:
//   mix(z): z += 0x9E3779B97F4A7C15;
//           z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9;
//           z = (z ^ (z >> 27)) * 0x94D049BB133111EB;
//           return z ^ (z >> 31);
constexpr std::uint64_t splitmix64(std::uint64_t z) noexcept {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// derive_seed(parent, index) = mix(mix(parent) ^ index)
constexpr std::uint64_t derive_seed(std::uint64_t parent,
                                    std::uint64_t index) noexcept {
  return splitmix64(splitmix64(parent) ^ index);
}

// Sub-stream identifiers used inside one trial.
namespace stream {
inline constexpr std::uint64_t kPath = 1;
inline constexpr std::uint64_t kNoise = 2;
inline constexpr std::uint64_t kInit = 3;
inline constexpr std::uint64_t kBernoulliP = 4;
inline constexpr std::uint64_t kProbe = 5;
}  // namespace stream

// mt19937_64 plus portable uniform/normal draws. std:: distributions are
// implementation-defined, which would break cross-platform reproducibility.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // Uniform on (0, 1).
  double uniform_open() {
    double u;
    do {
      u = uniform();
    } while (u == 0.0);
    return u;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double r = std::sqrt(-2.0 * std::log(uniform_open()));
    const double theta = 2.0 * M_PI * uniform();
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace markovpca
