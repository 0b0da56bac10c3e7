#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>

namespace crn {

// Mixes a master seed with stream tags so that every generated object
// (channel matrix, shadowing draw, restart, ...) gets an independent,
// reproducible substream. splitmix64 finalizer.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t tag, std::uint64_t idx = 0) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (tag + 1) + 0xbf58476d1ce4e5b9ULL * (idx + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Deterministic RNG. mt19937_64 output is fully specified by the standard;
// the uniform/normal transforms below avoid std::*_distribution, whose
// output is implementation-defined, so identical seeds give bit-identical
// draws on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  // uniform double in [0, 1), 53 bits
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  // standard normal via Box-Muller; second value of each pair is cached
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    double u2 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  // circularly-symmetric complex normal, unit variance: re,im ~ N(0, 1/2)
  std::complex<double> cnormal() {
    const double s = std::sqrt(0.5);
    const double re = normal();
    const double im = normal();
    return {s * re, s * im};
  }

  std::uint64_t bits() { return gen_(); }

 private:
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace crn
