// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <initializer_list>
#include <random>

namespace mimosync {

// Deterministic random stream. The engine is std::mt19937_64; the uniform
// and Gaussian transforms are spelled out here instead of using
// std::*_distribution, whose algorithms are implementation-defined. Same
// seed, same sequence, on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  // Uniform in [0, 1) with 53-bit resolution.
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n), n >= 1. Top bits of the engine output.
  std::uint32_t pick(std::uint32_t n) {
    return static_cast<std::uint32_t>((eng_() >> 32) % n);
  }

  // Standard normal via Box-Muller; pairs are cached.
  double gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    const double mag = std::sqrt(-2.0 * std::log(u1));
    const double ang = 2.0 * M_PI * u2;
    spare_ = mag * std::sin(ang);
    have_spare_ = true;
    return mag * std::cos(ang);
  }

  // Circularly-symmetric complex Gaussian with unit variance per complex
  // sample (real and imaginary parts each N(0, 1/2)).
  std::complex<double> cgaussian() {
    const double re = gaussian();
    const double im = gaussian();
    return {re * M_SQRT1_2, im * M_SQRT1_2};
  }

  // Derive a child seed from a master seed and a path of indices
  // (splitmix64 chaining). Used to give every (snr, trial) cell its own
  // independent, reproducible stream.
  static std::uint64_t derive(std::uint64_t master,
                              std::initializer_list<std::uint64_t> path) {
    std::uint64_t s = splitmix(master ^ 0x6d696d6f73796e63ULL);  // "mimosync"
    for (std::uint64_t p : path) s = splitmix(s ^ splitmix(p));
    return s;
  }

 private:
  static std::uint64_t splitmix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  }

  std::mt19937_64 eng_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace mimosync
