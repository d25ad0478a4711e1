#pragma once

// Seeded random streams with bit-stable output. std::mt19937_64 itself is
// pinned by the standard, but the std distributions are not, so the few
// distributions we need are implemented here directly: training artifacts
// are compared byte-for-byte across runs and thread counts.

#include <cmath>
#include <cstdint>
#include <random>

namespace cauchynet {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform on the open interval (0, 1): top 53 bits, offset by half an ulp
  // so neither endpoint can occur.
  double uniform01() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1p-53;
  }

  // Uniform on (lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Uniform on (-1, 1).
  double symmetric() { return 2.0 * uniform01() - 1.0; }

  // Standard normal via Box-Muller; the second value of each pair is cached.
  double gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double r = std::sqrt(-2.0 * std::log(uniform01()));
    const double a = 6.283185307179586476925286766559 * uniform01();
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  std::uint64_t raw() { return engine_(); }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace cauchynet
