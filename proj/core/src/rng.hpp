#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace pcsnn::detail {

// mt19937_64 output is fully specified by the standard; the distributions in
// <random> are not, so draws are derived from raw words here.

inline double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

class GaussianStream {
 public:
  explicit GaussianStream(std::uint64_t seed) : rng_(seed) {}

  double next() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    while (u1 <= 0.0) u1 = unit_uniform(rng_);
    const double u2 = unit_uniform(rng_);
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * std::numbers::pi * u2);
    has_spare_ = true;
    return r * std::cos(2.0 * std::numbers::pi * u2);
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * unit_uniform(rng_); }
  std::uint64_t raw() { return rng_(); }

 private:
  std::mt19937_64 rng_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace pcsnn::detail
