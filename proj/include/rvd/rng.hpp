#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "rvd/vec.hpp"

namespace rvd {

// Deterministic random source. The standard distributions are
// implementation-defined, so the samplers below are spelled out by hand;
// a given seed produces the same stream on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next_u64() { return eng_(); }

  // uniform in [0, 1)
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Box-Muller, one value per call (the pair partner is cached)
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
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  Vec3 gaussian_vec3(double scale) { return {scale * gaussian(), scale * gaussian(), scale * gaussian()}; }

  // uniform in the closed ball of given radius (rejection from the cube)
  Vec3 ball_vec3(double radius) {
    while (true) {
      Vec3 v{uniform(-1.0, 1.0), uniform(-1.0, 1.0), uniform(-1.0, 1.0)};
      if (norm2(v) <= 1.0) return radius * v;
    }
  }

  // isotropic gaussian of the given scale, rejected to the closed ball
  Vec3 gaussian_in_ball(double scale, double radius) {
    while (true) {
      Vec3 v = gaussian_vec3(scale);
      if (norm(v) <= radius) return v;
    }
  }

 private:
  std::mt19937_64 eng_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace rvd
