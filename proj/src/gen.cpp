#include "rvd/gen.hpp"

#include <cmath>

#include "rvd/errors.hpp"
#include "rvd/rng.hpp"

namespace rvd {

namespace {

std::vector<PhaseParticle> with_unit_mass(std::vector<PhaseParticle> parts) {
  const double w = 1.0 / static_cast<double>(parts.size());
  for (auto& p : parts) p.w = w;
  return parts;
}

void check_args(std::size_t n, double radius) {
  if (n == 0) throw invalid_spec("particle count must be positive");
  if (!(radius > 0.0)) throw invalid_spec("support radius must be positive");
}

}  // namespace

Ensemble make_gaussian_ball(std::size_t n, double radius, double momentum_scale, std::uint64_t seed) {
  check_args(n, radius);
  Rng rng(seed);
  std::vector<PhaseParticle> parts(n);
  const double xs = 0.4 * radius;
  for (auto& q : parts) {
    q.x = rng.gaussian_in_ball(xs, radius);
    q.p = rng.gaussian_in_ball(0.4 * momentum_scale, std::min(momentum_scale, radius));
  }
  return Ensemble(with_unit_mass(std::move(parts)), 0.0, radius);
}

Ensemble make_uniform_ball(std::size_t n, double radius, double momentum_scale, std::uint64_t seed) {
  check_args(n, radius);
  Rng rng(seed);
  std::vector<PhaseParticle> parts(n);
  for (auto& q : parts) {
    q.x = rng.ball_vec3(radius);
    q.p = rng.ball_vec3(std::min(momentum_scale, radius));
  }
  return Ensemble(with_unit_mass(std::move(parts)), 0.0, radius);
}

Ensemble make_two_stream(std::size_t n, double radius, double momentum_scale, std::uint64_t seed) {
  check_args(n, radius);
  Rng rng(seed);
  std::vector<PhaseParticle> parts(n);
  const double drift = 0.5 * momentum_scale;
  const double thermal = 0.1 * momentum_scale;
  const double pmax = std::min(momentum_scale, radius);
  for (std::size_t i = 0; i < n; ++i) {
    parts[i].x = rng.ball_vec3(radius);
    const double sign = (i % 2 == 0) ? 1.0 : -1.0;
    Vec3 p;
    do {
      p = rng.gaussian_vec3(thermal);
      p.z += sign * drift;
    } while (norm(p) > pmax);
    parts[i].p = p;
  }
  return Ensemble(with_unit_mass(std::move(parts)), 0.0, radius);
}

Ensemble make_family(const std::string& family, std::size_t n, double radius, double momentum_scale,
                     std::uint64_t seed) {
  if (family == "gaussian-ball") return make_gaussian_ball(n, radius, momentum_scale, seed);
  if (family == "uniform-ball") return make_uniform_ball(n, radius, momentum_scale, seed);
  if (family == "two-stream") return make_two_stream(n, radius, momentum_scale, seed);
  throw invalid_spec("unknown ensemble family: " + family);
}

Ensemble jitter_ensemble(const Ensemble& ens, double delta, std::uint64_t seed) {
  if (!(delta >= 0.0)) throw invalid_spec("jitter must be nonnegative");
  Rng rng(seed);
  std::vector<PhaseParticle> parts(ens.particles());
  for (auto& q : parts) {
    q.x += rng.ball_vec3(delta);
    q.p += rng.ball_vec3(delta);
  }
  return Ensemble(std::move(parts), ens.time(), ens.support_radius() + delta);
}

}  // namespace rvd
