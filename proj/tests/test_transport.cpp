#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "rvd/gen.hpp"
#include "rvd/rng.hpp"
#include "rvd/transport.hpp"

using namespace rvd;

namespace {

Ensemble random_ensemble(std::size_t n, std::uint64_t seed, double scale = 1.0) {
  Rng rng(seed);
  std::vector<PhaseParticle> parts(n);
  for (auto& q : parts) q = {rng.gaussian_vec3(scale), rng.gaussian_vec3(scale), 1.0 / static_cast<double>(n)};
  return Ensemble(parts);
}

Ensemble translated(const Ensemble& a, const Vec6& d) {
  std::vector<PhaseParticle> parts(a.particles());
  for (auto& q : parts) {
    q.x += d.x;
    q.p += d.p;
  }
  return Ensemble(parts);
}

}  // namespace

TEST_CASE("w2_exact: identity, size and weight validation") {
  // duplicate points force ties; the canonical plan is the identity
  std::vector<PhaseParticle> dup(4);
  dup[0] = dup[1] = {{0.5, 0.0, 0.0}, {0.1, 0.0, 0.0}, 0.25};
  dup[2] = dup[3] = {{-0.5, 0.0, 0.0}, {-0.1, 0.0, 0.0}, 0.25};
  const Ensemble a(dup);
  const TransportPlan plan = w2_exact(a, a);
  CHECK(plan.cost == 0.0);
  for (std::size_t i = 0; i < plan.assignment.size(); ++i) CHECK(plan.assignment[i] == i);

  CHECK_THROWS_AS(w2_exact(a, random_ensemble(3, 1)), size_mismatch);
  std::vector<PhaseParticle> uneven(dup);
  uneven[2].w = 0.3;
  uneven[3].w = 0.2;
  CHECK_THROWS_AS(w2_exact(a, Ensemble(uneven)), weight_mismatch);
}

TEST_CASE("w2_exact: translation cost and brute-force equality at small N") {
  Rng rng(2);
  for (std::size_t n = 2; n <= 8; ++n) {
    for (int rep = 0; rep < 30; ++rep) {
      const Ensemble a = random_ensemble(n, 100 * n + static_cast<std::uint64_t>(rep));
      const Ensemble b = random_ensemble(n, 900 * n + static_cast<std::uint64_t>(rep));
      CHECK(w2_exact(a, b).cost == w2_brute_force(a, b).cost);
    }
  }

  const Ensemble a = random_ensemble(6, 5);
  const Vec6 d{{0.3, -0.2, 0.1}, {0.05, 0.0, -0.4}};
  const Ensemble b = translated(a, d);
  const TransportPlan plan = w2_exact(a, b);
  CHECK(plan.cost == doctest::Approx(norm2(d)).epsilon(1e-12));  // total mass 1
  CHECK(plan.cost == w2_brute_force(a, b).cost);
}

TEST_CASE("w2_exact: metric axioms on random data") {
  for (int t = 0; t < 20; ++t) {
    const std::size_t n = 4 + static_cast<std::size_t>(t) % 29;
    const Ensemble a = random_ensemble(n, 3 * static_cast<std::uint64_t>(t) + 11);
    const Ensemble b = random_ensemble(n, 3 * static_cast<std::uint64_t>(t) + 12);
    const Ensemble c = random_ensemble(n, 3 * static_cast<std::uint64_t>(t) + 13);
    const double ab = w2_distance(w2_exact(a, b));
    const double ba = w2_distance(w2_exact(b, a));
    const double bc = w2_distance(w2_exact(b, c));
    const double ac = w2_distance(w2_exact(a, c));
    CHECK(std::abs(ab - ba) <= 1e-12 * (1.0 + ab));
    CHECK(ac <= ab + bc + 1e-12);
  }
}

TEST_CASE("mccann_interpolant: endpoints, geodesic property, validation") {
  const Ensemble a = random_ensemble(24, 31);
  const Ensemble b = random_ensemble(24, 32);
  const TransportPlan plan = w2_exact(a, b);

  const Interpolant at1 = mccann_interpolant(a, b, plan, 1.0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(at1.ensemble[i].x.x == a[i].x.x);
    CHECK(at1.ensemble[i].p.z == a[i].p.z);
    CHECK(at1.ensemble[i].w == a[i].w);
  }

  const Interpolant at2 = mccann_interpolant(a, b, plan, 2.0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    const Vec6 moved = at2.ensemble.phase_point(i);
    const Vec6 target = b.phase_point(plan.assignment[i]);
    CHECK(norm(moved - target) == 0.0);
  }

  const double w2 = w2_distance(plan);
  const Interpolant mid = mccann_interpolant(a, b, plan, 1.5);
  const double left = w2_distance(w2_exact(a, mid.ensemble));
  const double right = w2_distance(w2_exact(mid.ensemble, b));
  CHECK(std::abs(left - 0.5 * w2) <= 1e-9);
  CHECK(std::abs(right - 0.5 * w2) <= 1e-9);

  for (int k = 0; k <= 10; ++k) {
    const double theta = 1.0 + k / 10.0;
    const Interpolant f = mccann_interpolant(a, b, plan, theta);
    const double sum = w2_distance(w2_exact(a, f.ensemble)) + w2_distance(w2_exact(f.ensemble, b));
    CHECK(std::abs(sum - w2) <= 1e-9);
  }

  CHECK_THROWS_AS(mccann_interpolant(a, b, plan, 0.99), theta_out_of_range);
  CHECK_THROWS_AS(mccann_interpolant(a, b, plan, 2.01), theta_out_of_range);
}

TEST_CASE("geodesic_velocity: zeros at identity, exact energy, explicit two-body case") {
  const Ensemble a = random_ensemble(16, 41);
  const TransportPlan self_plan = w2_exact(a, a);
  for (const Vec6& u : geodesic_velocity(a, a, self_plan)) CHECK(norm(u) == 0.0);

  const Ensemble b = random_ensemble(16, 42);
  const TransportPlan plan = w2_exact(a, b);
  const auto u = geodesic_velocity(a, b, plan);
  double energy = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) energy += a[i].w * norm2(u[i]);
  CHECK(energy == plan.cost);  // same arithmetic on both sides

  // cross assignment: each source is nearest the other target
  const Vec6 zu{{0.0, 0.0, 0.0}, {0.0, 0.0, 0.0}};
  const Vec6 zv{{1.0, 0.0, 0.0}, {0.0, 0.0, 0.0}};
  const Vec6 shift{{0.05, 0.0, 0.0}, {0.0, 0.0, 0.0}};
  const Ensemble pair_a({{zu.x, zu.p, 0.5}, {zv.x, zv.p, 0.5}});
  const Ensemble pair_b({{(zv + shift).x, (zv + shift).p, 0.5}, {(zu + shift).x, (zu + shift).p, 0.5}});
  const TransportPlan cross = w2_exact(pair_a, pair_b);
  CHECK(cross.assignment[0] == 1);
  CHECK(cross.assignment[1] == 0);
  const auto uv = geodesic_velocity(pair_a, pair_b, cross);
  CHECK(norm(uv[0] - shift) == 0.0);
  CHECK(norm(uv[1] - shift) == 0.0);
}

TEST_CASE("continuity_residual: affine exactness, degenerate zero, order-2 in dtheta") {
  const Ensemble a = random_ensemble(20, 51);
  const Ensemble b = random_ensemble(20, 52);
  const TransportPlan plan = w2_exact(a, b);

  // affine inside a wide plateau; the data never leaves the plateau
  const Vec6 coef{{0.3, -0.2, 0.7}, {0.1, 0.4, -0.5}};
  const TestFunction6 affine{
      [&](const Vec6& z) { return norm(z) < 50.0 ? dot(coef, z) + 2.0 : 0.0; },
      [&](const Vec6& z) { return norm(z) < 50.0 ? coef : Vec6{}; }};
  std::vector<double> grid;
  for (int k = 0; k <= 10; ++k) grid.push_back(1.0 + k / 10.0);
  CHECK(continuity_residual(a, b, plan, grid, affine) <= 1e-10);

  const TransportPlan self_plan = w2_exact(a, a);
  CHECK(continuity_residual(a, a, self_plan, grid, affine) == 0.0);

  // cubic radial bump: residual is O(dtheta^2)
  const double r2 = 450.0;
  const TestFunction6 bump{[&](const Vec6& z) {
                             const double u = 1.0 - norm2(z) / r2;
                             return u > 0.0 ? u * u * u : 0.0;
                           },
                           [&](const Vec6& z) {
                             const double u = 1.0 - norm2(z) / r2;
                             return u > 0.0 ? (-6.0 * u * u / r2) * z : Vec6{};
                           }};
  auto residual_at = [&](double dtheta) {
    std::vector<double> g;
    for (double th = 1.0; th <= 2.0 + 1e-12; th += dtheta) g.push_back(th);
    return continuity_residual(a, b, plan, g, bump);
  };
  const double r1 = residual_at(1e-2);
  const double r2q = residual_at(5e-3);
  CHECK(r1 / r2q >= 3.0);
  CHECK(r1 / r2q <= 5.0);
}

TEST_CASE("interpolant density bound and support radius") {
  const Ensemble a = make_gaussian_ball(256, 1.0, 1.0, 42);
  const Ensemble b = make_gaussian_ball(256, 1.0, 1.0, 43);
  const TransportPlan plan = w2_exact(a, b);

  const double cell = 2.0 * 1.0 / 8.0;
  const double end_a = phase_density_linf(a, cell);
  const double end_b = phase_density_linf(b, cell);

  const Interpolant at1 = mccann_interpolant(a, b, plan, 1.0);
  CHECK(interpolant_density_bound(at1, cell) == end_a);

  const Interpolant mid = mccann_interpolant(a, b, plan, 1.5);
  CHECK(interpolant_density_bound(mid, cell) <= 2.0 * std::max(end_a, end_b));

  // support: affine combinations of in-ball points, zero tolerance
  const double r_sum = a.support_radius() + b.support_radius();
  for (int k = 0; k <= 10; ++k) {
    const Interpolant f = mccann_interpolant(a, b, plan, 1.0 + k / 10.0);
    for (const PhaseParticle& q : f.ensemble.particles()) {
      CHECK(norm(q.x) <= r_sum);
      CHECK(norm(q.p) <= r_sum);
    }
  }
}
