#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "rvd/dynamics.hpp"
#include "rvd/gen.hpp"
#include "rvd/io.hpp"
#include "rvd/rng.hpp"

using namespace rvd;

namespace {

Ensemble two_body() {
  return Ensemble({{{0.4, 0.0, 0.0}, {0.0, 0.35, 0.0}, 0.5},
                   {{-0.4, 0.0, 0.0}, {0.0, -0.35, 0.0}, 0.5}});
}

FlowConfig two_body_config(double dt) {
  FlowConfig cfg;
  cfg.dt = dt;
  cfg.t_end = 1.0;
  cfg.eps = Softening(0.2);
  cfg.fp_tol = 1e-13;
  cfg.record_every = 1 << 20;
  return cfg;
}

double terminal_gap(const Ensemble& a, const Ensemble& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, norm(a.phase_point(i) - b.phase_point(i)));
  return d;
}

}  // namespace

TEST_CASE("force_field: rest particle feels nothing, midpoint symmetry, divergence-free") {
  const Softening eps(0.1);
  const Ensemble one({{{0.2, -0.1, 0.3}, {}, 1.0}});
  const VectorPotentialState st1 = solve_vector_potential(one, eps, 1e-12, 50);
  const auto [xdot, pdot] = force_field(one, st1, one.phase_point(0), eps);
  CHECK(norm(xdot) == 0.0);
  CHECK(norm(pdot) == 0.0);

  const Ensemble pair({{{1.0, 0.0, 0.0}, {}, 0.5}, {{-1.0, 0.0, 0.0}, {}, 0.5}});
  const VectorPotentialState st2 = solve_vector_potential(pair, eps, 1e-12, 50);
  const auto [mid_x, mid_p] = force_field(pair, st2, {{0.0, 0.0, 0.0}, {0.0, 0.0, 0.0}}, eps);
  CHECK(norm(mid_x) == 0.0);
  CHECK(norm(mid_p) == 0.0);

  // phase-space divergence of G vanishes; finite differences in all 6 coords
  const Ensemble ens = make_gaussian_ball(64, 1.0, 1.0, 19);
  const VectorPotentialState st = solve_vector_potential(ens, eps, 1e-12, 1000);
  Rng rng(20);
  for (int t = 0; t < 8; ++t) {
    const Vec6 z{rng.ball_vec3(0.8), rng.ball_vec3(0.6)};
    const double h = 1e-5;
    double div = 0.0;
    double scale = 0.0;
    for (int dim = 0; dim < 6; ++dim) {
      Vec6 zp = z, zm = z;
      zp[dim] += h;
      zm[dim] -= h;
      const auto [xp, pp] = force_field(ens, st, zp, eps);
      const auto [xm, pm] = force_field(ens, st, zm, eps);
      const Vec6 gp{xp, pp}, gm{xm, pm};
      div += (gp[dim] - gm[dim]) / (2.0 * h);
      for (int r = 0; r < 6; ++r) scale = std::max(scale, std::abs((gp[r] - gm[r]) / (2.0 * h)));
    }
    CHECK(std::abs(div) <= 1e-4 * (1.0 + scale));
  }
}

TEST_CASE("step: free streaming at velocity(p) with constant momentum") {
  const Vec3 x0{0.1, -0.2, 0.05};
  const Vec3 p0{0.4, 0.2, -0.1};
  const Ensemble one({{x0, p0, 1.0}});
  FlowConfig cfg;
  cfg.dt = 0.05;
  cfg.t_end = 1.0;
  cfg.eps = Softening(0.1);
  cfg.fp_tol = 1e-13;

  Ensemble cur = one;
  for (int k = 1; k <= 20; ++k) {
    cur = step(cur, cfg);
    const Vec3 expect = x0 + (0.05 * k) * velocity(p0);
    CHECK(norm(cur[0].x - expect) <= 1e-13);
    CHECK(cur[0].p.x == p0.x);
    CHECK(cur[0].p.y == p0.y);
    CHECK(cur[0].p.z == p0.z);
  }
}

TEST_CASE("step: one dt step vs two dt/2 steps has an O(dt^5) defect") {
  auto defect = [&](double dt) {
    const FlowConfig one = two_body_config(dt);
    FlowConfig half = two_body_config(dt / 2.0);
    const Ensemble a = step(two_body(), one);
    const Ensemble b = step(step(two_body(), half), half);
    return terminal_gap(a, b);
  };
  const double d1 = defect(0.1);
  const double d2 = defect(0.05);
  CHECK(d1 / d2 >= 24.0);  // 2^5 = 32 expected
  CHECK(d1 / d2 <= 45.0);
}

TEST_CASE("run: global order 4 on the two-body fixture") {
  std::vector<Ensemble> finals;
  for (double dt : {0.1, 0.05, 0.025, 0.0125})
    finals.push_back(run(two_body(), two_body_config(dt)).snapshots.back());
  const double e1 = terminal_gap(finals[0], finals[1]);
  const double e2 = terminal_gap(finals[1], finals[2]);
  const double e3 = terminal_gap(finals[2], finals[3]);
  CHECK(e1 / e2 >= 12.0);
  CHECK(e1 / e2 <= 20.0);
  CHECK(e2 / e3 >= 12.0);
  CHECK(e2 / e3 <= 20.0);
}

TEST_CASE("run: trivial horizon, determinism, labels, speed limit, support growth") {
  const Ensemble ball = make_gaussian_ball(96, 1.0, 1.0, 23);
  FlowConfig cfg;
  cfg.dt = 0.05;
  cfg.t_end = 0.0;
  cfg.eps = Softening(0.05);
  const Trajectory trivial = run(ball, cfg);
  CHECK(trivial.snapshots.size() == 1);
  CHECK(trivial.times[0] == ball.time());
  CHECK(terminal_gap(trivial.snapshots[0], ball) == 0.0);

  cfg.t_end = 0.3;
  cfg.record_every = 2;
  const Trajectory t1 = run(ball, cfg);
  const Trajectory t2 = run(ball, cfg);
  REQUIRE(t1.snapshots.size() == t2.snapshots.size());
  for (std::size_t k = 0; k < t1.snapshots.size(); ++k)
    CHECK(terminal_gap(t1.snapshots[k], t2.snapshots[k]) == 0.0);  // bit-identical rerun

  for (const Ensemble& snap : t1.snapshots) CHECK(ball.labels_match(snap));
  for (const StepDiagnostics& st : t1.step_stats) CHECK(st.max_displacement < cfg.dt);
  for (std::size_t k = 0; k < t1.snapshots.size(); ++k) {
    double max_x = 0.0;
    for (const PhaseParticle& q : t1.snapshots[k].particles()) max_x = std::max(max_x, norm(q.x));
    CHECK(max_x <= ball.support_radius() + t1.times[k]);
  }

  cfg.t_end = 0.3;
  cfg.dt = 0.07;  // not a divisor
  CHECK_THROWS_AS(run(ball, cfg), invalid_spec);
}

TEST_CASE("run: time reversal returns to the initial data") {
  const double dt = 0.02;
  FlowConfig cfg = two_body_config(dt);
  const Ensemble init = two_body();
  FlowEngine engine(init, cfg);
  const int steps = 50;
  for (int k = 0; k < steps; ++k) engine.step_once(dt);
  for (int k = 0; k < steps; ++k) engine.step_once(-dt);
  const double back = terminal_gap(engine.current(0.0), init);

  // one-step defect measured by step halving at this dt
  const FlowConfig half = two_body_config(dt / 2.0);
  const double defect =
      terminal_gap(step(init, cfg), step(step(init, half), half)) / (1.0 - 1.0 / 16.0);
  CHECK(back <= 10.0 * defect * 2 * steps);
}

TEST_CASE("run: golden terminal snapshot regression") {
  const Ensemble ball = make_gaussian_ball(128, 1.0, 1.0, 42);
  FlowConfig cfg;
  cfg.dt = 0.02;
  cfg.t_end = 0.3;
  cfg.eps = Softening(0.05);
  cfg.fp_tol = 1e-11;
  cfg.record_every = 5;
  cfg.seed = 42;
  const Trajectory traj = run(ball, cfg);

  const std::filesystem::path ref_path = std::filesystem::path(RVD_TEST_DATA_DIR) / "golden_flow_n128.csv";
  REQUIRE(std::filesystem::exists(ref_path));
  const Ensemble ref = io::read_ensemble_csv(ref_path);
  REQUIRE(ref.size() == traj.snapshots.back().size());
  CHECK(terminal_gap(traj.snapshots.back(), ref) <= 1e-9);
}

TEST_CASE("volume_preservation_check: free streaming and field-driven levels") {
  // nearly weightless sources: tracers free-stream, det stays 1 to FD noise
  std::vector<PhaseParticle> ghost(2);
  ghost[0] = {{0.3, 0.0, 0.0}, {0.1, 0.0, 0.0}, 1e-30};
  ghost[1] = {{-0.3, 0.0, 0.0}, {-0.1, 0.0, 0.0}, 1e-30};
  FlowConfig cfg;
  cfg.dt = 0.05;
  cfg.t_end = 0.2;
  cfg.eps = Softening(0.1);
  cfg.record_every = 1;
  const Trajectory free_traj = run(Ensemble(ghost, 0.0, 1.0), cfg);
  CHECK(volume_preservation_check(free_traj, 4, 1e-4) <= 1e-9);

  // order sanity at desk scale: deviation shrinks >= 3.5x per dt halving
  const Ensemble ball = make_gaussian_ball(64, 1.0, 1.0, 29);
  auto dev_at = [&](double dt) {
    FlowConfig c;
    c.dt = dt;
    c.t_end = 0.4;
    c.eps = Softening(0.1);
    c.fp_tol = 1e-12;
    c.record_every = 1 << 20;
    c.seed = 29;
    return volume_preservation_check(run(ball, c), 6, 1e-5);
  };
  const double d1 = dev_at(0.1);
  const double d2 = dev_at(0.05);
  CHECK(d1 / d2 >= 3.5);
}
