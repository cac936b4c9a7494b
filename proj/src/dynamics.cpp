#include "rvd/dynamics.hpp"

#include <cmath>
#include <limits>

#include "rvd/rng.hpp"
#include "rvd/threading.hpp"

namespace rvd {

void FlowConfig::validate() const {
  if (!(dt > 0.0)) throw invalid_spec("dt must be positive");
  if (!(t_end >= 0.0)) throw invalid_spec("t_end must be nonnegative");
  if (t_end > 0.0 && dt > t_end * (1.0 + 1e-12)) throw invalid_spec("dt must not exceed t_end");
  if (!(fp_tol > 0.0)) throw invalid_spec("fp_tol must be positive");
  if (fp_max_iter <= 0) throw invalid_spec("fp_max_iter must be positive");
  if (!(eps.eps > 0.0)) throw invalid_spec("time stepping requires eps > 0");
  if (record_every < 1) throw invalid_spec("record_every must be >= 1");
}

std::pair<Vec3, Vec3> force_field(const Ensemble& ens, const VectorPotentialState& state, const Vec6& z,
                                  Softening eps) {
  FieldEvaluator ev(ens, state, eps);
  const simd::FieldSums f = ev.fields(z.x);
  const Vec3 v = velocity(z.p - f.a);
  return {v, -f.grad_phi + f.grad_a * v};
}

FlowEngine::FlowEngine(Ensemble f0, FlowConfig cfg) : cfg_(cfg) {
  if (f0.empty()) throw empty_ensemble("flow of an empty ensemble");
  const std::size_t n = f0.size();
  x_.resize(n);
  p_.resize(n);
  w_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    x_[i] = f0[i].x;
    p_[i] = f0[i].p;
    w_[i] = f0[i].w;
  }
  support_radius_ = f0.support_radius();
}

void FlowEngine::stage_rates(const std::vector<Vec3>& x, const std::vector<Vec3>& p,
                             const std::vector<Vec6>& tr, std::vector<Vec3>& xdot, std::vector<Vec3>& pdot,
                             std::vector<Vec6>& trdot) {
  const std::size_t n = x.size();
  std::vector<PhaseParticle> parts(n);
  for (std::size_t i = 0; i < n; ++i) parts[i] = {x[i], p[i], w_[i]};
  Ensemble stage(std::move(parts), 0.0, 0.0);

  PicardOptions opt;
  opt.tol = cfg_.fp_tol;
  opt.max_iter = cfg_.fp_max_iter;
  if (warm_a_.size() == n) opt.warm_start = &warm_a_;
  VectorPotentialState st = solve_vector_potential(stage, cfg_.eps, opt);
  warm_a_ = st.values;
  diag_.fp_iterations += st.iterations;
  diag_.fp_residual = std::max(diag_.fp_residual, st.residual);

  FieldEvaluator ev(stage, st, cfg_.eps);
  xdot.resize(n);
  pdot.resize(n);
  detail::parallel_for(n, [&](std::size_t i) {
    const Vec3 v = velocity(p[i] - st.values[i]);
    const simd::FieldSums f = ev.fields(x[i]);
    xdot[i] = v;
    pdot[i] = -f.grad_phi + f.grad_a * v;
  });
  trdot.resize(tr.size());
  detail::parallel_for(tr.size(), [&](std::size_t i) {
    const simd::FieldSums f = ev.fields(tr[i].x);
    const Vec3 v = velocity(tr[i].p - f.a);
    trdot[i] = {v, -f.grad_phi + f.grad_a * v};
  });
}

void FlowEngine::step_once(double signed_dt) {
  const std::size_t n = x_.size();
  const std::size_t m = tracers_.size();
  const double dt = signed_dt;
  diag_ = {};

  std::vector<Vec3> k1x(n), k1p(n), k2x(n), k2p(n), k3x(n), k3p(n), k4x(n), k4p(n);
  std::vector<Vec6> k1t(m), k2t(m), k3t(m), k4t(m);
  std::vector<Vec3> sx(n), sp(n);
  std::vector<Vec6> st(m);

  stage_rates(x_, p_, tracers_, k1x, k1p, k1t);

  for (std::size_t i = 0; i < n; ++i) {
    sx[i] = x_[i] + 0.5 * dt * k1x[i];
    sp[i] = p_[i] + 0.5 * dt * k1p[i];
  }
  for (std::size_t i = 0; i < m; ++i) st[i] = tracers_[i] + 0.5 * dt * k1t[i];
  stage_rates(sx, sp, st, k2x, k2p, k2t);

  for (std::size_t i = 0; i < n; ++i) {
    sx[i] = x_[i] + 0.5 * dt * k2x[i];
    sp[i] = p_[i] + 0.5 * dt * k2p[i];
  }
  for (std::size_t i = 0; i < m; ++i) st[i] = tracers_[i] + 0.5 * dt * k2t[i];
  stage_rates(sx, sp, st, k3x, k3p, k3t);

  for (std::size_t i = 0; i < n; ++i) {
    sx[i] = x_[i] + dt * k3x[i];
    sp[i] = p_[i] + dt * k3p[i];
  }
  for (std::size_t i = 0; i < m; ++i) st[i] = tracers_[i] + dt * k3t[i];
  stage_rates(sx, sp, st, k4x, k4p, k4t);

  const double c = dt / 6.0;
  double max_disp = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 dx = c * (k1x[i] + 2.0 * k2x[i] + 2.0 * k3x[i] + k4x[i]);
    x_[i] += dx;
    p_[i] += c * (k1p[i] + 2.0 * k2p[i] + 2.0 * k3p[i] + k4p[i]);
    max_disp = std::max(max_disp, norm(dx));
  }
  for (std::size_t i = 0; i < m; ++i)
    tracers_[i] += c * (k1t[i] + 2.0 * k2t[i] + 2.0 * k3t[i] + k4t[i]);
  diag_.max_displacement = max_disp;
}

Ensemble FlowEngine::current(double time) const {
  std::vector<PhaseParticle> parts(x_.size());
  for (std::size_t i = 0; i < x_.size(); ++i) parts[i] = {x_[i], p_[i], w_[i]};
  return Ensemble(std::move(parts), time, 0.0);
}

Ensemble step(const Ensemble& ens, const FlowConfig& cfg) {
  cfg.validate();
  FlowEngine engine(ens, cfg);
  engine.step_once(cfg.dt);
  return engine.current(ens.time() + cfg.dt);
}

namespace {

int step_count(const FlowConfig& cfg) {
  if (cfg.t_end == 0.0) return 0;
  const long n = std::lround(cfg.t_end / cfg.dt);
  if (n < 1 || std::abs(static_cast<double>(n) * cfg.dt - cfg.t_end) > 1e-9 * std::max(1.0, cfg.t_end))
    throw invalid_spec("t_end must be an integer multiple of dt");
  return static_cast<int>(n);
}

}  // namespace

Trajectory run(const Ensemble& f0, const FlowConfig& cfg) {
  cfg.validate();
  if (f0.empty()) throw empty_ensemble("run on an empty ensemble");
  const int nsteps = step_count(cfg);

  Trajectory traj;
  traj.initial = f0;
  traj.config = cfg;
  traj.times.push_back(f0.time());
  traj.snapshots.push_back(f0);

  FlowEngine engine(f0, cfg);
  for (int k = 1; k <= nsteps; ++k) {
    try {
      engine.step_once(cfg.dt);
    } catch (const no_convergence& e) {
      const double t = f0.time() + static_cast<double>(k - 1) * cfg.dt;
      throw no_convergence(e.residual, e.iterations, "while stepping from t = " + std::to_string(t));
    }
    traj.step_stats.push_back(engine.last_step());
    if (k % cfg.record_every == 0 || k == nsteps) {
      const double t = f0.time() + static_cast<double>(k) * cfg.dt;
      traj.times.push_back(t);
      traj.snapshots.push_back(engine.current(t));
    }
  }
  return traj;
}

namespace {

double det6(double m[6][6]) {
  double det = 1.0;
  for (int c = 0; c < 6; ++c) {
    int piv = c;
    for (int r = c + 1; r < 6; ++r)
      if (std::abs(m[r][c]) > std::abs(m[piv][c])) piv = r;
    if (m[piv][c] == 0.0) return 0.0;
    if (piv != c) {
      for (int j = 0; j < 6; ++j) std::swap(m[piv][j], m[c][j]);
      det = -det;
    }
    det *= m[c][c];
    for (int r = c + 1; r < 6; ++r) {
      const double f = m[r][c] / m[c][c];
      for (int j = c; j < 6; ++j) m[r][j] -= f * m[c][j];
    }
  }
  return det;
}

}  // namespace

double volume_preservation_check(const Trajectory& traj, int sample_count, double h) {
  if (traj.snapshots.size() < 2) throw invalid_spec("volume check needs a trajectory with >= 2 snapshots");
  if (!(h > 0.0)) throw invalid_spec("finite-difference step must be positive");
  const Ensemble& f0 = traj.initial;

  // Frames are seeded at random phase points kept a couple of softening
  // lengths away from the sources; a frame riding inside a particle's
  // softened core has third flow derivatives ~ w/eps^5 that drown det(J)-1
  // in finite-difference bias.
  const double eps = traj.config.eps.eps;
  const double r = f0.support_radius();
  Rng rng(traj.config.seed ^ 0x9e3779b97f4a7c15ull);
  std::vector<Vec6> tracers;
  tracers.reserve(static_cast<std::size_t>(sample_count) * 12);
  for (int s = 0; s < sample_count; ++s) {
    Vec6 z;
    for (int attempt = 0; attempt < 1000; ++attempt) {
      z = {rng.ball_vec3(0.9 * r), rng.ball_vec3(0.8 * r)};
      double dmin = std::numeric_limits<double>::infinity();
      for (const PhaseParticle& q : f0.particles()) dmin = std::min(dmin, norm(q.x - z.x));
      if (dmin >= 2.0 * eps) break;
    }
    for (int dim = 0; dim < 6; ++dim) {
      Vec6 zp = z, zm = z;
      zp[dim] += h;
      zm[dim] -= h;
      tracers.push_back(zp);
      tracers.push_back(zm);
    }
  }

  FlowEngine engine(f0, traj.config);
  engine.set_tracers(std::move(tracers));
  const int nsteps = static_cast<int>(std::lround(traj.config.t_end / traj.config.dt));
  for (int k = 0; k < nsteps; ++k) engine.step_once(traj.config.dt);

  const std::vector<Vec6>& out = engine.tracers();
  double worst = 0.0;
  for (int s = 0; s < sample_count; ++s) {
    double jac[6][6];
    for (int dim = 0; dim < 6; ++dim) {
      const Vec6& zp = out[static_cast<std::size_t>(s) * 12 + static_cast<std::size_t>(2 * dim)];
      const Vec6& zm = out[static_cast<std::size_t>(s) * 12 + static_cast<std::size_t>(2 * dim) + 1];
      for (int r = 0; r < 6; ++r) jac[r][dim] = (zp[r] - zm[r]) / (2.0 * h);
    }
    worst = std::max(worst, std::abs(det6(jac) - 1.0));
  }
  return worst;
}

}  // namespace rvd
