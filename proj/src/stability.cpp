#include "rvd/stability.hpp"

#include <algorithm>
#include <cmath>

#include "rvd/gen.hpp"
#include "rvd/threading.hpp"

namespace rvd {

namespace {

constexpr double kInvE = 0.36787944117144233;

void check_same_grid(const Trajectory& a, const Trajectory& b) {
  if (a.times.size() != b.times.size()) throw label_mismatch("trajectories record different time grids");
  for (std::size_t k = 0; k < a.times.size(); ++k)
    if (std::abs(a.times[k] - b.times[k]) > 1e-12) throw label_mismatch("trajectory times differ");
}

}  // namespace

double q_functional(const Ensemble& f0, const Trajectory& traj1, const Trajectory& traj2,
                    std::size_t t_index) {
  if (t_index >= traj1.snapshots.size() || t_index >= traj2.snapshots.size())
    throw invalid_spec("snapshot index out of range");
  const Ensemble& s1 = traj1.snapshots[t_index];
  const Ensemble& s2 = traj2.snapshots[t_index];
  if (!f0.labels_match(s1) || !f0.labels_match(s2))
    throw label_mismatch("trajectories do not share the initial labels and weights");
  NeumaierSum acc;
  for (std::size_t i = 0; i < f0.size(); ++i)
    acc.add(f0[i].w * norm2(s1.phase_point(i) - s2.phase_point(i)));
  return 0.5 * acc.value();
}

double gronwall_envelope(double q0, double c, double t) {
  return std::exp(1.0 - (1.0 - std::log(q0)) * std::exp(-c * t));
}

GronwallFit gronwall_fit(const std::vector<double>& times, const std::vector<double>& q_values) {
  if (times.size() != q_values.size() || times.size() < 2)
    throw invalid_spec("gronwall fit needs >= 2 aligned samples");

  bool all_zero = true;
  for (double q : q_values) {
    if (q < 0.0) throw non_positive_q("negative Q value");
    if (q > 0.0) all_zero = false;
  }
  if (all_zero) {
    GronwallFit fit;
    fit.c = 0.0;
    fit.bound_satisfied = true;
    fit.exact_uniqueness = true;
    return fit;
  }
  for (double q : q_values) {
    if (q == 0.0) throw non_positive_q("Q hits zero inside a nonzero trace");
    if (q > kInvE * (1.0 + 1e-12)) throw regime_violated("Q exceeds 1/e on the fitted window");
  }

  std::vector<double> y(q_values.size());
  for (std::size_t k = 0; k < q_values.size(); ++k) y[k] = 1.0 - std::log(q_values[k]);

  GronwallFit fit;
  for (std::size_t k = 0; k + 1 < y.size(); ++k) {
    const double dt = times[k + 1] - times[k];
    if (!(dt > 0.0)) throw invalid_spec("times must be strictly increasing");
    fit.c = std::max(fit.c, -((y[k + 1] - y[k]) / dt) / y[k]);
  }
  fit.c = std::max(fit.c, 0.0);

  fit.bound_satisfied = true;
  for (std::size_t k = 0; k < y.size(); ++k) {
    const double y_env = y[0] * std::exp(-fit.c * (times[k] - times[0]));
    if (y[k] < y_env - 1e-9 * (1.0 + std::abs(y_env))) {
      fit.bound_satisfied = false;
      break;
    }
  }
  return fit;
}

FieldDiffRatios field_difference_vs_w2(const Ensemble& e1, const Ensemble& e2, Softening eps, int grid_n,
                                       double fp_tol, int fp_max_iter) {
  if (grid_n < 2) throw invalid_spec("probe grid needs >= 2 cells per axis");

  FieldDiffRatios out;
  const TransportPlan plan = w2_exact(e1, e2);
  out.w2 = w2_distance(plan);

  PicardOptions opt;
  opt.tol = fp_tol;
  opt.max_iter = fp_max_iter;
  const VectorPotentialState st1 = solve_vector_potential(e1, eps, opt);
  const VectorPotentialState st2 = solve_vector_potential(e2, eps, opt);
  const FieldEvaluator f1(e1, st1, eps);
  const FieldEvaluator f2(e2, st2, eps);

  // common support box, padded isotropically (translation covariant)
  Vec3 lo = e1[0].x, hi = e1[0].x;
  auto absorb = [&](const Ensemble& e) {
    for (const PhaseParticle& q : e.particles())
      for (int d = 0; d < 3; ++d) {
        lo[d] = std::min(lo[d], q.x[d]);
        hi[d] = std::max(hi[d], q.x[d]);
      }
  };
  absorb(e1);
  absorb(e2);
  double ext = 0.0;
  for (int d = 0; d < 3; ++d) ext = std::max(ext, hi[d] - lo[d]);
  const double pad = 0.25 * ext;
  Vec3 cell;
  for (int d = 0; d < 3; ++d) {
    lo[d] -= pad;
    hi[d] += pad;
    cell[d] = (hi[d] - lo[d]) / grid_n;
  }
  const double vol = cell.x * cell.y * cell.z;

  const std::size_t total = static_cast<std::size_t>(grid_n) * grid_n * grid_n;
  std::vector<double> gphi2(total), ga2(total);
  detail::parallel_for(total, [&](std::size_t idx) {
    const int i = static_cast<int>(idx / (static_cast<std::size_t>(grid_n) * grid_n));
    const int j = static_cast<int>(idx / grid_n % grid_n);
    const int k = static_cast<int>(idx % grid_n);
    const Vec3 x{lo.x + (i + 0.5) * cell.x, lo.y + (j + 0.5) * cell.y, lo.z + (k + 0.5) * cell.z};
    const simd::FieldSums a = f1.fields(x);
    const simd::FieldSums b = f2.fields(x);
    gphi2[idx] = norm2(a.grad_phi - b.grad_phi);
    const Mat3 dm = a.grad_a - b.grad_a;
    double fr = 0.0;
    for (double v : dm.m) fr += v * v;
    ga2[idx] = fr;
  });
  NeumaierSum sp, sa;
  for (std::size_t idx = 0; idx < total; ++idx) {
    sp.add(gphi2[idx]);
    sa.add(ga2[idx]);
  }
  out.l2_grad_phi = std::sqrt(vol * sp.value());
  out.l2_grad_a = std::sqrt(vol * sa.value());

  NeumaierSum rw;
  for (std::size_t i = 0; i < e1.size(); ++i) {
    const Vec3 x = e1[i].x;
    rw.add(e1[i].w * norm2(f1.a(x) - f2.a(x)));
  }
  out.rho_weighted_a2 = rw.value();

  if (out.w2 == 0.0) {
    out.degenerate = true;  // identical inputs, 0/0 reported as 0
    return out;
  }
  out.ratio_phi = out.l2_grad_phi / out.w2;
  out.ratio_a = out.l2_grad_a / out.w2;
  out.ratio_last = out.rho_weighted_a2 / (out.w2 * out.w2);
  return out;
}

std::string to_string(PerturbSpec::Kind kind) {
  switch (kind) {
    case PerturbSpec::Kind::none:
      return "none";
    case PerturbSpec::Kind::dt_halving:
      return "dt-halving";
    case PerturbSpec::Kind::fp_tol_tightening:
      return "fp-tol-tightening";
    case PerturbSpec::Kind::initial_jitter:
      return "initial-jitter";
  }
  return "unknown";
}

StabilityTrace uniqueness_experiment(const Ensemble& f0, const FlowConfig& cfg_base,
                                     const PerturbSpec& perturbation) {
  FlowConfig cfg2 = cfg_base;
  Ensemble f0_2 = f0;
  switch (perturbation.kind) {
    case PerturbSpec::Kind::none:
      break;
    case PerturbSpec::Kind::dt_halving:
      cfg2.dt = 0.5 * cfg_base.dt;
      cfg2.record_every = 2 * cfg_base.record_every;
      break;
    case PerturbSpec::Kind::fp_tol_tightening:
      cfg2.fp_tol = cfg_base.fp_tol / perturbation.factor;
      break;
    case PerturbSpec::Kind::initial_jitter:
      f0_2 = jitter_ensemble(f0, perturbation.delta, perturbation.seed);
      break;
  }

  const Trajectory t1 = run(f0, cfg_base);
  const Trajectory t2 = run(f0_2, cfg2);
  check_same_grid(t1, t2);

  StabilityTrace trace;
  trace.perturbation = to_string(perturbation.kind);
  const std::size_t m = t1.times.size();
  trace.times = t1.times;
  trace.q_values.resize(m);
  trace.w2_values.resize(m);
  trace.regime_valid.resize(m);
  for (std::size_t k = 0; k < m; ++k) {
    trace.q_values[k] = q_functional(f0, t1, t2, k);
    double sup_sep = 0.0;
    for (std::size_t i = 0; i < f0.size(); ++i)
      sup_sep = std::max(sup_sep, norm(t1.snapshots[k].phase_point(i) - t2.snapshots[k].phase_point(i)));
    trace.sup_separation_max = std::max(trace.sup_separation_max, sup_sep);
    trace.regime_valid[k] = sup_sep <= kInvE ? 1 : 0;
    if (!trace.regime_valid[k]) trace.regime_all_valid = false;
    trace.w2_values[k] = w2_distance(w2_exact(t1.snapshots[k], t2.snapshots[k]));
  }

  // fit window: maximal regime-valid run starting at the first positive Q
  std::size_t k0 = 0;
  while (k0 < m && (trace.q_values[k0] == 0.0 || !trace.regime_valid[k0])) ++k0;
  std::size_t k1 = k0;
  while (k1 < m && trace.regime_valid[k1] && trace.q_values[k1] > 0.0) ++k1;
  if (k1 - k0 >= 2) {
    const std::vector<double> wt(trace.times.begin() + static_cast<long>(k0),
                                 trace.times.begin() + static_cast<long>(k1));
    const std::vector<double> wq(trace.q_values.begin() + static_cast<long>(k0),
                                 trace.q_values.begin() + static_cast<long>(k1));
    const GronwallFit fit = gronwall_fit(wt, wq);
    trace.gronwall_c = fit.c;
    trace.bound_satisfied = fit.bound_satisfied;
    trace.exact_uniqueness = fit.exact_uniqueness;
    trace.fitted = true;
  } else {
    bool all_zero = true;
    for (double q : trace.q_values) all_zero &= q == 0.0;
    trace.exact_uniqueness = all_zero;
    trace.bound_satisfied = all_zero;
  }
  return trace;
}

}  // namespace rvd
