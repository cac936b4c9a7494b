#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "rvd/ensemble.hpp"
#include "rvd/fields.hpp"

namespace rvd {

struct FlowConfig {
  double dt = 0.01;
  double t_end = 1.0;
  Softening eps{0.05};
  double fp_tol = 1e-10;
  int fp_max_iter = 1000;
  std::uint64_t seed = 0;
  int record_every = 1;

  void validate() const;
};

struct StepDiagnostics {
  int fp_iterations = 0;      // Picard iterations summed over the four stages
  double fp_residual = 0.0;   // worst converged residual among the stages
  double max_displacement = 0.0;
};

// Snapshots share particle ordering and weights with the initial ensemble;
// trajectories are the Lagrangian flow of the same labelled samples.
struct Trajectory {
  Ensemble initial;
  FlowConfig config;
  std::vector<double> times;
  std::vector<Ensemble> snapshots;
  std::vector<StepDiagnostics> step_stats;
};

// phase-space velocity at z = (x, p): (v_A, -grad phi + (grad A) v_A),
// with every source summed (probe semantics; the self term of a source
// particle vanishes by kernel symmetry)
std::pair<Vec3, Vec3> force_field(const Ensemble& ens, const VectorPotentialState& state, const Vec6& z,
                                  Softening eps);

// one classical RK4 step with the self-consistent field re-solved per stage
Ensemble step(const Ensemble& ens, const FlowConfig& cfg);

Trajectory run(const Ensemble& f0, const FlowConfig& cfg);

// Propagates a finite-difference frame (z +- h e_k) through the flow as
// passive tracers and returns max |det(dZ/dz) - 1| over the samples.
double volume_preservation_check(const Trajectory& traj, int sample_count, double h);

// Advances the ensemble and optional passive tracers together; tracers see
// the fields of the ensemble sources but contribute nothing. Supports
// negative step sizes (reverse-time integration).
class FlowEngine {
 public:
  FlowEngine(Ensemble f0, FlowConfig cfg);

  void set_tracers(std::vector<Vec6> tracers) { tracers_ = std::move(tracers); }
  const std::vector<Vec6>& tracers() const { return tracers_; }

  void step_once(double signed_dt);
  Ensemble current(double time) const;
  const StepDiagnostics& last_step() const { return diag_; }

 private:
  void stage_rates(const std::vector<Vec3>& x, const std::vector<Vec3>& p, const std::vector<Vec6>& tr,
                   std::vector<Vec3>& xdot, std::vector<Vec3>& pdot, std::vector<Vec6>& trdot);

  FlowConfig cfg_;
  std::vector<Vec3> x_, p_;
  std::vector<double> w_;
  double support_radius_ = 0.0;
  std::vector<Vec6> tracers_;
  std::vector<Vec3> warm_a_;
  StepDiagnostics diag_;
};

}  // namespace rvd
