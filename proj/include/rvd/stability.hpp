#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rvd/dynamics.hpp"
#include "rvd/transport.hpp"

namespace rvd {

// Time series of Q(t) and W2(f1(t), f2(t)) for a pair of runs, with the
// log-Gronwall diagnostics. regime_valid flags the sup-separation <= 1/e
// window the fit is restricted to.
struct StabilityTrace {
  std::vector<double> times;
  std::vector<double> q_values;
  std::vector<double> w2_values;
  std::vector<std::uint8_t> regime_valid;
  double gronwall_c = 0.0;
  bool bound_satisfied = false;
  bool exact_uniqueness = false;
  bool fitted = false;
  bool regime_all_valid = true;
  double sup_separation_max = 0.0;
  std::string perturbation;
};

// label-coupled squared separation 1/2 sum_i w_i |Z1_i - Z2_i|^2 at snapshot t_index
double q_functional(const Ensemble& f0, const Trajectory& traj1, const Trajectory& traj2,
                    std::size_t t_index);

struct GronwallFit {
  double c = 0.0;
  bool bound_satisfied = false;
  bool exact_uniqueness = false;
};

// Substitutes y = 1 - ln Q, fits C as the max over consecutive samples of
// -(dy/dt)/y (clamped at 0), and checks Q(t) <= exp(1 - (1 - ln Q0) e^{-C (t-t0)}).
// Requires Q in (0, 1/e] on the window; all-zero traces report exact uniqueness.
GronwallFit gronwall_fit(const std::vector<double>& times, const std::vector<double>& q_values);

// envelope exp(1 - (1 - ln q0) e^{-c t}), nondecreasing in t for q0 < 1/e
double gronwall_envelope(double q0, double c, double t);

struct FieldDiffRatios {
  double ratio_phi = 0.0;   // L2 grad-phi difference / W2
  double ratio_a = 0.0;     // L2 grad-A difference / W2
  double ratio_last = 0.0;  // rho-weighted |A1-A2|^2 integral / W2^2
  double w2 = 0.0;
  double l2_grad_phi = 0.0;
  double l2_grad_a = 0.0;
  double rho_weighted_a2 = 0.0;
  bool degenerate = false;  // identical inputs: 0/0 reported as 0
};

// Midpoint-quadrature L2 norms over a grid covering the common support box
// (grid_n cells per axis), divided by W2; the rho-weighted integral is the
// particle sum over the first ensemble's positions, divided by W2^2.
FieldDiffRatios field_difference_vs_w2(const Ensemble& e1, const Ensemble& e2, Softening eps, int grid_n,
                                       double fp_tol = 1e-10, int fp_max_iter = 1000);

struct PerturbSpec {
  enum class Kind { none, dt_halving, fp_tol_tightening, initial_jitter };
  Kind kind = Kind::none;
  double delta = 0.0;       // jitter radius
  double factor = 10.0;     // fp_tol tightening factor
  std::uint64_t seed = 1;   // jitter seed
};

std::string to_string(PerturbSpec::Kind kind);

// Runs two trajectories from (possibly jittered) f0 and assembles the trace;
// the Gronwall fit is restricted to the regime-valid window with Q > 0.
StabilityTrace uniqueness_experiment(const Ensemble& f0, const FlowConfig& cfg_base,
                                     const PerturbSpec& perturbation);

}  // namespace rvd
