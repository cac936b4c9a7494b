#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "rvd/ensemble.hpp"
#include "rvd/kernels.hpp"
#include "rvd/simd.hpp"
#include "rvd/vec.hpp"

namespace rvd {

// l1 is the exact (compensated) weight sum; linf is a uniform cubic
// histogram estimate over the position bounding box.
struct DensityEstimate {
  double l1_norm = 0.0;
  double linf_norm = 0.0;
  double cell_size = 0.0;
};

DensityEstimate charge_density_norms(const Ensemble& ens, double cell_size);

// default histogram cell, 2R/16
double default_density_cell(const Ensemble& ens);

// a-priori sup bound for the vector potential, 3 (4 pi)^{1/3} l1^{2/3} linf^{1/3}
double cbar_bound(const DensityEstimate& d);

double scalar_potential(const Ensemble& ens, const Vec3& x, Softening eps);
Vec3 grad_scalar_potential(const Ensemble& ens, const Vec3& x, Softening eps);

// Converged values of A at the source positions plus solve metadata.
// values[j] excludes particle j's own softened contribution; probe-point
// evaluation (vector_potential_at) always sums every source.
struct VectorPotentialState {
  std::vector<Vec3> values;
  double residual = 0.0;
  int iterations = 0;
  double cbar = 0.0;
  bool converged = false;
  double max_iterate_sup = 0.0;  // max over iterates of sup_j |A_k(x_j)|
  std::vector<double> residual_history;
};

struct PicardOptions {
  double tol = 1e-10;
  int max_iter = 1000;
  double damping = 1.0;  // in (0, 1]; 1 = plain Picard
  const std::vector<Vec3>* warm_start = nullptr;
  double density_cell = 0.0;  // 0 = default 2R/16
  bool throw_on_failure = true;
};

VectorPotentialState solve_vector_potential(const Ensemble& ens, Softening eps, double tol, int max_iter);
VectorPotentialState solve_vector_potential(const Ensemble& ens, Softening eps, const PicardOptions& opt);

Vec3 vector_potential_at(const VectorPotentialState& state, const Ensemble& ens, const Vec3& x, Softening eps);

// matrix gradient of A, entry (k, m) = dA_m/dx_k; trace-free by construction
Mat3 grad_vector_potential(const VectorPotentialState& state, const Ensemble& ens, const Vec3& x, Softening eps);

// Batch facade over the runtime-dispatched sum kernels. Holds the
// source-table snapshot of (ensemble, converged state).
class FieldEvaluator {
 public:
  FieldEvaluator(const Ensemble& ens, const VectorPotentialState& state, Softening eps);

  double phi(const Vec3& x) const;
  Vec3 grad_phi(const Vec3& x) const;
  Vec3 a(const Vec3& x) const;
  Mat3 grad_a(const Vec3& x) const;
  simd::FieldSums fields(const Vec3& x) const;
  double eps() const { return eps_; }

 private:
  simd::SourceTable tab_;
  double eps_ = 0.0;
};

// polynomial bump (1 - |x-c|^2/r^2)^4 inside radius r, zero outside
struct BumpSpec {
  Vec3 center;
  double radius = 1.0;
};

struct QuadSpec {
  double h = 0.05;  // target midpoint cell size
};

struct IdentityReport {
  Mat3 lhs;  // integral of laplacian(phi) [delta_ik - w_i w_k] / |y-x|
  Mat3 rhs;  // 2 integral of d_k d_i phi / |y-x|
  double max_rel_discrepancy = 0.0;
  double trace_lhs = 0.0;
  double trace_rhs = 0.0;
  double h = 0.0;  // realized cell size
  int cells_per_axis = 0;
};

IdentityReport verify_kernel_identity(const BumpSpec& bump, const Vec3& y, const QuadSpec& quad);

struct BoundsReport {
  double sup_a = 0.0;
  double sup_grad_a = 0.0;
  double sup_grad_phi = 0.0;
  double a_bound = 0.0;
  double grad_a_bound = 0.0;
  double grad_phi_bound = 0.0;
  bool sup_bounds_ok = false;
  double log_lipschitz_sup = 0.0;    // all three field differences combined
  double log_lipschitz_sup_a = 0.0;  // A and grad-A terms only
  std::size_t pair_count = 0;
};

BoundsReport verify_potential_bounds(const Ensemble& ens, const VectorPotentialState& state, Softening eps,
                                     const std::vector<Vec3>& probes,
                                     const std::vector<std::pair<Vec3, Vec3>>& pairs);

std::vector<Vec3> sample_probe_points(const Ensemble& ens, std::size_t count, std::uint64_t seed,
                                      double box_pad = 0.25);
// pairs at separation <= 1/2 for the log-Lipschitz modulus
std::vector<std::pair<Vec3, Vec3>> sample_probe_pairs(const Ensemble& ens, std::size_t count,
                                                      std::uint64_t seed, double box_pad = 0.25);

}  // namespace rvd
