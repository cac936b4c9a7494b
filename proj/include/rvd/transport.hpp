#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "rvd/ensemble.hpp"

namespace rvd {

// Bijective assignment between two equal-size, equal-weight ensembles with
// its squared cost: cost = sum_i w |z_i - z'_{sigma(i)}|^2 = W_2^2.
struct TransportPlan {
  std::vector<std::size_t> assignment;  // sigma: index into the second ensemble
  double cost = 0.0;
  std::size_t size = 0;
};

// Globally optimal assignment under squared Euclidean cost in R^6
// (shortest-augmenting-path solver with dual potentials). Ties between
// equal-cost assignments are resolved to the lexicographically smallest
// permutation reachable by pair swaps.
TransportPlan w2_exact(const Ensemble& a, const Ensemble& b);

inline double w2_distance(const TransportPlan& plan) { return std::sqrt(std::max(plan.cost, 0.0)); }

struct Interpolant {
  double theta = 1.0;
  Ensemble ensemble;
};

// displacement interpolation: particle i moves to (2-theta) z_i + (theta-1) z'_{sigma(i)}
Interpolant mccann_interpolant(const Ensemble& a, const Ensemble& b, const TransportPlan& plan,
                               double theta);

// per-particle constant geodesic velocity z'_{sigma(i)} - z_i;
// sum_i w |u_i|^2 equals plan.cost in the same arithmetic
std::vector<Vec6> geodesic_velocity(const Ensemble& a, const Ensemble& b, const TransportPlan& plan);

struct TestFunction6 {
  std::function<double(const Vec6&)> value;
  std::function<Vec6(const Vec6&)> gradient;
};

// weak continuity-equation residual along the interpolation path:
// max over interior grid points of |d/dtheta <f, f_theta> - <grad f . u, f_theta>|
double continuity_residual(const Ensemble& a, const Ensemble& b, const TransportPlan& plan,
                           const std::vector<double>& theta_grid, const TestFunction6& test_fn);

// 6-D histogram sup estimate of the phase-space density
double phase_density_linf(const Ensemble& ens, double cell_size);

double interpolant_density_bound(const Interpolant& interp, double cell_size);

// exhaustive-permutation oracle, exponential in n (test sizes only)
TransportPlan w2_brute_force(const Ensemble& a, const Ensemble& b);

}  // namespace rvd
