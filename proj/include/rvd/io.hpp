#pragma once

#include <filesystem>
#include <string>

#include "rvd/dynamics.hpp"
#include "rvd/stability.hpp"
#include "rvd/transport.hpp"

namespace rvd::io {

// ensemble CSV: header x1,x2,x3,p1,p2,p3,w, one particle per row,
// '.' decimal separator, full round-trip precision
void write_ensemble_csv(const Ensemble& ens, const std::filesystem::path& path);
Ensemble read_ensemble_csv(const std::filesystem::path& path);

// vector-potential state: CSV x1,x2,x3,A1,A2,A3 plus a JSON sidecar
// {residual, iterations, cbar, eps, tol}
void write_state_csv(const Ensemble& ens, const VectorPotentialState& state,
                     const std::filesystem::path& csv_path, const std::filesystem::path& sidecar_path,
                     double eps, double tol);

// trajectory directory: t_<index>.csv per snapshot plus meta.json
// {dt, t_end, eps, fp_tol, seed, times[]}
void write_trajectory(const Trajectory& traj, const std::filesystem::path& dir);

// plan CSV: i,sigma_i,cost_i; summary JSON {n, cost, w2}
void write_plan_csv(const TransportPlan& plan, const Ensemble& a, const Ensemble& b,
                    const std::filesystem::path& path);
std::string plan_summary_json(const TransportPlan& plan);

// stability trace: CSV t,Q,W2,regime_valid plus JSON
// {gronwall_c, bound_satisfied, perturbation}
void write_trace(const StabilityTrace& trace, const std::filesystem::path& csv_path,
                 const std::filesystem::path& json_path);

std::string format_double(double v);  // shortest representation that round-trips

}  // namespace rvd::io
