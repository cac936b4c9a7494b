#include "rvd/transport.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <unordered_map>

namespace rvd {

namespace {

double common_weight(const Ensemble& a, const Ensemble& b) {
  if (a.size() != b.size()) throw size_mismatch("ensembles must have equal particle counts");
  if (a.empty()) throw empty_ensemble("transport between empty ensembles");
  const double w = a[0].w;
  for (const PhaseParticle& q : a.particles())
    if (q.w != w) throw weight_mismatch("first ensemble weights are not uniform");
  for (const PhaseParticle& q : b.particles())
    if (q.w != w) throw weight_mismatch("second ensemble weights do not match the first");
  return w;
}

double pair_cost(double w, const Vec6& za, const Vec6& zb) { return w * norm2(za - zb); }

double plan_cost(const Ensemble& a, const Ensemble& b, const std::vector<std::size_t>& sigma, double w) {
  double c = 0.0;
  for (std::size_t i = 0; i < sigma.size(); ++i) c += pair_cost(w, a.phase_point(i), b.phase_point(sigma[i]));
  return c;
}

// shortest augmenting path with dual potentials on the dense cost matrix
std::vector<std::size_t> solve_assignment(const std::vector<double>& cost, std::size_t n) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::fill(minv.begin(), minv.end(), kInf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = kInf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<std::size_t> sigma(n);
  for (std::size_t j = 1; j <= n; ++j) sigma[p[j] - 1] = j - 1;
  return sigma;
}

// among exactly-tied assignments, reduce to the lexicographically smallest
// permutation reachable by cost-neutral pair swaps
void canonicalize_ties(const std::vector<double>& cost, std::size_t n, std::vector<std::size_t>& sigma) {
  bool changed = true;
  int guard = 0;
  while (changed && guard++ < 64) {
    changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        if (sigma[j] >= sigma[i]) continue;
        const double before = cost[i * n + sigma[i]] + cost[j * n + sigma[j]];
        const double after = cost[i * n + sigma[j]] + cost[j * n + sigma[i]];
        if (after == before) {
          std::swap(sigma[i], sigma[j]);
          changed = true;
        }
      }
    }
  }
}

}  // namespace

TransportPlan w2_exact(const Ensemble& a, const Ensemble& b) {
  const double w = common_weight(a, b);
  const std::size_t n = a.size();
  std::vector<double> cost(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec6 za = a.phase_point(i);
    for (std::size_t j = 0; j < n; ++j) cost[i * n + j] = pair_cost(w, za, b.phase_point(j));
  }
  TransportPlan plan;
  plan.size = n;
  plan.assignment = solve_assignment(cost, n);
  canonicalize_ties(cost, n, plan.assignment);
  plan.cost = plan_cost(a, b, plan.assignment, w);
  return plan;
}

TransportPlan w2_brute_force(const Ensemble& a, const Ensemble& b) {
  const double w = common_weight(a, b);
  const std::size_t n = a.size();
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  TransportPlan best;
  best.size = n;
  best.cost = std::numeric_limits<double>::infinity();
  do {
    const double c = plan_cost(a, b, perm, w);
    if (c < best.cost) {
      best.cost = c;
      best.assignment = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

Interpolant mccann_interpolant(const Ensemble& a, const Ensemble& b, const TransportPlan& plan,
                               double theta) {
  if (!(theta >= 1.0 && theta <= 2.0)) throw theta_out_of_range("theta must lie in [1, 2]");
  if (plan.size != a.size() || plan.size != b.size()) throw size_mismatch("plan does not match ensembles");
  const double ca = 2.0 - theta;
  const double cb = theta - 1.0;
  std::vector<PhaseParticle> parts(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    const PhaseParticle& qa = a[i];
    const PhaseParticle& qb = b[plan.assignment[i]];
    parts[i].x = ca * qa.x + cb * qb.x;
    parts[i].p = ca * qa.p + cb * qb.p;
    parts[i].w = qa.w;
  }
  Interpolant out;
  out.theta = theta;
  out.ensemble = Ensemble(std::move(parts), a.time(), 0.0);
  return out;
}

std::vector<Vec6> geodesic_velocity(const Ensemble& a, const Ensemble& b, const TransportPlan& plan) {
  if (plan.size != a.size() || plan.size != b.size()) throw size_mismatch("plan does not match ensembles");
  std::vector<Vec6> u(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) u[i] = b.phase_point(plan.assignment[i]) - a.phase_point(i);
  return u;
}

double continuity_residual(const Ensemble& a, const Ensemble& b, const TransportPlan& plan,
                           const std::vector<double>& theta_grid, const TestFunction6& test_fn) {
  if (theta_grid.size() < 3) throw invalid_spec("theta grid needs at least 3 points");
  const std::vector<Vec6> u = geodesic_velocity(a, b, plan);

  auto pair_value = [&](double theta) {
    const Interpolant f = mccann_interpolant(a, b, plan, theta);
    double s = 0.0;
    for (std::size_t i = 0; i < f.ensemble.size(); ++i)
      s += f.ensemble[i].w * test_fn.value(f.ensemble.phase_point(i));
    return s;
  };

  double worst = 0.0;
  for (std::size_t k = 1; k + 1 < theta_grid.size(); ++k) {
    const double tm = theta_grid[k - 1];
    const double t0 = theta_grid[k];
    const double tp = theta_grid[k + 1];
    const double dfd = (pair_value(tp) - pair_value(tm)) / (tp - tm);
    const Interpolant f = mccann_interpolant(a, b, plan, t0);
    double adv = 0.0;
    for (std::size_t i = 0; i < f.ensemble.size(); ++i)
      adv += f.ensemble[i].w * dot(test_fn.gradient(f.ensemble.phase_point(i)), u[i]);
    worst = std::max(worst, std::abs(dfd - adv));
  }
  return worst;
}

double phase_density_linf(const Ensemble& ens, double cell_size) {
  if (ens.empty()) throw empty_ensemble("density estimate on an empty ensemble");
  if (!(cell_size > 0.0)) throw invalid_spec("cell_size must be positive");
  Vec6 lo = ens.phase_point(0);
  for (std::size_t i = 1; i < ens.size(); ++i) {
    const Vec6 z = ens.phase_point(i);
    for (int d = 0; d < 6; ++d) lo[d] = std::min(lo[d], z[d]);
  }
  std::unordered_map<std::uint64_t, double> cells;
  cells.reserve(ens.size());
  for (std::size_t i = 0; i < ens.size(); ++i) {
    const Vec6 z = ens.phase_point(i);
    std::uint64_t key = 0;  // exact 10-bit pack per dimension
    for (int d = 0; d < 6; ++d) {
      const double fidx = std::floor((z[d] - lo[d]) / cell_size);
      if (!(fidx >= 0.0) || fidx > 1023.0)
        throw invalid_spec("cell_size too small for the 6-D histogram (over 1024 cells per axis)");
      key = (key << 10) | static_cast<std::uint64_t>(fidx);
    }
    cells[key] += ens[i].w;
  }
  double max_w = 0.0;
  for (const auto& [key, wsum] : cells) max_w = std::max(max_w, wsum);
  return max_w / std::pow(cell_size, 6.0);
}

double interpolant_density_bound(const Interpolant& interp, double cell_size) {
  return phase_density_linf(interp.ensemble, cell_size);
}

}  // namespace rvd
