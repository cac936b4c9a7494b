#include "rvd/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace rvd::io {

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw io_error("cannot open for writing: " + path.string());
  return out;
}

double parse_double(const std::string& field, const std::filesystem::path& path) {
  double v = 0.0;
  const auto* begin = field.data();
  const auto* end = field.data() + field.size();
  const auto res = std::from_chars(begin, end, v);
  if (res.ec != std::errc() || res.ptr != end)
    throw io_error("malformed numeric field '" + field + "' in " + path.string());
  return v;
}

}  // namespace

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  double back = 0.0;
  std::from_chars(buf, buf + std::char_traits<char>::length(buf), back);
  if (back == v) {
    // prefer the shortest round-tripping form
    for (int prec = 1; prec <= 16; ++prec) {
      char shorter[32];
      std::snprintf(shorter, sizeof shorter, "%.*g", prec, v);
      std::from_chars(shorter, shorter + std::char_traits<char>::length(shorter), back);
      if (back == v) return shorter;
    }
  }
  return buf;
}

void write_ensemble_csv(const Ensemble& ens, const std::filesystem::path& path) {
  std::ofstream out = open_out(path);
  out << "x1,x2,x3,p1,p2,p3,w\n";
  for (const PhaseParticle& q : ens.particles())
    out << format_double(q.x.x) << ',' << format_double(q.x.y) << ',' << format_double(q.x.z) << ','
        << format_double(q.p.x) << ',' << format_double(q.p.y) << ',' << format_double(q.p.z) << ','
        << format_double(q.w) << '\n';
  if (!out) throw io_error("write failed: " + path.string());
}

Ensemble read_ensemble_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open ensemble file: " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw io_error("empty ensemble file: " + path.string());
  if (line.ends_with('\r')) line.pop_back();
  if (line != "x1,x2,x3,p1,p2,p3,w")
    throw io_error("bad ensemble header in " + path.string() + ": " + line);

  std::vector<PhaseParticle> parts;
  while (std::getline(in, line)) {
    if (line.ends_with('\r')) line.pop_back();
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    double vals[7];
    for (int k = 0; k < 7; ++k) {
      if (!std::getline(ss, field, ',')) throw io_error("short row in " + path.string());
      vals[k] = parse_double(field, path);
    }
    if (std::getline(ss, field, ',')) throw io_error("extra fields in " + path.string());
    parts.push_back({{vals[0], vals[1], vals[2]}, {vals[3], vals[4], vals[5]}, vals[6]});
  }
  return Ensemble(std::move(parts));
}

void write_state_csv(const Ensemble& ens, const VectorPotentialState& state,
                     const std::filesystem::path& csv_path, const std::filesystem::path& sidecar_path,
                     double eps, double tol) {
  std::ofstream out = open_out(csv_path);
  out << "x1,x2,x3,A1,A2,A3\n";
  for (std::size_t i = 0; i < ens.size(); ++i) {
    const Vec3& x = ens[i].x;
    const Vec3& a = state.values[i];
    out << format_double(x.x) << ',' << format_double(x.y) << ',' << format_double(x.z) << ','
        << format_double(a.x) << ',' << format_double(a.y) << ',' << format_double(a.z) << '\n';
  }
  if (!out) throw io_error("write failed: " + csv_path.string());

  nlohmann::json j;
  j["residual"] = state.residual;
  j["iterations"] = state.iterations;
  j["cbar"] = state.cbar;
  j["eps"] = eps;
  j["tol"] = tol;
  std::ofstream side = open_out(sidecar_path);
  side << j.dump(2) << '\n';
}

void write_trajectory(const Trajectory& traj, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw io_error("cannot create trajectory directory: " + dir.string());
  for (std::size_t k = 0; k < traj.snapshots.size(); ++k)
    write_ensemble_csv(traj.snapshots[k], dir / ("t_" + std::to_string(k) + ".csv"));

  nlohmann::json j;
  j["dt"] = traj.config.dt;
  j["t_end"] = traj.config.t_end;
  j["eps"] = traj.config.eps.eps;
  j["fp_tol"] = traj.config.fp_tol;
  j["seed"] = traj.config.seed;
  j["times"] = traj.times;
  std::ofstream meta = open_out(dir / "meta.json");
  meta << j.dump(2) << '\n';
}

void write_plan_csv(const TransportPlan& plan, const Ensemble& a, const Ensemble& b,
                    const std::filesystem::path& path) {
  std::ofstream out = open_out(path);
  out << "i,sigma_i,cost_i\n";
  for (std::size_t i = 0; i < plan.assignment.size(); ++i) {
    const double ci = a[i].w * norm2(a.phase_point(i) - b.phase_point(plan.assignment[i]));
    out << i << ',' << plan.assignment[i] << ',' << format_double(ci) << '\n';
  }
  if (!out) throw io_error("write failed: " + path.string());
}

std::string plan_summary_json(const TransportPlan& plan) {
  nlohmann::json j;
  j["n"] = plan.size;
  j["cost"] = plan.cost;
  j["w2"] = w2_distance(plan);
  return j.dump();
}

void write_trace(const StabilityTrace& trace, const std::filesystem::path& csv_path,
                 const std::filesystem::path& json_path) {
  std::ofstream out = open_out(csv_path);
  out << "t,Q,W2,regime_valid\n";
  for (std::size_t k = 0; k < trace.times.size(); ++k)
    out << format_double(trace.times[k]) << ',' << format_double(trace.q_values[k]) << ','
        << format_double(trace.w2_values[k]) << ',' << (trace.regime_valid[k] ? 1 : 0) << '\n';
  if (!out) throw io_error("write failed: " + csv_path.string());

  nlohmann::json j;
  j["gronwall_c"] = trace.gronwall_c;
  j["bound_satisfied"] = trace.bound_satisfied;
  j["perturbation"] = trace.perturbation;
  j["exact_uniqueness"] = trace.exact_uniqueness;
  j["regime_all_valid"] = trace.regime_all_valid;
  j["fitted"] = trace.fitted;
  std::ofstream side = open_out(json_path);
  side << j.dump(2) << '\n';
}

}  // namespace rvd::io
