#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "rvd/fields.hpp"
#include "rvd/gen.hpp"
#include "rvd/io.hpp"
#include "rvd/kernels.hpp"
#include "rvd/rng.hpp"
#include "rvd/simd.hpp"
#include "rvd/stability.hpp"
#include "rvd/threading.hpp"
#include "rvd/transport.hpp"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitChecksFailed = 1;
constexpr int kExitConfig = 2;
constexpr int kExitNoConvergence = 3;
constexpr int kExitIo = 4;

struct config_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

json load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw rvd::io_error("cannot open config file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw config_error("config is not valid JSON (" + path + "): " + e.what());
  }
  if (!j.is_object()) throw config_error("config root must be a JSON object: " + path);
  return j;
}

const json& require(const json& j, const std::string& key) {
  auto it = j.find(key);
  if (it == j.end()) throw config_error("missing config key: " + key);
  return *it;
}

double require_positive(const json& j, const std::string& key) {
  const json& v = require(j, key);
  if (!v.is_number()) throw config_error("config key must be numeric: " + key);
  const double d = v.get<double>();
  if (!(d > 0.0)) throw config_error("config key must be positive: " + key);
  return d;
}

std::string out_path(const json& cfg, const std::optional<std::string>& flag) {
  if (flag) return *flag;
  if (cfg.contains("out")) return cfg["out"].get<std::string>();
  throw config_error("no output path: pass --out or set \"out\" in the config");
}

rvd::FlowConfig flow_config_from(const json& cfg) {
  rvd::FlowConfig fc;
  fc.dt = require_positive(cfg, "dt");
  fc.t_end = require(cfg, "t_end").get<double>();
  fc.eps = rvd::Softening(require_positive(cfg, "eps"));
  fc.fp_tol = cfg.value("fp_tol", 1e-10);
  fc.fp_max_iter = cfg.value("fp_max_iter", 1000);
  fc.seed = cfg.value("seed", std::uint64_t{0});
  fc.record_every = cfg.value("record_every", 1);
  fc.validate();
  return fc;
}

int cmd_gen(const std::string& config_path, const std::optional<std::string>& out_flag,
            const std::optional<std::uint64_t>& seed_flag) {
  const json cfg = load_config(config_path);
  const std::string family = require(cfg, "family").get<std::string>();
  const auto n = require(cfg, "n").get<std::size_t>();
  const double radius = require_positive(cfg, "radius");
  const double pscale = require_positive(cfg, "momentum_scale");
  const std::uint64_t seed = seed_flag ? *seed_flag : require(cfg, "seed").get<std::uint64_t>();
  const rvd::Ensemble ens = rvd::make_family(family, n, radius, pscale, seed);
  const std::string out = out_path(cfg, out_flag);
  rvd::io::write_ensemble_csv(ens, out);
  std::cout << json{{"family", family}, {"n", n}, {"radius", radius}, {"seed", seed}, {"out", out}}.dump()
            << '\n';
  return kExitOk;
}

int cmd_simulate(const std::string& config_path, const std::optional<std::string>& out_flag) {
  const json cfg = load_config(config_path);
  const rvd::FlowConfig fc = flow_config_from(cfg);
  const rvd::Ensemble f0 = rvd::io::read_ensemble_csv(require(cfg, "input").get<std::string>());
  const rvd::Trajectory traj = rvd::run(f0, fc);
  const std::string out = out_path(cfg, out_flag);
  rvd::io::write_trajectory(traj, out);
  std::cout << json{{"snapshots", traj.snapshots.size()}, {"out", out}}.dump() << '\n';
  return kExitOk;
}

int cmd_fields(const std::string& config_path, const std::optional<std::string>& out_flag) {
  const json cfg = load_config(config_path);
  const rvd::Ensemble ens = rvd::io::read_ensemble_csv(require(cfg, "input").get<std::string>());
  const double eps = require_positive(cfg, "eps");
  const double tol = cfg.value("tol", 1e-10);
  const int max_iter = cfg.value("max_iter", 1000);
  const rvd::VectorPotentialState st =
      rvd::solve_vector_potential(ens, rvd::Softening(eps), tol, max_iter);
  const fs::path out = out_path(cfg, out_flag);
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw rvd::io_error("cannot create output directory: " + out.string());
  rvd::io::write_state_csv(ens, st, out / "state.csv", out / "state.json", eps, tol);
  std::cout << json{{"iterations", st.iterations}, {"residual", st.residual}, {"cbar", st.cbar}}.dump()
            << '\n';
  return kExitOk;
}

int cmd_w2(const std::string& path_a, const std::string& path_b, const std::optional<std::string>& out_flag) {
  const rvd::Ensemble a = rvd::io::read_ensemble_csv(path_a);
  const rvd::Ensemble b = rvd::io::read_ensemble_csv(path_b);
  const rvd::TransportPlan plan = rvd::w2_exact(a, b);
  if (out_flag) {
    std::error_code ec;
    fs::create_directories(*out_flag, ec);
    if (ec) throw rvd::io_error("cannot create output directory: " + *out_flag);
    rvd::io::write_plan_csv(plan, a, b, fs::path(*out_flag) / "plan.csv");
    std::ofstream summary(fs::path(*out_flag) / "summary.json");
    summary << rvd::io::plan_summary_json(plan) << '\n';
  }
  std::cout << rvd::io::plan_summary_json(plan) << '\n';
  return kExitOk;
}

int cmd_uniqueness(const std::string& config_path, const std::optional<std::string>& out_flag) {
  const json cfg = load_config(config_path);
  const rvd::Ensemble f0 = rvd::io::read_ensemble_csv(require(cfg, "input").get<std::string>());
  const rvd::FlowConfig fc = flow_config_from(cfg);

  rvd::PerturbSpec spec;
  const json& pj = require(cfg, "perturbation");
  const std::string kind = require(pj, "kind").get<std::string>();
  if (kind == "none")
    spec.kind = rvd::PerturbSpec::Kind::none;
  else if (kind == "dt-halving")
    spec.kind = rvd::PerturbSpec::Kind::dt_halving;
  else if (kind == "fp-tol-tightening")
    spec.kind = rvd::PerturbSpec::Kind::fp_tol_tightening;
  else if (kind == "initial-jitter")
    spec.kind = rvd::PerturbSpec::Kind::initial_jitter;
  else
    throw config_error("unknown perturbation kind: " + kind);
  spec.delta = pj.value("delta", 0.0);
  spec.factor = pj.value("factor", 10.0);
  spec.seed = pj.value("seed", std::uint64_t{1});
  if (spec.kind == rvd::PerturbSpec::Kind::initial_jitter && !(spec.delta > 0.0))
    throw config_error("initial-jitter needs a positive delta");

  const fs::path out = out_path(cfg, out_flag);
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw rvd::io_error("cannot create output directory: " + out.string());

  const rvd::StabilityTrace trace = rvd::uniqueness_experiment(f0, fc, spec);
  rvd::io::write_trace(trace, out / "trace.csv", out / "trace.json");

  json result{{"gronwall_c", trace.gronwall_c},
              {"bound_satisfied", trace.bound_satisfied},
              {"regime_all_valid", trace.regime_all_valid},
              {"perturbation", trace.perturbation}};

  if (spec.kind == rvd::PerturbSpec::Kind::dt_halving) {
    // three-row order table: terminal W2 per halving pair and their ratio
    json table = json::array();
    rvd::FlowConfig fcs[3] = {fc, fc, fc};
    fcs[1].dt = fc.dt / 2;
    fcs[1].record_every = fc.record_every * 2;
    fcs[2].dt = fc.dt / 4;
    fcs[2].record_every = fc.record_every * 4;
    double terminal[2];
    for (int k = 0; k < 2; ++k) {
      const rvd::Trajectory ta = rvd::run(f0, fcs[k]);
      const rvd::Trajectory tb = rvd::run(f0, fcs[k + 1]);
      const double w2 =
          rvd::w2_distance(rvd::w2_exact(ta.snapshots.back(), tb.snapshots.back()));
      terminal[k] = w2;
      table.push_back({{"dt", fcs[k].dt}, {"dt_half", fcs[k + 1].dt}, {"terminal_w2", w2}});
    }
    table.push_back({{"ratio", terminal[1] > 0.0 ? terminal[0] / terminal[1] : 0.0}});
    result["order_table"] = table;
    std::ofstream ot(out / "order_table.json");
    ot << table.dump(2) << '\n';
  }

  std::cout << result.dump() << '\n';
  return kExitOk;
}

struct CheckList {
  int failures = 0;
  json checks = json::array();

  void add(const std::string& name, bool ok, double value) {
    checks.push_back({{"name", name}, {"ok", ok}, {"value", value}});
    std::cout << (ok ? "[ ok ] " : "[FAIL] ") << name << " = " << value << '\n';
    if (!ok) ++failures;
  }
};

int verify_kernels(CheckList& list) {
  rvd::Rng rng(2024);
  double worst_k = 0.0, worst_dk = 0.0, worst_det = 0.0, worst_pd = 0.0, worst_dom = 0.0;
  for (int t = 0; t < 100000; ++t) {
    const rvd::Vec3 x = rng.gaussian_vec3(1.0);
    rvd::Vec3 y = rng.gaussian_vec3(1.0);
    if (rvd::norm(y - x) < 1e-9) y.x += 1.0;
    const double r = rvd::norm(y - x);
    const rvd::Mat3 k = rvd::darwin_kernel(x, y);
    worst_k = std::max(worst_k, rvd::sup_norm(k) * r / 2.0);
    worst_dk = std::max(worst_dk, rvd::darwin_kernel_gradient(x, y).sup_norm() * r * r / 6.0);

    const rvd::Vec3 g = rng.gaussian_vec3(2.0);
    const rvd::Mat3 dv = rvd::velocity_jacobian(g);
    const double q = 1.0 + rvd::norm2(g);
    worst_det = std::max(worst_det, std::abs(rvd::det(dv) - std::pow(q, -2.5)));
    const rvd::Vec3 xi = rng.gaussian_vec3(1.0);
    const double lo = std::pow(q, -1.5) * rvd::norm2(xi);
    worst_pd = std::max(worst_pd, lo - rvd::dot(dv * xi, xi));

    const rvd::Mat3 ks = rvd::darwin_kernel(x, y, rvd::Softening(0.1));
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b)
        worst_dom = std::max(worst_dom, std::abs(ks(a, b)) - std::abs(k(a, b)));
  }
  list.add("kernel sup-entry within 2/|y-x|", worst_k <= 1.0 + 1e-12, worst_k);
  list.add("kernel gradient sup-entry within 6/|y-x|^2", worst_dk <= 1.0 + 1e-12, worst_dk);
  list.add("max |det Dv - (1+|g|^2)^{-5/2}|", worst_det <= 1e-12, worst_det);
  list.add("positive definiteness margin at lowest eigenvalue", worst_pd <= 1e-12, worst_pd);
  list.add("softened kernel dominated by exact", worst_dom <= 1e-15, worst_dom);
  return list.failures;
}

int verify_identity(CheckList& list) {
  const rvd::Vec3 y{0.0, 0.0, 0.0};
  const rvd::BumpSpec centered{y, 1.0};
  const rvd::IdentityReport sym = rvd::verify_kernel_identity(centered, y, rvd::QuadSpec{0.05});
  double off = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 3; ++k)
      if (i != k) off = std::max({off, std::abs(sym.lhs(i, k)), std::abs(sym.rhs(i, k))});
  list.add("symmetric bump off-diagonal", off <= 1e-10, off);
  const double tr_err =
      std::abs(sym.trace_lhs - sym.trace_rhs) / std::max(1.0, std::abs(sym.trace_lhs));
  list.add("trace identity (relative)", tr_err <= 1e-12, tr_err);

  const rvd::BumpSpec offset{{2.0, 0.0, 0.0}, 1.0};
  const rvd::IdentityReport coarse = rvd::verify_kernel_identity(offset, y, rvd::QuadSpec{0.05});
  const rvd::IdentityReport fine = rvd::verify_kernel_identity(offset, y, rvd::QuadSpec{0.025});
  list.add("general case discrepancy at h=0.05", coarse.max_rel_discrepancy <= 2e-2,
           coarse.max_rel_discrepancy);
  const double ratio = coarse.max_rel_discrepancy / std::max(fine.max_rel_discrepancy, 1e-300);
  list.add("refinement ratio h=0.05 vs 0.025", ratio >= 3.0, ratio);
  return list.failures;
}

int verify_potentials(CheckList& list) {
  const rvd::Ensemble ens = rvd::make_gaussian_ball(512, 1.0, 1.0, 42);
  const rvd::Softening eps(0.05);
  const rvd::VectorPotentialState st = rvd::solve_vector_potential(ens, eps, 1e-10, 1000);
  list.add("fixed point converged", st.converged, st.residual);
  list.add("iterates within a-priori bound", st.max_iterate_sup <= st.cbar + 1e-9, st.max_iterate_sup);

  const auto probes = rvd::sample_probe_points(ens, 1000, 7);
  const auto pairs = rvd::sample_probe_pairs(ens, 1000, 8);
  const auto pairs4 = rvd::sample_probe_pairs(ens, 4000, 8);
  const rvd::BoundsReport rep = rvd::verify_potential_bounds(ens, st, eps, probes, pairs);
  const rvd::BoundsReport rep4 = rvd::verify_potential_bounds(ens, st, eps, probes, pairs4);
  list.add("sup |A| within bound", rep.sup_a <= rep.a_bound, rep.sup_a);
  list.add("sup |grad A| within bound", rep.sup_grad_a <= rep.grad_a_bound, rep.sup_grad_a);
  list.add("sup |grad phi| within bound", rep.sup_grad_phi <= rep.grad_phi_bound, rep.sup_grad_phi);
  const bool finite = std::isfinite(rep.log_lipschitz_sup) && std::isfinite(rep4.log_lipschitz_sup);
  list.add("log-Lipschitz ratio finite", finite, rep.log_lipschitz_sup);
  const double drift = (rep4.log_lipschitz_sup - rep.log_lipschitz_sup) /
                       std::max(rep.log_lipschitz_sup, 1e-300);
  list.add("log-Lipschitz ratio stable under refinement", drift < 0.5, drift);

  const rvd::DensityEstimate d = rvd::charge_density_norms(ens, rvd::default_density_cell(ens));
  double sup_phi = 0.0;
  for (const rvd::Vec3& x : probes) sup_phi = std::max(sup_phi, rvd::scalar_potential(ens, x, eps));
  const double phi_bound = rvd::pallard_constant(1, 1.0, std::numeric_limits<double>::infinity()) *
                           std::pow(d.l1_norm, 2.0 / 3.0) * std::cbrt(d.linf_norm);
  list.add("sup phi within interpolation bound", sup_phi <= phi_bound, sup_phi);
  return list.failures;
}

int verify_transport(CheckList& list) {
  rvd::Rng rng(99);
  double worst = 0.0;
  for (std::size_t n = 2; n <= 8; ++n) {
    for (int rep = 0; rep < 20; ++rep) {
      std::vector<rvd::PhaseParticle> pa(n), pb(n);
      for (std::size_t i = 0; i < n; ++i) {
        pa[i] = {rng.gaussian_vec3(1.0), rng.gaussian_vec3(1.0), 1.0 / static_cast<double>(n)};
        pb[i] = {rng.gaussian_vec3(1.0), rng.gaussian_vec3(1.0), 1.0 / static_cast<double>(n)};
      }
      const rvd::Ensemble a(pa), b(pb);
      worst = std::max(worst, std::abs(rvd::w2_exact(a, b).cost - rvd::w2_brute_force(a, b).cost));
    }
  }
  list.add("assignment equals brute force (N<=8)", worst == 0.0, worst);

  std::vector<rvd::PhaseParticle> pa(32), pb(32);
  for (std::size_t i = 0; i < 32; ++i) {
    pa[i] = {rng.gaussian_vec3(1.0), rng.gaussian_vec3(1.0), 1.0 / 32.0};
    pb[i] = {rng.gaussian_vec3(1.0), rng.gaussian_vec3(1.0), 1.0 / 32.0};
  }
  const rvd::Ensemble a(pa), b(pb);
  const rvd::TransportPlan plan = rvd::w2_exact(a, b);
  const double sym = std::abs(plan.cost - rvd::w2_exact(b, a).cost);
  list.add("metric symmetry", sym <= 1e-12, sym);
  double add_err = 0.0;
  for (int k = 0; k <= 10; ++k) {
    const double theta = 1.0 + k / 10.0;
    const rvd::Interpolant mid = rvd::mccann_interpolant(a, b, plan, theta);
    const double lhs = rvd::w2_distance(rvd::w2_exact(a, mid.ensemble)) +
                       rvd::w2_distance(rvd::w2_exact(mid.ensemble, b));
    add_err = std::max(add_err, std::abs(lhs - rvd::w2_distance(plan)));
  }
  list.add("geodesic additivity over 11 thetas", add_err <= 1e-9, add_err);
  double energy = 0.0;
  const auto u = rvd::geodesic_velocity(a, b, plan);
  for (std::size_t i = 0; i < u.size(); ++i) energy += a[i].w * rvd::norm2(u[i]);
  list.add("energy identity", energy == plan.cost, std::abs(energy - plan.cost));
  return list.failures;
}

int cmd_verify(const std::string& suite) {
  CheckList list;
  if (suite == "kernels")
    verify_kernels(list);
  else if (suite == "identity")
    verify_identity(list);
  else if (suite == "potentials")
    verify_potentials(list);
  else if (suite == "transport")
    verify_transport(list);
  else if (suite == "all") {
    verify_kernels(list);
    verify_identity(list);
    verify_potentials(list);
    verify_transport(list);
  } else {
    throw config_error("unknown verify suite: " + suite);
  }
  std::cout << json{{"suite", suite}, {"passed", list.failures == 0}, {"checks", list.checks}}.dump()
            << '\n';
  return list.failures == 0 ? kExitOk : kExitChecksFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"relativistic Vlasov-Darwin kinetic simulator and transport stability lab"};
  app.require_subcommand(1);

  std::optional<std::string> out_flag;
  std::optional<std::uint64_t> seed_flag;
  int threads = 0;
  std::string backend = "auto";
  app.add_option("--threads", threads, "worker threads (0 = auto; results are independent of this)");
  app.add_option("--backend", backend, "kernel backend: auto|scalar|avx2");

  std::string config_path, path_a, path_b, suite;

  CLI::App* gen = app.add_subcommand("gen", "generate an initial ensemble CSV");
  gen->add_option("--config", config_path)->required();
  gen->add_option("--out", out_flag);
  gen->add_option("--seed", seed_flag);

  CLI::App* simulate = app.add_subcommand("simulate", "integrate the characteristic flow");
  simulate->add_option("--config", config_path)->required();
  simulate->add_option("--out", out_flag);

  CLI::App* fields = app.add_subcommand("fields", "solve the vector-potential fixed point");
  fields->add_option("--config", config_path)->required();
  fields->add_option("--out", out_flag);

  CLI::App* w2 = app.add_subcommand("w2", "exact Wasserstein-2 distance between two ensembles");
  w2->add_option("a", path_a)->required();
  w2->add_option("b", path_b)->required();
  w2->add_option("--out", out_flag);

  CLI::App* uniq = app.add_subcommand("uniqueness", "two-run stability experiment");
  uniq->add_option("--config", config_path)->required();
  uniq->add_option("--out", out_flag);

  CLI::App* verify = app.add_subcommand("verify", "run a named verification suite");
  verify->add_option("--suite", suite)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    rvd::set_thread_count(threads);
    if (!rvd::simd::set_active_by_name(backend)) throw config_error("unknown backend: " + backend);

    if (gen->parsed()) return cmd_gen(config_path, out_flag, seed_flag);
    if (simulate->parsed()) return cmd_simulate(config_path, out_flag);
    if (fields->parsed()) return cmd_fields(config_path, out_flag);
    if (w2->parsed()) return cmd_w2(path_a, path_b, out_flag);
    if (uniq->parsed()) return cmd_uniqueness(config_path, out_flag);
    if (verify->parsed()) return cmd_verify(suite);
  } catch (const rvd::no_convergence& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNoConvergence;
  } catch (const rvd::io_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const config_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const rvd::error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  return kExitConfig;
}
