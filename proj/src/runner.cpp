#include "qsdlab/runner.hpp"

#include <openssl/opensslv.h>
#include <spdlog/spdlog.h>

#include <CLI11.hpp>
#include <Eigen/Core>
#include <boost/version.hpp>
#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "qsdlab/errors.hpp"
#include "qsdlab/parallel.hpp"

namespace qsdlab {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string num(double x) {
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  if (std::isnan(x)) return "nan";
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

class Output {
 public:
  explicit Output(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }

  void write(const std::string& name, const std::string& bytes) {
    std::ofstream f(dir_ / name, std::ios::binary);
    if (!f) throw UsageError("cannot write output file '" + (dir_ / name).string() + "'");
    f << bytes;
    files_.emplace_back(name, sha256_hex(bytes));
  }
  void write_json(const std::string& name, json j) {
    j["manifest"] = "manifest.json";
    write(name, j.dump(2) + "\n");
  }
  const std::vector<std::pair<std::string, std::string>>& files() const { return files_; }
  const fs::path& dir() const { return dir_; }

 private:
  fs::path dir_;
  std::vector<std::pair<std::string, std::string>> files_;
};

json state_json(const State& s) { return {{"x", s.x}, {"v", s.v}, {"aux", s.aux}}; }

// Scalar fields of each parameter record, for JSON and explicit overrides.
std::vector<std::pair<std::string, double*>> param_fields(LyapunovParams& p) {
  return std::visit(
      [](auto& q) -> std::vector<std::pair<std::string, double*>> {
        using T = std::decay_t<decltype(q)>;
        if constexpr (std::is_same_v<T, GLRegularParams>)
          return {{"delta", &q.delta},   {"beta", &q.beta},     {"h", &q.h_frak},
                  {"a", &q.a_frak},      {"b", &q.b_frak},      {"kappa", &q.kappa},
                  {"C_J", &q.C_J},       {"shift", &q.shift},   {"chi_inner", &q.chi_inner},
                  {"chi_outer", &q.chi_outer}, {"k", &q.k},     {"c_upper", &q.c_upper}};
        else if constexpr (std::is_same_v<T, GLSingularParams>)
          return {{"delta", &q.delta}, {"h", &q.h_frak},     {"b", &q.b_frak},  {"c", &q.c_frak},
                  {"R", &q.R_frak},    {"shift", &q.shift},  {"C_G", &q.C_G},   {"M_inf", &q.M_inf},
                  {"c_upper", &q.c_upper}};
        else
          return {{"delta", &q.delta},         {"zeta", &q.zeta},         {"h_star", &q.h_star},
                  {"delta_star", &q.delta_star}, {"alpha_star", &q.alpha_star}, {"eps_star", &q.eps_star},
                  {"k_star", &q.k_star},       {"y_star", &q.y_star},     {"p_star", &q.p_star},
                  {"u_star", &q.u_star},       {"eps_phi", &q.eps_phi},   {"R_1", &q.R_1},
                  {"M", &q.M},                 {"c_V", &q.c_V_frak},      {"K", &q.K_frak},
                  {"shift", &q.shift},         {"dawson_max", &q.dawson_max}, {"c_upper", &q.c_upper}};
      },
      p);
}

json params_json(LyapunovParams p) {
  json j;
  j["family"] = to_string(family_of(p));
  for (auto& [name, ptr] : param_fields(p)) j[name] = *ptr;
  if (auto* s = std::get_if<GLSingularParams>(&p))
    j["J_R"] = s->jr_kind == GLSingularParams::JRKind::Constant1 ? "constant" : "energy-weighted";
  return j;
}

json shells_json(const C3Report& r) {
  json a = json::array();
  for (const auto& s : r.shells)
    a.push_back({{"kind", s.shell.kind == Shell::Kind::Energy ? "energy" : "collision"},
                 {"lo", s.shell.lo},
                 {"hi", s.shell.hi},
                 {"E_lo", s.E_lo},
                 {"E_hi", s.E_hi},
                 {"n_samples", s.n_samples},
                 {"n_proposals", s.n_proposals},
                 {"n_invalid", s.n_invalid},
                 {"sup_ratio", s.sup_ratio},
                 {"r_n", s.r_n},
                 {"b_n", s.b_n},
                 {"b_n_overflow", s.b_n_overflow}});
  return a;
}

json c3_json(const C3Report& r) {
  return {{"shells", shells_json(r)},
          {"decreasing", r.decreasing},
          {"negative_tail", r.negative_tail},
          {"negative_from", r.negative_from},
          {"passed", r.passed}};
}

std::string hist_csv(const Histogram& h) {
  std::string s = "bin_lo,bin_hi,mass\n";
  const auto m = h.masses();
  for (int i = 0; i < h.bins(); ++i) s += num(h.bin_lo(i)) + "," + num(h.bin_lo(i) + h.width()) + "," + num(m[i]) + "\n";
  return s;
}

StepOptions step_options(const RunConfig& c) {
  StepOptions s;
  s.integrator = c.estimator.integrator;
  return s;
}

int cmd_validate(const RunConfig& c, Output& out) {
  json reps = json::array();
  bool all = true;
  for (AssumptionId id : c.validate.assumptions) {
    const ValidationReport r = validate_assumptions(c.process.potential, id, c.validate.plan);
    json checks = json::array();
    for (const auto& ch : r.checks)
      checks.push_back(
          {{"name", ch.name}, {"worst_margin", ch.worst_margin}, {"passed", ch.passed}, {"detail", ch.detail}});
    reps.push_back({{"assumption", to_string(id)}, {"passed", r.passed}, {"n_samples", r.n_samples}, {"checks", checks}});
    spdlog::info("{}: {}", to_string(id), r.passed ? "PASS" : "FAIL");
    all = all && r.passed;
  }
  out.write_json("validation.json", {{"reports", reps}, {"passed", all}});
  return all ? 0 : 1;
}

int cmd_simulate(const RunConfig& c, std::uint64_t seed, Output& out) {
  const auto& E = c.estimator;
  SimulateOptions so;
  so.step = step_options(c);
  const auto rows = simulate_ensemble(E.init, c.process, c.domain, E.dt, E.t_max, E.n_traj, seed, so);
  std::string csv = "seed,outcome,exit_time,n_steps\n";
  std::int64_t exited = 0, stalls = 0;
  for (const auto& r : rows) {
    csv += std::to_string(r.index) + "," + r.outcome + "," + num(r.exit_time) + "," + std::to_string(r.n_steps) + "\n";
    exited += r.outcome == "exited";
    stalls += r.outcome == "stall";
  }
  out.write("trajectories.csv", csv);
  out.write_json("simulate.json", {{"n_traj", E.n_traj}, {"exited", exited}, {"stalls", stalls}, {"t_max", E.t_max}, {"dt", E.dt}});
  return 0;
}

int cmd_survival(const RunConfig& c, std::uint64_t seed, Output& out) {
  const auto& E = c.estimator;
  SimulateOptions so;
  so.step = step_options(c);
  const SurvivalTable tab = survival_curve(E.init, c.process, c.domain, E.dt, E.times, E.n_traj, seed, so);
  std::string csv = "t,survivors,n,stderr\n";
  for (const auto& r : tab.rows)
    csv += num(r.t) + "," + std::to_string(r.survivors) + "," + std::to_string(r.n) + "," + num(r.stderr_) + "\n";
  out.write("survival.csv", csv);
  json j = {{"n_traj", E.n_traj}, {"stalls", tab.n_stalls}, {"dt", E.dt}};
  try {
    const DecayEstimate d = estimate_decay_rate(tab);
    j["decay"] = {{"lambda_hat", d.lambda_hat}, {"stderr", d.stderr_}, {"ci", {d.ci_lo, d.ci_hi}},
                  {"window", {d.t_from, d.t_to}}, {"n_points", d.n_points}, {"no_decay", d.no_decay},
                  {"curvature", d.curvature}};
  } catch (const NumericalError& e) {
    j["decay"] = {{"error", e.what()}};
  }
  out.write_json("decay.json", j);
  return 0;
}

int cmd_fleming_viot(const RunConfig& c, std::uint64_t seed, Output& out) {
  const auto& E = c.estimator;
  FVOptions o = E.fv;
  o.step = step_options(c);
  QSDReport r = fleming_viot(c.process, c.domain, E.init, o, seed);
  json j = {{"lambda_hat", r.lambda_hat},       {"lambda_stderr", r.lambda_stderr},
            {"lambda_ci", {r.lambda_ci_lo, r.lambda_ci_hi}}, {"kills", r.kills},
            {"n_particles", r.n_particles},     {"t_sample", r.t_sample},
            {"ess", r.ess},                     {"resampling_rate", r.resampling_rate},
            {"stationarity_gap", r.stationarity_gap}, {"stalls", r.n_stalls}};
  if (!E.probes.empty()) {
    r.phi_probes = phi_probe(c.process, c.domain, E.probes, E.t_probe, E.n_traj, r.lambda_hat, o.dt, seed, o.step);
    json a = json::array();
    for (const auto& p : r.phi_probes)
      a.push_back({{"state", state_json(p.state)}, {"phi", p.phi}, {"stderr", p.stderr_}, {"survivors", p.survivors}, {"n", p.n}});
    j["phi_probes"] = a;
  }
  if (E.fixed_point_dt > 0) {
    const FixedPointCheck fp = qsd_fixed_point_check(c.process, c.domain, r, E.fixed_point_dt, o.dt, seed, o.step);
    json bins = json::array();
    for (const auto& b : fp.bins)
      bins.push_back({{"lo", b.lo}, {"hi", b.hi}, {"reference", b.reference}, {"propagated", b.propagated}, {"sigma", b.sigma}});
    j["fixed_point"] = {{"delta_t", E.fixed_point_dt}, {"survivors", fp.survivors}, {"max_z", fp.max_z}, {"passed", fp.passed}, {"bins", bins}};
  }
  out.write_json("qsd.json", j);
  out.write("hist_x.csv", hist_csv(r.x_hist));
  out.write("hist_v.csv", hist_csv(r.v_hist));
  spdlog::info("lambda_hat = {} (95% CI [{}, {}])", r.lambda_hat, r.lambda_ci_lo, r.lambda_ci_hi);
  return 0;
}

int cmd_verify_c3(const RunConfig& c, std::uint64_t seed, Output& out) {
  const auto& L = c.lyapunov;
  LyapunovParams p = select_params(L.family, c.process, L.delta, L.select);
  if (!L.overrides.empty()) {
    auto fields = param_fields(p);
    for (const auto& [k, v] : L.overrides) {
      auto it = std::find_if(fields.begin(), fields.end(), [&](auto& f) { return f.first == k; });
      if (it == fields.end()) throw UsageError("lyapunov.param_" + k + ": no such parameter for " + to_string(L.family));
      *it->second = v;
    }
    check_params(p, c.process);
  }
  json ineq = json::array();
  for (const auto& q : feasibility_inequalities(p, c.process)) ineq.push_back({{"name", q.name}, {"margin", q.margin}});
  const C3Report energy = verify_C3(p, c.process, energy_shells(L.levels), L.samples, seed);
  json j = {{"params", params_json(p)}, {"inequalities", ineq}, {"energy", c3_json(energy)}};
  bool passed = energy.passed;
  if (!L.separations.empty()) {
    const C3Report col = verify_C3(p, c.process, collision_shells(L.separations), L.samples, seed);
    j["collision"] = c3_json(col);
    passed = passed && col.passed;
  }
  j["passed"] = passed;
  out.write_json("c3.json", j);
  for (const auto& s : energy.shells) spdlog::info("shell [{}, {}]: sup ratio {}", s.E_lo, s.E_hi, s.sup_ratio);
  return passed ? 0 : 1;
}

std::string matrix_csv(const GridOracleResult& g, const std::vector<double>& m) {
  std::string s = "x";
  for (int j = 0; j < g.nv; ++j) s += "," + num(g.v_center(j));
  s += "\n";
  for (int i = 0; i < g.nx; ++i) {
    s += num(g.x_center(i));
    for (int j = 0; j < g.nv; ++j) s += "," + num(m[i * g.nv + j]);
    s += "\n";
  }
  return s;
}

int cmd_oracle(const RunConfig& c, Output& out) {
  if (c.domain.shape != DomainSpec::Shape::Box || c.domain.lo.size() != 1)
    throw UsageError("oracle-1d needs a one-dimensional interval domain");
  const GridOracleResult g = grid_oracle_kl_1d(c.process, c.domain.lo[0], c.domain.hi[0], c.oracle);
  out.write_json("oracle.json", {{"lambda", g.lambda},
                                 {"lambda2", g.lambda2},
                                 {"lambda2_imag", g.lambda2_imag},
                                 {"residual_phi", g.residual_phi},
                                 {"residual_mu", g.residual_mu},
                                 {"nx", g.nx},
                                 {"nv", g.nv},
                                 {"v_cut", g.v_cut},
                                 {"x_lo", g.x_lo},
                                 {"x_hi", g.x_hi}});
  out.write("oracle_phi.csv", matrix_csv(g, g.phi));
  out.write("oracle_mu.csv", matrix_csv(g, g.mu));
  std::string mx = "bin_lo,bin_hi,mass\n";
  const auto m = g.mu_x();
  for (int i = 0; i < g.nx; ++i) mx += num(g.x_lo + i * g.dx()) + "," + num(g.x_lo + (i + 1) * g.dx()) + "," + num(m[i]) + "\n";
  out.write("oracle_mu_x.csv", mx);
  spdlog::info("oracle lambda = {}", g.lambda);
  return 0;
}

int cmd_converge(const RunConfig& c, std::uint64_t seed, Output& out) {
  const auto& C = c.converge;
  const ConvergenceReport r = conditional_convergence(c.process, c.domain, C.nu1, C.nu2, C.times, C.n_traj, C.dt,
                                                      C.bins, seed, step_options(c));
  std::string csv = "t,survivors1,survivors2,tv,noise_floor\n";
  for (const auto& row : r.rows)
    csv += num(row.t) + "," + std::to_string(row.survivors1) + "," + std::to_string(row.survivors2) + "," +
           num(row.tv) + "," + num(row.noise_floor) + "\n";
  out.write("converge.csv", csv);
  out.write_json("converge.json", {{"M_hat", r.M_hat}, {"stderr", r.stderr_}, {"ci", {r.ci_lo, r.ci_hi}},
                                   {"n_fit", r.n_fit}, {"fitted", r.fitted}, {"flag", r.flag}});
  return 0;
}

}  // namespace

std::uint64_t resolve_seed(const RunConfig& c, const RunOptions& o) {
  if (o.seed) return *o.seed;
  if (const char* e = std::getenv("QSD_LAB_SEED")) {
    std::uint64_t v = 0;
    const std::string s(e);
    auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size())
      throw UsageError("QSD_LAB_SEED must be a non-negative integer, got '" + s + "'");
    return v;
  }
  return c.seed;
}

const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> v{"validate-potential", "simulate", "survival", "fleming-viot",
                                          "verify-c3",          "oracle-1d", "converge"};
  return v;
}

RunResult run_scenario(const RunConfig& c, const std::string& sub, const RunOptions& o) {
  if (std::find(subcommands().begin(), subcommands().end(), sub) == subcommands().end())
    throw UsageError("unknown subcommand '" + sub + "'");
  if (o.workers > 0) set_workers(o.workers);
  const std::uint64_t seed = resolve_seed(c, o);
  Output out(fs::path(o.out_dir ? *o.out_dir : c.out_dir) / sub);
  out.write("config.ini", canonical_text(c));
  int code = 0;
  if (sub == "validate-potential") code = cmd_validate(c, out);
  else if (sub == "simulate") code = cmd_simulate(c, seed, out);
  else if (sub == "survival") code = cmd_survival(c, seed, out);
  else if (sub == "fleming-viot") code = cmd_fleming_viot(c, seed, out);
  else if (sub == "verify-c3") code = cmd_verify_c3(c, seed, out);
  else if (sub == "oracle-1d") code = cmd_oracle(c, out);
  else code = cmd_converge(c, seed, out);

  json files = json::object();
  for (const auto& [name, hash] : out.files()) files[name] = hash;
  const json manifest = {
      {"tool", "qsd-lab"},
      {"version", kVersion},
      {"subcommand", sub},
      {"config_sha256", config_hash(c)},
      {"seed", seed},
      {"libraries",
       {{"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                      std::to_string(EIGEN_MINOR_VERSION)},
        {"boost", BOOST_LIB_VERSION},
        {"openssl", OPENSSL_VERSION_TEXT}}},
      {"outputs", files}};
  std::ofstream(out.dir() / "manifest.json", std::ios::binary) << manifest.dump(2) << "\n";
  RunResult res;
  res.exit_code = code;
  for (const auto& f : out.files()) res.files.push_back(sub + "/" + f.first);
  res.files.push_back(sub + "/manifest.json");
  return res;
}

int run_cli(int argc, char** argv) {
  CLI::App app{"Killed-process simulation, Lyapunov drift checks and quasi-stationary estimation"};
  std::string sub, config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  int workers = 0;
  std::string list;
  for (const auto& s : subcommands()) list += (list.empty() ? "" : ", ") + s;
  app.add_option("subcommand", sub, "one of: " + list + ", or run for every [run] commands entry")->required();
  app.add_option("--config,-c", config, "INI run configuration")->required();
  app.add_option("--seed", seed, "master seed (overrides QSD_LAB_SEED and the config)");
  app.add_option("--out,-o", out, "output directory (overrides [run] out)");
  app.add_option("--workers,-j", workers, "OpenMP worker count");
  app.set_version_flag("--version", std::string("qsd-lab ") + kVersion);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  try {
    const RunConfig c = load_config(config);
    RunOptions o;
    o.seed = seed;
    o.out_dir = out;
    o.workers = workers;
    if (sub != "run") return run_scenario(c, sub, o).exit_code;
    if (c.commands.empty()) throw UsageError("run needs [run] commands in the config");
    int rc = 0;
    for (const auto& s : c.commands) rc = std::max(rc, run_scenario(c, s, o).exit_code);
    return rc;
  } catch (const ConfigError& e) {
    spdlog::error("{}", e.what());
    return exit_code(ErrorClass::Usage);
  } catch (const Error& e) {
    spdlog::error("{}", e.what());
    return exit_code(e.error_class());
  } catch (const std::exception& e) {
    spdlog::error("unexpected failure: {}", e.what());
    return 1;
  }
}

}  // namespace qsdlab
