#include "qsdlab/config.hpp"

#include <openssl/evp.h>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "qsdlab/errors.hpp"

namespace qsdlab {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::string num_text(double x) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(trim(cur));
  return out;
}

// Typed access to "section.key" entries; records defaults and collects errors.
class Reader {
 public:
  explicit Reader(std::map<std::string, std::string> raw) : raw_(std::move(raw)) {}

  bool has(const std::string& k) const { return raw_.count(k) > 0; }

  std::string str(const std::string& k, const std::string& def) {
    used_.insert(k);
    auto it = raw_.find(k);
    const std::string v = it == raw_.end() ? def : it->second;
    out_[k] = v;
    return v;
  }

  double num(const std::string& k, double def) {
    const std::string s = str(k, num_text(def));
    return parse_num(k, s);
  }

  std::int64_t integer(const std::string& k, std::int64_t def) {
    const std::string s = str(k, std::to_string(def));
    std::int64_t v = 0;
    auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size()) {
      err(k + ": expected an integer, got '" + s + "'");
      return def;
    }
    return v;
  }

  bool flag(const std::string& k, bool def) {
    const std::string s = str(k, def ? "true" : "false");
    if (s == "true" || s == "1" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "no") return false;
    err(k + ": expected true or false, got '" + s + "'");
    return def;
  }

  // Comma-separated numbers; "a:b:step" expands to a, a+step, ..., b.
  std::vector<double> list(const std::string& k, const std::vector<double>& def) {
    std::string d;
    for (std::size_t i = 0; i < def.size(); ++i) d += (i ? "," : "") + num_text(def[i]);
    const std::string s = str(k, d);
    return parse_list(k, s);
  }

  std::vector<double> parse_list(const std::string& k, const std::string& s) {
    std::vector<double> v;
    if (trim(s).empty()) return v;
    if (s.find(':') != std::string::npos) {
      const auto p = split(s, ':');
      if (p.size() != 3) {
        err(k + ": range must be start:stop:step");
        return v;
      }
      const double a = parse_num(k, p[0]), b = parse_num(k, p[1]), h = parse_num(k, p[2]);
      if (!(h > 0) || !(b >= a)) {
        err(k + ": range needs step > 0 and stop >= start");
        return v;
      }
      const auto n = static_cast<std::int64_t>(std::floor((b - a) / h + 1e-9));
      for (std::int64_t i = 0; i <= n; ++i) v.push_back(a + static_cast<double>(i) * h);
      return v;
    }
    for (const auto& t : split(s, ',')) v.push_back(parse_num(k, t));
    return v;
  }

  double parse_num(const std::string& k, const std::string& s) {
    double v = 0.0;
    auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size()) {
      err(k + ": expected a number, got '" + s + "'");
      return 0.0;
    }
    return v;
  }

  // Keys with a given prefix inside a section (for explicit parameter overrides).
  std::vector<std::string> keys_with_prefix(const std::string& p) const {
    std::vector<std::string> v;
    for (const auto& [k, _] : raw_)
      if (k.rfind(p, 0) == 0) v.push_back(k);
    return v;
  }

  void err(std::string m) { errors_.push_back(std::move(m)); }

  void check_unknown() {
    for (const auto& [k, _] : raw_)
      if (!used_.count(k)) err(k + ": unknown key");
  }

  std::vector<std::string>& errors() { return errors_; }
  std::map<std::string, std::string>& entries() { return out_; }

 private:
  std::map<std::string, std::string> raw_;
  std::set<std::string> used_;
  std::map<std::string, std::string> out_;
  std::vector<std::string> errors_;
};

void read_potential(Reader& r, PotentialSpec& p) {
  const std::string kind = r.str("potential.kind", "quadratic");
  p.dim_d = static_cast<int>(r.integer("potential.dim", 1));
  p.n_particles = static_cast<int>(r.integer("potential.particles", 1));
  if (p.dim_d < 1 || p.n_particles < 1) r.err("potential: dim and particles must be positive");
  p.quadratic_a0 = r.num("potential.a0", 1.0);
  if (kind == "quadratic") {
    p.kind = PotentialKind::Quadratic;
  } else if (kind == "poly") {
    p.kind = PotentialKind::PolyConfining;
    p.poly_k = r.num("potential.k", 2.0);
    p.poly_c = r.num("potential.c", 1.0);
    p.poly_eps = r.num("potential.eps", 1e-8);
    if (!(p.poly_k > 1)) r.err("potential.k: the growth exponent must exceed 1");
  } else if (kind == "singular") {
    p.kind = PotentialKind::SingularComposite;
  } else {
    r.err("potential.kind: expected quadratic, poly or singular, got '" + kind + "'");
  }
  const std::string inter = r.str("potential.interaction", "none");
  if (inter != "none") {
    InteractionSpec I;
    if (inter == "lennard-jones") {
      I.phi_kind = PhiKind::LennardJonesTail;
      I.B = r.num("potential.B", 1.0);
      I.beta = r.num("potential.beta", 12.0);
      I.phi_c = r.num("potential.phi_c", 1.0);
      I.q_phi = r.num("potential.q_phi", 7.0);
      I.r_phi = r.num("potential.r_phi", 1.0);
      I.C_phi = r.num("potential.C_phi", 6.0 * I.phi_c);
      I.c_phi = r.num("potential.c_phi", 0.0);
    } else if (inter == "coulomb") {
      I.phi_kind = PhiKind::CoulombOnly;
      I.B = r.num("potential.B", 1.0);
      I.beta = r.num("potential.beta", 1.0);
    } else {
      r.err("potential.interaction: expected none, lennard-jones or coulomb, got '" + inter + "'");
    }
    if (!(I.B > 0) || !(I.beta > 0)) r.err("potential: the singular part B/|y|^beta needs B > 0 and beta > 0");
    if (!(I.q_phi >= 0 && I.q_phi < I.beta + 1)) r.err("potential.q_phi: the tail growth needs 0 <= q_phi < beta + 1");
    if (p.kind != PotentialKind::SingularComposite) r.err("potential.interaction: pair terms need kind = singular");
    p.interaction = I;
  }
  p.poly_constants.c_V = r.num("potential.c_V", 0.0);
  p.poly_constants.M_V = r.num("potential.M_V", 0.0);
  p.poly_constants.r_V = r.num("potential.r_V", 0.0);
  const double amp = r.num("potential.bump_amplitude", 0.0);
  if (amp != 0.0) {
    BumpPerturbation b;
    b.amplitude = amp;
    b.center = r.list("potential.bump_center", std::vector<double>(p.dim(), 0.0));
    b.radius = r.num("potential.bump_radius", 1.0);
    if (static_cast<int>(b.center.size()) != p.dim()) r.err("potential.bump_center: needs dim * particles entries");
    p.perturbation = b;
  }
  const std::string fl = r.str("potential.floor", "auto");
  if (fl == "auto") {
    try {
      p.floor = 0.0;
      p.floor = auto_floor(p);
    } catch (const Error& e) {
      r.err(std::string("potential.floor: ") + e.what());
    }
  } else {
    p.floor = r.parse_num("potential.floor", fl);
  }
}

State read_state(Reader& r, const ProcessSpec& proc, const std::string& prefix, double x0) {
  State s = make_state(proc);
  const auto x = r.list(prefix + "_x", std::vector<double>(proc.dim(), x0));
  const auto v = r.list(prefix + "_v", std::vector<double>(proc.dim(), 0.0));
  const auto a = r.list(prefix + "_aux", std::vector<double>(proc.aux_dim(), 0.0));
  if (static_cast<int>(x.size()) != proc.dim() || static_cast<int>(v.size()) != proc.dim() ||
      static_cast<int>(a.size()) != proc.aux_dim()) {
    r.err(prefix + ": state has the wrong dimension");
    return s;
  }
  s.x = x;
  s.v = v;
  s.aux = a;
  return s;
}

BinSpec read_bins(Reader& r, const std::string& k, BinSpec def) {
  const auto v = r.list(k, {def.lo, def.hi, static_cast<double>(def.bins)});
  if (v.size() != 3 || !(v[1] > v[0]) || !(v[2] >= 1)) {
    r.err(k + ": expected lo,hi,bins with lo < hi");
    return def;
  }
  return {v[0], v[1], static_cast<int>(v[2])};
}

DomainSpec read_domain(Reader& r, const PotentialSpec& pot) {
  const std::string shape = r.str("domain.shape", "interval");
  const int n = pot.dim();
  if (shape == "whole") return DomainSpec::whole();
  if (shape == "interval" || shape == "box") {
    const auto lo = r.list("domain.lo", std::vector<double>(n, -1.0));
    const auto hi = r.list("domain.hi", std::vector<double>(n, 1.0));
    if (static_cast<int>(lo.size()) != n || static_cast<int>(hi.size()) != n) {
      r.err("domain: lo and hi need one entry per coordinate");
      return DomainSpec::whole();
    }
    for (int i = 0; i < n; ++i)
      if (!(hi[i] > lo[i])) r.err("domain: empty box (lo >= hi)");
    return DomainSpec::box(lo, hi);
  }
  if (shape == "ball") {
    const auto c = r.list("domain.center", std::vector<double>(n, 0.0));
    const double rad = r.num("domain.radius", 1.0);
    if (static_cast<int>(c.size()) != n) r.err("domain.center: needs one entry per coordinate");
    if (!(rad > 0)) r.err("domain.radius: must be positive");
    return DomainSpec::ball(c, rad);
  }
  if (shape == "sublevel") return DomainSpec::sublevel(r.num("domain.threshold", 2.0));
  r.err("domain.shape: expected whole, interval, box, ball or sublevel, got '" + shape + "'");
  return DomainSpec::whole();
}

void cross_checks(Reader& r, RunConfig& c) {
  const auto& proc = c.process;
  const auto& L = c.lyapunov;
  if (proc.family == Family::NoseHoover && !(proc.gamma > 0))
    r.err("process.gamma: the Nose-Hoover system needs gamma > 0");
  const bool gl = L.family != LyapunovFamily::NoseHoover;
  if (gl && !(L.delta > 0 && L.delta <= 1)) r.err("lyapunov.delta: the GL weights need 0 < delta <= 1");
  if (!gl && !(L.delta > 0.5 && L.delta <= 1)) r.err("lyapunov.delta: the Nose-Hoover weight needs delta in (1/2, 1]");
  if (!gl && !(L.select.zeta > 1 && L.select.zeta < 2)) r.err("lyapunov.zeta: must lie in (1, 2)");
  if (L.family == LyapunovFamily::GLRegular && proc.family == Family::GeneralizedLangevin && proc.gamma == 0) {
    const double k = proc.potential.kind == PotentialKind::PolyConfining ? proc.potential.poly_k : 2.0;
    if (!(k > 1 && k <= 2)) r.err("lyapunov: gl-regular with gamma = 0 requires k in (1, 2]");
  }
  if (L.family == LyapunovFamily::GLSingular && !proc.potential.has_pairs())
    r.err("lyapunov: gl-singular needs a singular pair potential with at least two particles");
}

std::map<std::string, std::string> flatten(const boost::property_tree::ptree& pt) {
  std::map<std::string, std::string> m;
  for (const auto& [sec, sub] : pt) {
    if (sub.empty()) {
      m["." + sec] = trim(sub.data());
      continue;
    }
    for (const auto& [k, v] : sub) m[sec + "." + k] = trim(v.data());
  }
  return m;
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  boost::property_tree::ptree pt;
  try {
    std::istringstream in(text);
    boost::property_tree::ini_parser::read_ini(in, pt);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError({std::string("syntax: ") + e.message() + " (line " + std::to_string(e.line()) + ")"});
  }
  Reader r(flatten(pt));
  RunConfig c;

  c.seed = static_cast<std::uint64_t>(r.integer("run.seed", 1));
  c.out_dir = r.str("run.out", "out");
  {
    static const std::set<std::string> known{"validate-potential", "simulate", "survival", "fleming-viot",
                                             "verify-c3",          "oracle-1d", "converge"};
    const std::string cmds = r.str("run.commands", "");
    if (!cmds.empty())
      for (const auto& s : split(cmds, ',')) {
        if (!known.count(s)) r.err("run.commands: unknown subcommand '" + s + "'");
        c.commands.push_back(s);
      }
  }

  read_potential(r, c.process.potential);
  auto& proc = c.process;
  try {
    proc.family = parse_family(r.str("process.family", "kinetic-langevin"));
  } catch (const Error& e) {
    r.err(std::string("process.family: ") + e.what());
  }
  proc.gamma = r.num("process.gamma", 1.0);
  proc.lambda_c = r.num("process.lambda", 1.0);
  proc.alpha_c = r.num("process.alpha", 1.0);
  if (!(proc.gamma >= 0)) r.err("process.gamma: friction must be non-negative");
  if (proc.family == Family::GeneralizedLangevin && !(proc.lambda_c > 0 && proc.alpha_c > 0))
    r.err("process: the generalized Langevin system needs lambda > 0 and alpha > 0");

  c.domain = read_domain(r, proc.potential);
  c.witness = r.list("domain.witness", {});

  auto& L = c.lyapunov;
  try {
    L.family = parse_lyapunov_family(r.str("lyapunov.family", "gl-regular"));
  } catch (const Error& e) {
    r.err(std::string("lyapunov.family: ") + e.what());
  }
  L.delta = r.num("lyapunov.delta", L.family == LyapunovFamily::NoseHoover ? 0.8 : 0.5);
  L.select.zeta = r.num("lyapunov.zeta", 1.2);
  L.select.H0 = r.num("lyapunov.H0", 100.0);
  L.select.n_confirm = static_cast<int>(r.integer("lyapunov.n_confirm", 400));
  L.select.seed = static_cast<std::uint64_t>(r.integer("lyapunov.select_seed", 7));
  L.select.max_refinements = static_cast<int>(r.integer("lyapunov.max_refinements", 12));
  L.select.confirm = r.flag("lyapunov.confirm", true);
  L.levels = r.list("lyapunov.levels", {10, 100, 1000, 10000});
  L.separations = r.list("lyapunov.separations", {});
  L.samples = static_cast<int>(r.integer("lyapunov.samples", 1000));
  if (L.samples < 1) r.err("lyapunov.samples: must be positive");
  for (const auto& k : r.keys_with_prefix("lyapunov.param_")) L.overrides[k.substr(15)] = r.num(k, 0.0);

  auto& E = c.estimator;
  const std::string init = r.str("estimator.init", "point");
  E.init.point = read_state(r, proc, "estimator.init", 0.0);
  if (init == "uniform") {
    E.init.kind = InitialDistribution::Kind::UniformBox;
    E.init.lo = r.list("estimator.init_lo", std::vector<double>(proc.dim(), -1.0));
    E.init.hi = r.list("estimator.init_hi", std::vector<double>(proc.dim(), 1.0));
  } else if (init != "point") {
    r.err("estimator.init: expected point or uniform, got '" + init + "'");
  }
  E.init.maxwellian = r.flag("estimator.maxwellian", false);
  E.n_traj = r.integer("estimator.n_traj", 1000);
  E.dt = r.num("estimator.dt", 1e-3);
  E.t_max = r.num("estimator.t_max", 1.0);
  E.times = r.list("estimator.times", {0, 0.25, 0.5, 0.75, 1.0});
  const std::string integ = r.str("estimator.integrator", "euler");
  if (integ == "splitting") E.integrator = Integrator::Splitting;
  else if (integ != "euler") r.err("estimator.integrator: expected euler or splitting");
  E.fv.n_particles = r.integer("estimator.n_particles", 1000);
  E.fv.dt = r.num("estimator.fv_dt", 1e-3);
  E.fv.t_burnin = r.num("estimator.t_burnin", 2.0);
  E.fv.t_sample = r.num("estimator.t_sample", 4.0);
  E.fv.n_batches = static_cast<int>(r.integer("estimator.n_batches", 20));
  E.fv.record_interval = r.num("estimator.record_interval", 0.01);
  E.fv.x_bins = read_bins(r, "estimator.x_bins", {-1, 1, 20});
  E.fv.v_bins = read_bins(r, "estimator.v_bins", {-5, 5, 20});
  E.fv.step.integrator = E.integrator;
  const std::string probes = r.str("estimator.probes", "");
  if (!probes.empty())
    for (const auto& p : split(probes, ';')) {
      State s = make_state(proc);
      const auto x = r.parse_list("estimator.probes", p);
      if (static_cast<int>(x.size()) != proc.dim()) r.err("estimator.probes: each probe needs one entry per coordinate");
      else s.x = x;
      E.probes.push_back(s);
    }
  E.t_probe = r.num("estimator.t_probe", 3.0);
  E.fixed_point_dt = r.num("estimator.fixed_point_dt", 0.0);
  if (E.n_traj < 1) r.err("estimator.n_traj: must be at least 1");
  if (!(E.dt > 0) || !(E.fv.dt > 0)) r.err("estimator: time steps must be positive");
  if (E.fv.n_particles < 10) r.err("estimator.n_particles: Fleming-Viot needs at least 10 particles");
  for (std::size_t i = 1; i < E.times.size(); ++i)
    if (!(E.times[i] > E.times[i - 1])) r.err("estimator.times: must be increasing");

  c.oracle.nx = static_cast<int>(r.integer("oracle.nx", 200));
  c.oracle.nv = static_cast<int>(r.integer("oracle.nv", 200));
  c.oracle.v_cut = r.num("oracle.v_cut", 6.0);
  c.oracle.krylov = static_cast<int>(r.integer("oracle.krylov", 40));

  auto& C = c.converge;
  C.nu1.point = read_state(r, proc, "converge.nu1", 0.5);
  C.nu2.point = read_state(r, proc, "converge.nu2", -0.5);
  C.times = r.list("converge.times", {0.1, 0.2, 0.3, 0.4, 0.5});
  C.n_traj = r.integer("converge.n_traj", 10000);
  C.dt = r.num("converge.dt", 1e-3);
  C.bins = read_bins(r, "converge.bins", {-1, 1, 20});
  if (C.n_traj < 1 || !(C.dt > 0)) r.err("converge: needs n_traj >= 1 and dt > 0");

  auto& V = c.validate;
  for (const auto& id : split(r.str("validate.assumptions", "V-loc"), ',')) {
    try {
      V.assumptions.push_back(parse_assumption_id(id));
    } catch (const Error& e) {
      r.err(std::string("validate.assumptions: ") + e.what());
    }
  }
  V.plan.r_min = r.num("validate.r_min", 2.0);
  V.plan.r_max = r.num("validate.r_max", 100.0);
  V.plan.n_radii = static_cast<int>(r.integer("validate.n_radii", 40));
  V.plan.n_directions = static_cast<int>(r.integer("validate.n_directions", 16));
  V.plan.sep_max = r.num("validate.sep_max", 1.0);
  V.plan.sep_min = r.num("validate.sep_min", 1e-2);
  V.plan.zeta = r.num("validate.zeta", 1.5);
  V.plan.delta = r.num("validate.delta", 1.0);
  V.plan.require_gradient_bound = r.flag("validate.require_gradient_bound", false);

  r.check_unknown();
  cross_checks(r, c);

  if (r.errors().empty()) {
    try {
      check_potential(proc.potential);
      check_process(proc);
    } catch (const Error& e) {
      r.err(e.what());
    }
  }
  if (r.errors().empty() && c.domain.shape != DomainSpec::Shape::Whole) {
    if (static_cast<int>(c.witness.size()) != proc.dim()) {
      r.err("domain.witness: a point of O_V outside the closure of O is required (one entry per coordinate)");
    } else {
      try {
        require_valid_domain(c.domain, proc.potential, c.witness, c.seed);
      } catch (const Error& e) {
        r.err(std::string("domain: ") + e.what());
      }
    }
  }
  if (!r.errors().empty()) throw ConfigError(r.errors());
  c.entries = std::move(r.entries());
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open configuration file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string canonical_text(const RunConfig& c) {
  std::string out, section;
  for (const auto& [k, v] : c.entries) {
    const auto dot = k.find('.');
    const std::string sec = k.substr(0, dot), key = k.substr(dot + 1);
    if (sec != section) {
      if (!out.empty()) out += "\n";
      out += "[" + sec + "]\n";
      section = sec;
    }
    out += key + " = " + v + "\n";
  }
  return out;
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr);
  static const char* hex = "0123456789abcdef";
  std::string s;
  for (unsigned int i = 0; i < len; ++i) {
    s += hex[md[i] >> 4];
    s += hex[md[i] & 15];
  }
  return s;
}

std::string config_hash(const RunConfig& c) { return sha256_hex(canonical_text(c)); }

}  // namespace qsdlab
