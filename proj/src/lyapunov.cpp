#include "qsdlab/lyapunov.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "lyapunov_detail.hpp"
#include "qsdlab/dawson.hpp"
#include "qsdlab/errors.hpp"

namespace qsdlab {

std::string to_string(LyapunovFamily f) {
  switch (f) {
    case LyapunovFamily::GLRegular: return "gl-regular";
    case LyapunovFamily::GLSingular: return "gl-singular";
    case LyapunovFamily::NoseHoover: return "nose-hoover";
  }
  return "?";
}

LyapunovFamily parse_lyapunov_family(const std::string& s) {
  if (s == "gl-regular") return LyapunovFamily::GLRegular;
  if (s == "gl-singular") return LyapunovFamily::GLSingular;
  if (s == "nose-hoover" || s == "nh") return LyapunovFamily::NoseHoover;
  throw UsageError("unknown Lyapunov family '" + s + "'");
}

LyapunovFamily family_of(const LyapunovParams& p) {
  if (std::holds_alternative<GLRegularParams>(p)) return LyapunovFamily::GLRegular;
  if (std::holds_alternative<GLSingularParams>(p)) return LyapunovFamily::GLSingular;
  return LyapunovFamily::NoseHoover;
}

double delta_of(const LyapunovParams& p) {
  return std::visit([](const auto& q) { return q.delta; }, p);
}

void check_params(const LyapunovParams& params, const ProcessSpec& proc) {
  std::vector<std::string> v;
  const double delta = delta_of(params);
  if (std::holds_alternative<NHParams>(params)) {
    if (proc.family != Family::NoseHoover) v.push_back("Nose-Hoover parameters need a Nose-Hoover process");
    const auto& p = std::get<NHParams>(params);
    if (!(delta > 0.5 && delta <= 1.0)) v.push_back("delta must lie in (1/2, 1]");
    if (!(p.zeta > 1.0 && p.zeta < 2.0)) v.push_back("zeta must lie in (1, 2)");
    const double dm = dawson_max();
    if (!(p.h_star > 0 && p.h_star < 1.0 / (8 * dm * dm))) v.push_back("h_star must lie in (0, 1/(8 D_m^2))");
    for (double q : {p.delta_star, p.alpha_star, p.eps_star, p.k_star, p.y_star, p.p_star, p.u_star, p.eps_phi})
      if (!(q > 0)) {
        v.push_back("Nose-Hoover gate and scale parameters must be positive");
        break;
      }
    if (!(p.y_star > 3 * proc.gamma + 1)) v.push_back("y_star must exceed 3 gamma + 1");
    if (!(p.alpha_star > proc.dim() / (4 * dm * dm))) v.push_back("alpha_star must exceed dN/(4 D_m^2)");
    if (!(p.eps_phi < (p.h_star - p.eps_star) / 2)) v.push_back("eps_phi must be below (h_star - eps_star)/2");
    if (!(p.R_1 > 1)) v.push_back("R_1 must exceed 1");
  } else if (std::holds_alternative<GLRegularParams>(params)) {
    if (proc.family != Family::GeneralizedLangevin) v.push_back("GL parameters need a generalized Langevin process");
    const auto& p = std::get<GLRegularParams>(params);
    if (!(p.h_frak > 0) || !(p.a_frak >= 0) || !(p.b_frak >= 0)) v.push_back("h > 0, a >= 0, b >= 0 required");
    if (!(p.beta >= 0 && p.beta <= 1)) v.push_back("beta must lie in [0, 1]");
    if (!(delta > (1 - p.beta) / p.k && delta <= 1)) v.push_back("delta must lie in ((1-beta)/k, 1]");
    if (!(p.chi_outer > p.chi_inner && p.chi_inner > 0)) v.push_back("cutoff radii need 0 < inner < outer");
    if (!(p.C_J > 0)) v.push_back("C_J must be positive");
    if (p.kappa * p.C_J > proc.lambda_c / 2 * (1 + 1e-12)) v.push_back("kappa C_J must not exceed lambda/2");
    if (proc.gamma > 0 && p.b_frak != 0) v.push_back("b must be 0 when gamma > 0");
    if (proc.gamma == 0 && p.b_frak != p.a_frak) v.push_back("b must equal a when gamma = 0");
  } else {
    if (proc.family != Family::GeneralizedLangevin) v.push_back("GL parameters need a generalized Langevin process");
    const auto& p = std::get<GLSingularParams>(params);
    if (!(delta > 0 && delta <= 1)) v.push_back("delta must lie in (0, 1]");
    if (!(p.h_frak > 0 && p.b_frak >= 0 && p.c_frak >= 0 && p.R_frak > 0))
      v.push_back("h > 0, b >= 0, c >= 0, R > 0 required");
    if (proc.gamma > 0) {
      if (p.jr_kind != GLSingularParams::JRKind::Constant1 || p.c_frak != 0 || p.R_frak != 1)
        v.push_back("gamma > 0 needs J_R = 1, c = 0, R = 1");
      const double a0 = proc.potential.quadratic_a0;
      if (!(p.h_frak > std::max(p.b_frak, p.b_frak / a0))) v.push_back("h must exceed max(b, b/a0)");
    } else {
      if (p.jr_kind != GLSingularParams::JRKind::EnergyWeighted || p.c_frak != p.b_frak)
        v.push_back("gamma = 0 needs the energy-weighted J_R and c = b");
    }
  }
  if (!v.empty()) throw ConfigError(std::move(v));
}

FieldDerivatives F_derivatives(const LyapunovParams& p, const ProcessSpec& proc, const State& s) {
  check_state(proc, s);
  return std::visit(
      [&](const auto& q) -> FieldDerivatives {
        using T = std::decay_t<decltype(q)>;
        if constexpr (std::is_same_v<T, GLRegularParams>) return detail::gl_regular_derivatives(q, proc, s);
        else if constexpr (std::is_same_v<T, GLSingularParams>) return detail::gl_singular_derivatives(q, proc, s);
        else return detail::nh_derivatives(q, proc, s);
      },
      p);
}

double eval_F(const LyapunovParams& p, const ProcessSpec& proc, const State& s) {
  return F_derivatives(p, proc, s).value;
}

double eval_F0(const LyapunovParams& p, const ProcessSpec& proc, const State& s) {
  const double shift = std::visit([](const auto& q) { return q.shift; }, p);
  return eval_F(p, proc, s) - shift;
}

WValue eval_W(const LyapunovParams& p, const ProcessSpec& proc, const State& s) {
  WValue w;
  w.F = eval_F(p, proc, s);
  const double e = std::pow(std::max(w.F, 0.0), delta_of(p));
  w.value = std::exp(e);
  w.overflow = !std::isfinite(w.value);
  if (w.overflow) w.value = std::numeric_limits<double>::infinity();
  return w;
}

double drift_ratio(const LyapunovParams& p, const ProcessSpec& proc, const State& s) {
  const FieldDerivatives d = F_derivatives(p, proc, s);
  const double F = d.value;
  if (!(F > 0)) return std::numeric_limits<double>::quiet_NaN();
  const double delta = delta_of(p);
  const double LF = apply_generator(proc, d, s);
  const double G = carre_du_champ(proc, d);
  const double Fd1 = std::pow(F, delta - 1);
  return delta * Fd1 * LF + (delta * (delta - 1) * Fd1 / F + delta * delta * Fd1 * Fd1) * G;
}

std::vector<Inequality> feasibility_inequalities(const LyapunovParams& params, const ProcessSpec& proc) {
  return std::visit(
      [&](const auto& q) -> std::vector<Inequality> {
        using T = std::decay_t<decltype(q)>;
        if constexpr (std::is_same_v<T, GLRegularParams>) return detail::gl_regular_inequalities(q, proc);
        else if constexpr (std::is_same_v<T, GLSingularParams>) return detail::gl_singular_inequalities(q, proc);
        else return detail::nh_inequalities(q, proc);
      },
      params);
}

LyapunovParams select_params(LyapunovFamily family, const ProcessSpec& proc, double delta,
                             const SelectOptions& opt) {
  check_process(proc);
  switch (family) {
    case LyapunovFamily::GLRegular: return detail::select_gl_regular(proc, delta, opt);
    case LyapunovFamily::GLSingular: return detail::select_gl_singular(proc, delta, opt);
    case LyapunovFamily::NoseHoover: return detail::select_nh(proc, delta, opt);
  }
  throw UsageError("unknown Lyapunov family");
}

namespace detail {

void require_all(const std::vector<Inequality>& ineq, const char* context) {
  for (const auto& q : ineq)
    if (!(q.margin > 0))
      throw InfeasibleError(std::string(context) + ": condition '" + q.name + "' fails (margin " +
                            std::to_string(q.margin) + ")");
}

bool all_hold(const std::vector<Inequality>& ineq) {
  return std::all_of(ineq.begin(), ineq.end(), [](const Inequality& q) { return q.margin > 0; });
}

PolyGrowth poly_growth(const PotentialSpec& pot) {
  const auto& pc = pot.poly_constants;
  switch (pot.kind) {
    case PotentialKind::Quadratic: {
      const double a0 = pot.quadratic_a0;
      if (pc.c_V > 0 && pc.M_V > 0) return {2.0, pc.c_V, pc.M_V};
      return {2.0, a0 / 2, std::max(a0, a0 / 2 + pot.floor)};
    }
    case PotentialKind::PolyConfining:
      if (pc.c_V > 0 && pc.M_V > 0) return {pot.poly_k, pc.c_V, pc.M_V};
      return {pot.poly_k, pot.poly_c, std::max(pot.poly_c * pot.poly_k, pot.poly_c + pot.floor) * (1 + 1e-6)};
    default:
      throw InfeasibleError("the regular GL construction needs a [V poly-x^k] potential (quadratic or polynomial)");
  }
}

double max_ratio_on_shell(const LyapunovParams& p, const ProcessSpec& proc, double H0, int n,
                          std::uint64_t seed) {
  StreamFactory f(seed);
  std::vector<double> r(n);
  for_each_index(n, ExecPolicy::Parallel, [&](std::int64_t i) {
    RngStream rng = f.stream("lyapunov.select", static_cast<std::uint64_t>(i));
    const State s = sample_energy_slab(proc, H0, 10 * H0, rng);
    const double q = drift_ratio(p, proc, s);
    r[i] = std::isfinite(q) ? q : std::numeric_limits<double>::infinity();
  });
  return *std::max_element(r.begin(), r.end());
}

double upper_constant(const LyapunovParams& p, const ProcessSpec& proc, std::uint64_t seed) {
  StreamFactory f(seed);
  const int per = 400;
  std::vector<double> r(per * 6, 0.0);
  for_each_index(static_cast<std::int64_t>(r.size()), ExecPolicy::Parallel, [&](std::int64_t i) {
    RngStream rng = f.stream("lyapunov.upper", static_cast<std::uint64_t>(i));
    const double lo = std::pow(10.0, static_cast<double>(i / per));
    const State s = sample_energy_slab(proc, std::max(lo, 1.0), 10 * lo, rng);
    const double H = hamiltonian(proc, s).value();
    r[i] = eval_F(p, proc, s) / H;
  });
  return 1.05 * *std::max_element(r.begin(), r.end());
}

}  // namespace detail
}  // namespace qsdlab
