#include <algorithm>
#include <cmath>

#include "lyapunov_detail.hpp"
#include "qsdlab/errors.hpp"

namespace qsdlab {

namespace {

using detail::dot;
using detail::norm2;

// g(r) = r^(beta-1) chi(r) and g'(r); J(x) = g(|x|) x.
struct RadialJ {
  double g = 0.0, dg = 0.0;
};

RadialJ radial_J(double r, double beta, const Cutoff& chi) {
  if (r <= chi.a()) return {};
  const Jet c = chi(r);
  const double p = std::pow(r, beta - 1);
  return {p * c.f, (beta - 1) * p / r * c.f + p * c.d1};
}

Cutoff chi_cutoff(const GLRegularParams& p) {
  return Cutoff(Cutoff::Kind::BandOutside, p.chi_inner, p.chi_outer);
}

double perturbation_floor(const PotentialSpec& pot) {
  return pot.perturbation ? std::min(0.0, pot.perturbation->amplitude) : 0.0;
}

// inf_x [h V(x) - C |J(x)|^2] for a radial V, on a dense radial grid with a Lipschitz margin.
double gl_regular_inf(const GLRegularParams& p, const ProcessSpec& proc) {
  const double h = p.h_frak, b = p.b_frak, ak = p.a_frak * p.kappa;
  const double C = 0.5 * ak * ak * h / (h * h - b * b);
  const Cutoff chi = chi_cutoff(p);
  const int dim = proc.dim();
  std::vector<double> x(dim, 0.0);
  auto f = [&](double r) {
    x[0] = r;
    const double V = eval_potential(proc.potential, x).value();
    const RadialJ j = radial_J(r, p.beta, chi);
    return h * V - C * j.g * j.g * r * r;
  };
  double r_hi = 4.0;
  const int n = 20000;
  double best = 0.0, margin = 0.0;
  for (int pass = 0; pass < 40; ++pass) {
    const double dr = r_hi / n;
    best = f(0.0);
    double lip = 0.0, prev = best, last = best;
    for (int i = 1; i <= n; ++i) {
      const double y = f(i * dr);
      best = std::min(best, y);
      lip = std::max(lip, std::abs(y - prev) / dr);
      prev = y;
      last = y;
    }
    margin = lip * dr;
    // The tail is increasing once h V dominates C r^(2 beta); stop when the end point is far above the min.
    if (last > best + 1.0 && f(2 * r_hi) > last) break;
    r_hi *= 2;
  }
  return best - margin + h * perturbation_floor(proc.potential);
}

double G_norm_bound(const GLSingularParams& p, int n_particles) {
  return p.C_G > 0 ? p.C_G : std::sqrt(static_cast<double>(n_particles)) * (n_particles - 1);
}

// G^i = sum_{j != i} (x^i - x^j)/|x^i - x^j|, S = v.G and grad_x S.
void G_field(const PotentialSpec& pot, const State& s, std::vector<double>& G, std::vector<double>& gS,
             double& S) {
  const int d = pot.dim_d, N = pot.n_particles, n = pot.dim();
  G.assign(n, 0.0);
  gS.assign(n, 0.0);
  S = 0.0;
  std::vector<double> u(d), w(d);
  for (int i = 0; i < N; ++i)
    for (int j = i + 1; j < N; ++j) {
      double r2 = 0.0;
      for (int a = 0; a < d; ++a) {
        u[a] = s.x[i * d + a] - s.x[j * d + a];
        r2 += u[a] * u[a];
      }
      const double r = std::sqrt(r2);
      if (!(r > 0)) throw DomainError("coincident particles: outside O_V");
      double wu = 0.0;
      for (int a = 0; a < d; ++a) {
        u[a] /= r;
        w[a] = s.v[i * d + a] - s.v[j * d + a];
        wu += w[a] * u[a];
      }
      S += wu;
      for (int a = 0; a < d; ++a) {
        G[i * d + a] += u[a];
        G[j * d + a] -= u[a];
        const double t = (w[a] - wu * u[a]) / r;
        gS[i * d + a] += t;
        gS[j * d + a] -= t;
      }
    }
}

}  // namespace

double jacobian_sup_CJ(double beta, double chi_inner, double chi_outer) {
  const Cutoff chi(Cutoff::Kind::BandOutside, chi_inner, chi_outer);
  double sup = 0.0;
  // Jac J = g I + (g'/r) x x^T has eigenvalues g and g + r g'.
  auto upd = [&](double r) {
    const RadialJ j = radial_J(r, beta, chi);
    sup = std::max({sup, std::abs(j.g), std::abs(j.g + r * j.dg)});
  };
  const int n = 20000;
  for (int i = 0; i <= n; ++i) upd(chi_inner + (chi_outer - chi_inner) * i / n);
  for (int i = 0; i <= 2000; ++i) upd(chi_outer * std::pow(1e4, i / 2000.0));
  return 1.05 * sup;
}

double G_sup(int n_particles, int dim_d) {
  if (n_particles < 2) return 0.0;
  const double analytic = std::sqrt(static_cast<double>(n_particles)) * (n_particles - 1);
  StreamFactory f(0x6a09e667f3bcc908ULL);
  RngStream rng = f.stream("lyapunov.G_sup", 0);
  PotentialSpec pot;
  pot.dim_d = dim_d;
  pot.n_particles = n_particles;
  State s;
  s.x.resize(pot.dim());
  s.v.assign(pot.dim(), 0.0);
  std::vector<double> G, gS;
  double S = 0.0, sup = 0.0;
  for (int k = 0; k < 4000; ++k) {
    // Mix generic configurations with near-collinear ones, where |G| is largest.
    const bool line = k % 2 == 1;
    for (int i = 0; i < n_particles; ++i)
      for (int a = 0; a < dim_d; ++a) {
        const double t = rng.uniform() * 2 - 1;
        s.x[i * dim_d + a] = line ? (a == 0 ? i + 0.3 * t : 1e-3 * t) : t;
      }
    G_field(pot, s, G, gS, S);
    sup = std::max(sup, std::sqrt(norm2(G)));
  }
  return std::min(analytic, 1.05 * sup);
}

namespace detail {

FieldDerivatives gl_regular_derivatives(const GLRegularParams& p, const ProcessSpec& proc, const State& s) {
  const int n = proc.dim();
  const auto& x = s.x;
  const auto& v = s.v;
  const auto& z = s.aux;
  FieldDerivatives d;
  d.grad.x = grad_potential(proc.potential, x);
  const double V = eval_potential(proc.potential, x).value();
  const double H = V + 0.5 * norm2(v) + 0.5 * norm2(z);
  const double r = std::sqrt(norm2(x));
  const RadialJ j = radial_J(r, p.beta, chi_cutoff(p));
  const double xv = dot(x, v), ak = p.a_frak * p.kappa;
  d.value = p.h_frak * H + ak * j.g * xv + p.b_frak * dot(v, z) + p.shift;
  d.grad.v.resize(n);
  d.grad.aux.resize(n);
  const double radial = r > 0 ? j.dg / r * xv : 0.0;
  for (int i = 0; i < n; ++i) {
    d.grad.x[i] = p.h_frak * d.grad.x[i] + ak * (j.g * v[i] + radial * x[i]);
    d.grad.v[i] = p.h_frak * v[i] + ak * j.g * x[i] + p.b_frak * z[i];
    d.grad.aux[i] = p.h_frak * z[i] + p.b_frak * v[i];
  }
  d.lap_v = p.h_frak * n;
  d.lap_aux = p.h_frak * n;
  return d;
}

FieldDerivatives gl_singular_derivatives(const GLSingularParams& p, const ProcessSpec& proc, const State& s) {
  const int n = proc.dim();
  const auto& x = s.x;
  const auto& v = s.v;
  const auto& z = s.aux;
  const ExtReal Ve = eval_potential(proc.potential, x);
  if (Ve.is_outside()) throw DomainError("state outside O_V");
  const double V = Ve.value();
  const std::vector<double> gV = grad_potential(proc.potential, x);
  std::vector<double> G, gS;
  double S = 0.0;
  G_field(proc.potential, s, G, gS, S);

  const double h = p.h_frak, b = p.b_frak, c = p.c_frak, R = p.R_frak;
  const double v2 = norm2(v), z2 = norm2(z);
  double J = 1.0, cx = 0.0, cv = 0.0, cz = 0.0, lapvJ = 0.0, lapzJ = 0.0;
  if (p.jr_kind == GLSingularParams::JRKind::EnergyWeighted) {
    const double R6 = std::pow(R, 6);
    J = std::sqrt(R6 * z2 + v2 + 2 * V + R * R);
    // grad J = (grad V, v, R^6 z)/J, written as coefficients of those vectors.
    cx = 1.0 / J;
    cv = 1.0 / J;
    cz = R6 / J;
    lapvJ = n / J - v2 / (J * J * J);
    lapzJ = R6 * n / J - R6 * R6 * z2 / (J * J * J);
  }
  FieldDerivatives d;
  d.value = h * (V + 0.5 * v2 + 0.5 * z2) + b * R * dot(x, v) + c * R * R * dot(v, z) - b * J * S + p.shift;
  d.grad.x.resize(n);
  d.grad.v.resize(n);
  d.grad.aux.resize(n);
  for (int i = 0; i < n; ++i) {
    d.grad.x[i] = h * gV[i] + b * R * v[i] - b * J * gS[i] - b * S * cx * gV[i];
    d.grad.v[i] = h * v[i] + b * R * x[i] + c * R * R * z[i] - b * J * G[i] - b * S * cv * v[i];
    d.grad.aux[i] = h * z[i] + c * R * R * v[i] - b * S * cz * z[i];
  }
  d.lap_v = h * n - b * (2 * cv * dot(v, G) + S * lapvJ);
  d.lap_aux = h * n - b * S * lapzJ;
  return d;
}

std::vector<Inequality> gl_regular_inequalities(const GLRegularParams& p, const ProcessSpec& proc) {
  const double g = proc.gamma, al = proc.alpha_c, la = proc.lambda_c, dl = p.delta;
  const double h = p.h_frak, a = p.a_frak, k = p.k;
  std::vector<Inequality> q;
  q.push_back({"delta range (1-beta)/k < delta <= 1", std::min(dl - (1 - p.beta) / k, 1 - dl + 1e-300)});
  q.push_back({"kappa C_J <= lambda/2", la / 2 - p.kappa * p.C_J + 1e-15});
  if (g > 0) {
    const double bmax = std::min({1.0, k / 2, k - 1});
    q.push_back({"beta in (0, min(1, k/2, k-1))", std::min(p.beta, bmax - p.beta)});
    q.push_back({"b = 0 when gamma > 0", p.b_frak == 0 ? 1.0 : -1.0});
    q.push_back({"-gamma h + 2 delta gamma h^2 < 0", g * h - 2 * dl * g * h * h});
    q.push_back({"-alpha h + delta alpha h^2 < 0", al * h - dl * al * h * h});
    q.push_back({"C_L a - gamma h + 2 delta gamma h^2 < 0", -(p.kappa * p.C_J * a - g * h + 2 * dl * g * h * h)});
  } else {
    const PolyGrowth pg = poly_growth(proc.potential);
    const double p1 = k / (k - 1), kap = p.kappa;
    q.push_back({"k in (1, 2] when gamma = 0", std::min(k - 1, 2 - k + 1e-300)});
    q.push_back({"beta = k - 1", std::abs(p.beta - (k - 1)) < 1e-12 ? 1.0 : -1.0});
    q.push_back({"b = a when gamma = 0", p.b_frak == a ? 1.0 : -1.0});
    q.push_back({"-alpha h + 2 delta alpha h^2 < 0", al * h - 2 * dl * al * h * h});
    q.push_back({"a kappa/p1 < c_V h", pg.c_V * h - a * kap / p1});
    q.push_back({"a kappa/k + a/2 < h/2", h / 2 - a * kap / k - a / 2});
    q.push_back({"-lambda a/2 + 2 delta alpha a^2 + alpha a^(3/2)/2 < 0",
                 la * a / 2 - 2 * dl * al * a * a - al * std::pow(a, 1.5) / 2});
    q.push_back({"-kappa c_V a + (lambda kappa + M_V) a^(3/2)/2 < 0",
                 kap * pg.c_V * a - (la * kap + pg.M_V) * std::pow(a, 1.5) / 2});
    q.push_back({"-alpha h + 2 delta alpha h^2 + (lambda kappa + M_V + alpha) sqrt(a)/2 + lambda a < 0",
                 al * h - 2 * dl * al * h * h - (la * kap + pg.M_V + al) * std::sqrt(a) / 2 - la * a});
  }
  return q;
}

GLRegularParams select_gl_regular(const ProcessSpec& proc, double delta, const SelectOptions& opt) {
  if (proc.family != Family::GeneralizedLangevin)
    throw UsageError("the GL Lyapunov construction needs a generalized Langevin process");
  if (!(delta > 0 && delta <= 1)) throw InfeasibleError("delta must lie in (0, 1]");
  const PolyGrowth pg = poly_growth(proc.potential);
  GLRegularParams p;
  p.delta = delta;
  p.k = pg.k;
  if (!(pg.k > 1)) throw InfeasibleError("the regular GL construction needs k > 1");
  if (proc.gamma > 0) {
    p.beta = 0.9 * std::min({1.0, pg.k / 2, pg.k - 1});
  } else {
    if (!(pg.k <= 2)) throw InfeasibleError("gamma = 0 requires k in (1, 2]");
    p.beta = pg.k - 1;
  }
  if (!(delta > (1 - p.beta) / pg.k))
    throw InfeasibleError("delta range (1-beta)/k < delta fails: (1-beta)/k = " +
                          std::to_string((1 - p.beta) / pg.k));
  p.C_J = jacobian_sup_CJ(p.beta, p.chi_inner, p.chi_outer);
  p.kappa = proc.lambda_c / (2 * p.C_J);
  p.h_frak = 1.0 / (4 * delta);
  if (proc.gamma > 0) {
    const double g = proc.gamma, h = p.h_frak;
    p.a_frak = 0.5 * (g * h - 2 * delta * g * h * h) / (p.kappa * p.C_J);
    p.b_frak = 0.0;
  } else {
    p.a_frak = 1.0;
    for (int i = 0; i < 200; ++i) {
      p.b_frak = p.a_frak;
      if (all_hold(gl_regular_inequalities(p, proc))) break;
      p.a_frak *= 0.8;
    }
  }
  for (int refine = 0;; ++refine) {
    if (proc.gamma == 0) p.b_frak = p.a_frak;
    require_all(gl_regular_inequalities(p, proc), "GL-regular parameter search");
    p.shift = 1.0 - gl_regular_inf(p, proc);
    if (max_ratio_on_shell(p, proc, opt.H0, opt.n_confirm, opt.seed) < 0) break;
    if (refine >= opt.max_refinements)
      throw InfeasibleError("GL-regular: drift ratio is not negative on the confirmation shell");
    p.a_frak *= 0.5;
  }
  p.c_upper = upper_constant(p, proc, opt.seed + 1);
  return p;
}

std::vector<Inequality> gl_singular_inequalities(const GLSingularParams& p, const ProcessSpec& proc) {
  const double g = proc.gamma, al = proc.alpha_c, la = proc.lambda_c, dl = p.delta;
  const double h = p.h_frak, b = p.b_frak, R = p.R_frak, a0 = proc.potential.quadratic_a0;
  const double CG = G_norm_bound(p, proc.potential.n_particles);
  std::vector<Inequality> q;
  if (g > 0) {
    q.push_back({"h > max(b, b/a0)", h - std::max(b, b / a0)});
    q.push_back({"gamma > 0 uses c = 0, R = 1, J_R = 1",
                 p.c_frak == 0 && R == 1 && p.jr_kind == GLSingularParams::JRKind::Constant1 ? 1.0 : -1.0});
    q.push_back({"gamma h - 3 delta gamma h^2 > 0", g * h - 3 * dl * g * h * h});
    q.push_back({"alpha h - delta alpha h^2 > 0", al * h - dl * al * h * h});
    q.push_back({"a0 b - 2 b^(3/2) - 3 delta gamma b^2 > 0", a0 * b - 2 * std::pow(b, 1.5) - 3 * dl * g * b * b});
    q.push_back({"alpha h - delta alpha h^2 - lambda^2 sqrt(b)/4 > 0",
                 al * h - dl * al * h * h - la * la * std::sqrt(b) / 4});
    q.push_back({"gamma h - b - 3 delta gamma h^2 - gamma^2 sqrt(b)/4 > 0",
                 g * h - b - 3 * dl * g * h * h - g * g * std::sqrt(b) / 4});
    return q;
  }
  const auto& I = *proc.potential.interaction;
  const double cstar = I.B * I.beta / 2, A = I.B * I.beta + 1, M = p.M_inf;
  const double e0 = 1 / std::sqrt(b), e1 = e0, e2 = std::sqrt(b), e3 = e2;
  const double R2 = R * R, R3 = R2 * R, R4 = R2 * R2, R12 = std::pow(R, 12);
  q.push_back({"gamma = 0 uses c = b and the energy-weighted J_R",
               p.c_frak == b && p.jr_kind == GLSingularParams::JRKind::EnergyWeighted ? 1.0 : -1.0});
  q.push_back({"c* R/2 - A > 0", cstar * R / 2 - A});
  q.push_back({"lambda R - 1 > 0", la * R - 1});
  q.push_back({"-alpha h + 3 delta alpha h^2 < 0", al * h - 3 * dl * al * h * h});
  q.push_back({"a0 (h - b C_G/sqrt(2))/2 - b R/2 > 0", a0 / 2 * (h - b * CG / std::sqrt(2.0)) - b * R / 2});
  q.push_back({"h/2 - b R^2/2 - b R^3 C_G/2 > 0", h / 2 - b * R2 / 2 - b * R3 * CG / 2});
  q.push_back({"h/2 - b R/2 - b R^2/2 - b C_G (R^3 + sqrt(2) + 2)/2 > 0", h / 2 - b * R / 2 - b * R2 / 2 - b * CG / 2 * (R3 + std::sqrt(2.0) + 2)});
  const double c_z = -al * h + 3 * dl * al * h * h + b * R2 * la + al * b * R2 * e0 / 2 + la * b * R * e1 / 2 +
                     la * b * R3 * CG + b * CG * la * std::sqrt(a0) / (2 * e2) + b * CG * la / (2 * e3) +
                     R2 * a0 * std::sqrt(b) / 2 + 3 * dl * al * b * b * R12 * CG * CG * M / 2 +
                     la * CG * b / std::sqrt(2.0);
  const double c_v = -b * R * (la * R - 1) + b * R2 * al / (2 * e0) + b * CG * la * e3 / 2 +
                     3 * dl * al * b * b * (R4 + CG * CG * R12 * M / 2);
  const double c_x = -a0 * b * R + b * CG * la * e2 * std::sqrt(a0) / 2 + b * R * la / (2 * e1) +
                     R2 * a0 * std::pow(b, 1.5) / 2;
  q.push_back({"c_z < 0", -c_z});
  q.push_back({"c_v < 0", -c_v});
  q.push_back({"c_x < 0", -c_x});
  return q;
}

namespace {

// Certified lower bound of F0 from the coercivity estimates of each case.
double gl_singular_inf(const GLSingularParams& p, const ProcessSpec& proc) {
  const auto& pot = proc.potential;
  const double h = p.h_frak, b = p.b_frak, R = p.R_frak;
  const double CG = G_norm_bound(p, pot.n_particles);
  const int n_pairs = pot.n_particles * (pot.n_particles - 1) / 2;
  const double pair_min = pot.interaction ? pair_minimum(*pot.interaction, pot.dim_d) : 0.0;
  const double Vbase = pot.floor + n_pairs * pair_min + perturbation_floor(pot);
  if (proc.gamma > 0) return h * Vbase - (b * CG) * (b * CG) / (2 * (h - b));
  const double K1 = h - b * CG / std::sqrt(2.0);
  const double Av = h / 2 - b * R / 2 - b * R * R / 2 - b * CG / 2 * (R * R * R + std::sqrt(2.0) + 2);
  return K1 * Vbase - (b * R * CG) * (b * R * CG) / (4 * Av);
}

}  // namespace

GLSingularParams select_gl_singular(const ProcessSpec& proc, double delta, const SelectOptions& opt) {
  if (proc.family != Family::GeneralizedLangevin)
    throw UsageError("the GL Lyapunov construction needs a generalized Langevin process");
  const auto& pot = proc.potential;
  if (pot.kind != PotentialKind::SingularComposite)
    throw InfeasibleError("the singular GL construction needs a quadratic confinement with pair interactions");
  if (!(delta > 0 && delta <= 1)) throw InfeasibleError("delta must lie in (0, 1]");
  GLSingularParams p;
  p.delta = delta;
  p.C_G = G_sup(pot.n_particles, pot.dim_d);
  const double a0 = pot.quadratic_a0;
  if (proc.gamma > 0) {
    p.jr_kind = GLSingularParams::JRKind::Constant1;
    p.R_frak = 1.0;
    p.c_frak = 0.0;
    p.h_frak = 1.0 / (6 * delta);
    p.b_frak = std::min(p.h_frak, p.h_frak * a0) / 2;
    for (int i = 0; i < 400 && !all_hold(gl_singular_inequalities(p, proc)); ++i) p.b_frak *= 0.9;
  } else {
    if (!pot.interaction) throw InfeasibleError("gamma = 0 singular construction needs an interaction");
    const auto& I = *pot.interaction;
    if (I.phi_kind == PhiKind::CustomSymmetric)
      throw InfeasibleError("gamma = 0 singular construction supports built-in interaction tails only");
    const double cstar = I.B * I.beta / 2, A = I.B * I.beta + 1;
    p.jr_kind = GLSingularParams::JRKind::EnergyWeighted;
    p.R_frak = 1.1 * std::max(2 * A / cstar, 1.0 / proc.lambda_c);
    // J_R^2 >= R^6|z|^2 + |v|^2 >= 2 R^3 |v||z| gives the exact supremum 1/(2 R^3).
    p.M_inf = 1.0 / (2 * std::pow(p.R_frak, 3));
    p.h_frak = 1.0 / (6 * delta);
    p.b_frak = p.h_frak;
    for (int i = 0; i < 2000; ++i) {
      p.c_frak = p.b_frak;
      if (all_hold(gl_singular_inequalities(p, proc))) break;
      p.b_frak *= 0.95;
    }
  }
  for (int refine = 0;; ++refine) {
    if (proc.gamma == 0) p.c_frak = p.b_frak;
    require_all(gl_singular_inequalities(p, proc), "GL-singular parameter search");
    p.shift = 1.0 - gl_singular_inf(p, proc);
    if (max_ratio_on_shell(p, proc, opt.H0, opt.n_confirm, opt.seed) < 0) break;
    if (refine >= opt.max_refinements)
      throw InfeasibleError("GL-singular: drift ratio is not negative on the confirmation shell");
    p.b_frak *= 0.5;
  }
  p.c_upper = upper_constant(p, proc, opt.seed + 1);
  return p;
}

}  // namespace detail
}  // namespace qsdlab
