#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "lyapunov_detail.hpp"
#include "qsdlab/dawson.hpp"
#include "qsdlab/errors.hpp"

namespace qsdlab {

double nh_frak_F(double z, double dm) { return -dawson_integral(z) / (2 * dm * dm); }

namespace {

using detail::dot;
using detail::norm2;

struct NHEval {
  FieldDerivatives d;
  NHParts parts;
};

void axpy(double a, std::span<const double> x, std::vector<double>& y) {
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += a * x[i];
}

NHEval nh_eval(const NHParams& p, const ProcessSpec& proc, const State& s) {
  const auto& pot = proc.potential;
  const int n = proc.dim();
  const auto& x = s.x;
  const auto& v = s.v;
  const double y = s.aux[0];
  const ExtReal Ve = eval_potential(pot, x);
  if (Ve.is_outside()) throw DomainError("state outside O_V");
  const double V = Ve.value();
  const std::vector<double> gV = grad_potential(pot, x);
  const double G2 = norm2(gV), Gn = std::sqrt(G2), P = dot(v, gV), v2 = norm2(v);
  std::vector<double> HgV(n), Hv(n);
  hessian_vector(pot, x, gV, HgV);
  hessian_vector(pot, x, v, Hv);
  const double q = std::sqrt(y * y + 1);
  const double dm = p.dawson_max > 0 ? p.dawson_max : dawson_max();
  const CutoffFamily cf = build_cutoffs(p.k_star, p.y_star, p.R_1);

  NHEval out;
  FieldDerivatives& d = out.d;
  NHParts& parts = out.parts;
  d.grad.x.assign(n, 0.0);
  d.grad.v.assign(n, 0.0);
  d.grad.aux.assign(1, 0.0);
  double& gy = d.grad.aux[0];

  // h* H
  parts.H = V + 0.5 * v2 + 0.5 * y * y;
  d.value = p.h_star * parts.H;
  axpy(p.h_star, gV, d.grad.x);
  axpy(p.h_star, v, d.grad.v);
  gy += p.h_star * y;
  d.lap_v = p.h_star * n;

  // Psi0 = delta* f0(y) y^2/2
  const Jet f0 = cf.f0(y);
  parts.psi0 = p.delta_star * f0.f * y * y / 2;
  d.value += parts.psi0;
  gy += p.delta_star * (f0.d1 * y * y / 2 + f0.f * y);

  // Gate variables Theta(v, y) and Upsilon(x, y).
  const double Th = v2 / (p.p_star * q);
  std::vector<double> dvTh(v.begin(), v.end());
  for (double& t : dvTh) t *= 2 / (p.p_star * q);
  const double lapTh = 2.0 * n / (p.p_star * q);
  const double dyTh = -v2 * y / (p.p_star * q * q * q);
  const double Up = G2 / (p.u_star * q * q);
  std::vector<double> dxUp(HgV);
  for (double& t : dxUp) t *= 2 / (p.u_star * q * q);
  const double dyUp = -2 * y * G2 / (p.u_star * q * q * q * q);
  const Jet f2 = cf.f2(Th);
  const double dvTh2 = norm2(dvTh);

  // Psi1 = alpha* f1(y) f2(Theta) f3(Upsilon) q v.gradV/|gradV|^2
  const Jet f3 = cf.f3(Up);
  const Jet f1 = cf.f1(y);
  if ((f3.f != 0 || f3.d1 != 0) && (f2.f != 0 || f2.d1 != 0) && (f1.f != 0 || f1.d1 != 0)) {
    const double a = p.alpha_star;
    const double A = q * P / G2;
    std::vector<double> dvA(gV), dxA(n);
    for (double& t : dvA) t *= q / G2;
    for (int i = 0; i < n; ++i) dxA[i] = q * (Hv[i] / G2 - 2 * P * HgV[i] / (G2 * G2));
    const double dyA = y / q * P / G2;
    parts.psi1 = a * f1.f * f2.f * f3.f * A;
    d.value += parts.psi1;
    for (int i = 0; i < n; ++i) {
      d.grad.v[i] += a * f1.f * f3.f * (f2.d1 * dvTh[i] * A + f2.f * dvA[i]);
      d.grad.x[i] += a * f1.f * f2.f * (f3.d1 * dxUp[i] * A + f3.f * dxA[i]);
    }
    d.lap_v += a * f1.f * f3.f * (f2.d2 * dvTh2 * A + f2.d1 * lapTh * A + 2 * f2.d1 * dot(dvTh, dvA));
    gy += a * (f1.d1 * f2.f * f3.f * A + f1.f * f2.d1 * dyTh * f3.f * A + f1.f * f2.f * f3.d1 * dyUp * A +
               f1.f * f2.f * f3.f * dyA);
  }

  // Psi2 = h1(y) f2(Theta) h3(Upsilon) sum_i F(c v_i - e d_i V), c = sqrt(sigma/(2 gamma)), e = c/sigma
  const Jet h1 = cf.h1(y);
  const Jet h3 = cf.h3(Up);
  if ((h1.f != 0 || h1.d1 != 0) && (f2.f != 0 || f2.d1 != 0) && (h3.f != 0 || h3.d1 != 0)) {
    const double g = proc.gamma, sig = -(y + g);
    const double c = std::sqrt(sig / (2 * g)), e = 1 / std::sqrt(2 * g * sig);
    const double k2 = 1 / (2 * dm * dm);
    double S2 = 0.0, lapS2 = 0.0, dyS2 = 0.0;
    std::vector<double> Fp(n);
    for (int i = 0; i < n; ++i) {
      const double w = c * v[i] - e * gV[i];
      const double D = dawson(w);
      S2 += -k2 * dawson_integral(w);
      Fp[i] = -k2 * D;
      lapS2 += c * c * (-k2 * (1 - 2 * w * D));
      dyS2 += Fp[i] * (-(c / (2 * sig)) * v[i] - (e / (2 * sig)) * gV[i]);
    }
    std::vector<double> HFp(n);
    hessian_vector(pot, x, Fp, HFp);
    const double g2 = h1.f * f2.f * h3.f;
    parts.psi2 = g2 * S2;
    d.value += parts.psi2;
    double cross = 0.0;
    for (int i = 0; i < n; ++i) {
      const double dvg2 = h1.f * h3.f * f2.d1 * dvTh[i];
      d.grad.v[i] += dvg2 * S2 + g2 * c * Fp[i];
      d.grad.x[i] += h1.f * f2.f * h3.d1 * dxUp[i] * S2 - g2 * e * HFp[i];
      cross += dvg2 * c * Fp[i];
    }
    d.lap_v += h1.f * h3.f * (f2.d2 * dvTh2 + f2.d1 * lapTh) * S2 + 2 * cross + g2 * lapS2;
    gy += (h1.d1 * f2.f * h3.f + h1.f * f2.d1 * dyTh * h3.f + h1.f * f2.f * h3.d1 * dyUp) * S2 + g2 * dyS2;
  }

  // Phi = hR(V) v.gradV/|gradV|^zeta - h0(y) y^2
  const Jet hR = cf.hR(V);
  const Jet h0 = cf.h0(y);
  double phi = -h0.f * y * y;
  std::vector<double> phx(n, 0.0), phv(n, 0.0);
  if (hR.f != 0 || hR.d1 != 0) {
    const double B = std::pow(Gn, -p.zeta);
    phi += hR.f * P * B;
    for (int i = 0; i < n; ++i) {
      phv[i] = hR.f * B * gV[i];
      phx[i] = hR.d1 * gV[i] * P * B + hR.f * (Hv[i] * B - p.zeta * P * B / G2 * HgV[i]);
    }
  }
  parts.phi = phi;
  parts.grad_v_phi_norm = std::sqrt(norm2(phv));
  const double ep = p.eps_phi;
  d.value += ep * phi + p.shift;
  axpy(ep, phx, d.grad.x);
  axpy(ep, phv, d.grad.v);
  gy += -ep * (h0.d1 * y * y + 2 * h0.f * y);
  d.lap_aux = 0.0;
  return out;
}

// Sampled geometry of V used by the construction.
struct VGeometry {
  std::vector<double> V, grad, hess;  // value, |grad V|, |Hess V|_2 per sample
};

VGeometry sample_geometry(const PotentialSpec& pot, double V_max) {
  const int n = pot.dim();
  const int n_dir = n == 1 ? 2 : 16, n_rad = 4000;
  StreamFactory f(0x3c6ef372fe94f82bULL);
  RngStream rng = f.stream("lyapunov.nh_geometry", 0);
  const double r_max = position_radius(pot, V_max);
  VGeometry g;
  std::vector<double> x(n), u(n), e(n), col(n);
  Eigen::MatrixXd Hm(n, n);
  for (int k = 0; k < n_dir; ++k) {
    double nu = 0.0;
    for (int i = 0; i < n; ++i) {
      u[i] = n == 1 ? (k == 0 ? 1.0 : -1.0) : rng.normal();
      nu += u[i] * u[i];
    }
    nu = std::sqrt(nu);
    for (int j = 0; j < n_rad; ++j) {
      const double r = r_max * std::pow(1e-4, 1.0 - static_cast<double>(j) / (n_rad - 1));
      for (int i = 0; i < n; ++i) x[i] = r * u[i] / nu;
      const ExtReal V = eval_potential(pot, x);
      if (V.is_outside()) continue;
      const auto gv = grad_potential(pot, x);
      for (int c = 0; c < n; ++c) {
        std::fill(e.begin(), e.end(), 0.0);
        e[c] = 1.0;
        hessian_vector(pot, x, e, col);
        for (int i = 0; i < n; ++i) Hm(i, c) = col[i];
      }
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (Hm + Hm.transpose()), Eigen::EigenvaluesOnly);
      g.V.push_back(V.value());
      g.grad.push_back(std::sqrt(norm2(gv)));
      g.hess.push_back(es.eigenvalues().cwiseAbs().maxCoeff());
    }
  }
  return g;
}

struct CVResult {
  double R1, M, c_V;
};

CVResult c_V_for(const VGeometry& g, double R1, double zeta) {
  const Cutoff hR(Cutoff::Kind::StepUp, R1 - 1, R1);
  double M = 0.0, band = 0.0;
  for (std::size_t i = 0; i < g.V.size(); ++i) {
    if (g.V[i] < R1 - 1) continue;
    M = std::max(M, hR.value(g.V[i]) * g.hess[i] / std::pow(g.grad[i], zeta));
    if (g.V[i] <= R1) band = std::max(band, std::pow(g.grad[i], 2 - zeta));
  }
  M *= 1.05;
  return {R1, M, 3 * M + 2 * 1.05 * band};
}

double K_frak_of(const NHParams& p, const ProcessSpec& proc) {
  const double g = proc.gamma, n = proc.dim(), dm = p.dawson_max > 0 ? p.dawson_max : dawson_max();
  return std::max({2 * g * p.h_star, g * n / (dm * std::sqrt(2 * g)), 2 * g * (n + 1) * p.eps_star});
}

double eps_phi_cap(const NHParams& p, const ProcessSpec& proc) {
  const double g = proc.gamma, n = proc.dim(), dm = p.dawson_max > 0 ? p.dawson_max : dawson_max(), T = 1 / (8 * dm * dm);
  const double s = p.h_star + p.delta_star + p.eps_star, K = p.K_frak;
  return std::min({(p.h_star - p.eps_star) / 2, p.delta_star / 4,
                   g * p.h_star * (1 - p.h_star) / (2 * (p.c_V_frak + 3)), p.h_star * n / (2 * n + 1),
                   (n * T - s * n) / (1 + K), (p.delta_star * p.p_star / 4 - s * n) / (1 + K)});
}

// Witness states for |Psi| <= eps* H: energy slabs plus states placed inside the gates.
std::vector<State> psi_witnesses(const NHParams& p, const ProcessSpec& proc, int n_each, std::uint64_t seed) {
  const int n = proc.dim();
  std::vector<State> out(static_cast<std::size_t>(n_each) * 8);
  StreamFactory f(seed);
  for_each_index(static_cast<std::int64_t>(out.size()), ExecPolicy::Parallel, [&](std::int64_t k) {
    RngStream rng = f.stream("lyapunov.psi_witness", static_cast<std::uint64_t>(k));
    const int kind = static_cast<int>(k / n_each);
    if (kind < 6) {
      const double lo = std::pow(10.0, kind);
      out[k] = sample_energy_slab(proc, lo, 10 * lo, rng);
      return;
    }
    // Inside the gates: y around the Psi1/Psi2 windows, Theta in [0, 2], Upsilon in [0, 4].
    State s = make_state(proc);
    const double y = kind == 6 ? -p.y_star - 1 - 3 * p.y_star * rng.uniform()
                               : -(p.y_star + 1) + (p.y_star + p.k_star + 2) * rng.uniform();
    s.aux[0] = y;
    const double q = std::sqrt(y * y + 1);
    const double vr = std::sqrt(2 * rng.uniform() * p.p_star * q);
    const double gtarget = std::sqrt(4 * rng.uniform() * p.u_star) * q;
    std::vector<double> u(n);
    double nu = 0.0;
    for (int i = 0; i < n; ++i) {
      u[i] = rng.normal();
      nu += u[i] * u[i];
    }
    nu = std::sqrt(nu);
    for (int i = 0; i < n; ++i) s.v[i] = vr * u[i] / nu;
    for (int i = 0; i < n; ++i) u[i] = rng.normal();
    nu = std::sqrt(norm2(u));
    // Bisection for |grad V(r u)| = gtarget along the ray.
    double lo = 0.0, hi = position_radius(proc.potential, 1e12);
    std::vector<double> x(n);
    for (int it = 0; it < 80; ++it) {
      const double mid = 0.5 * (lo + hi);
      for (int i = 0; i < n; ++i) x[i] = mid * u[i] / nu;
      const double gn = std::sqrt(norm2(grad_potential(proc.potential, x)));
      (gn < gtarget ? lo : hi) = mid;
    }
    for (int i = 0; i < n; ++i) s.x[i] = 0.5 * (lo + hi) * u[i] / nu;
    out[k] = s;
  });
  return out;
}

struct PsiCheck {
  double worst = 0.0;  // max |Psi|/(eps* H)
  double psi1 = 0.0, psi2 = 0.0;  // max component shares
};

PsiCheck check_psi(const NHParams& p, const ProcessSpec& proc, const std::vector<State>& ws) {
  PsiCheck c;
  for (const State& s : ws) {
    const NHParts t = nh_parts(p, proc, s);
    const double denom = p.eps_star * t.H;
    c.worst = std::max(c.worst, std::abs(t.psi0 + t.psi1 + t.psi2) / denom);
    c.psi1 = std::max(c.psi1, std::abs(t.psi1) / denom);
    c.psi2 = std::max(c.psi2, std::abs(t.psi2) / denom);
  }
  return c;
}

}  // namespace

NHParts nh_parts(const NHParams& p, const ProcessSpec& proc, const State& s) {
  check_state(proc, s);
  return nh_eval(p, proc, s).parts;
}

namespace detail {

FieldDerivatives nh_derivatives(const NHParams& p, const ProcessSpec& proc, const State& s) {
  return nh_eval(p, proc, s).d;
}

std::vector<Inequality> nh_inequalities(const NHParams& p, const ProcessSpec& proc) {
  const double g = proc.gamma, n = proc.dim(), dm = p.dawson_max > 0 ? p.dawson_max : dawson_max();
  const double T = 1 / (8 * dm * dm), s = p.h_star + p.delta_star + p.eps_star, ep = p.eps_phi, K = p.K_frak;
  return {
      {"delta in (1/2, 1]", std::min(p.delta - 0.5, 1 - p.delta + 1e-300)},
      {"zeta in (1, 2)", std::min(p.zeta - 1, 2 - p.zeta)},
      {"h* < 1/(8 D_m^2)", T - p.h_star},
      {"y* > 3 gamma + 1", p.y_star - 3 * g - 1},
      {"alpha* > dN/(4 D_m^2)", p.alpha_star - n / (4 * dm * dm)},
      {"h* + delta* + eps* < 1/(8 D_m^2)", T - s},
      {"eps* < h*", p.h_star - p.eps_star},
      {"eps_phi < (h* - eps*)/2", (p.h_star - p.eps_star) / 2 - ep},
      {"gamma h*(1 - h*)/2 - eps_phi (c_V + 3) > 0", g * p.h_star * (1 - p.h_star) / 2 - ep * (p.c_V_frak + 3)},
      {"h* dN - eps_phi (2 dN + 1) > 0", p.h_star * n - ep * (2 * n + 1)},
      {"eps_phi < delta*/4", p.delta_star / 4 - ep},
      {"dN/(8 D_m^2) - (h* + delta* + eps*) dN - eps_phi (1 + K) > 0", n * T - s * n - ep * (1 + K)},
      {"delta* p*/4 > dN/(8 D_m^2)", p.delta_star * p.p_star / 4 - n * T},
      {"delta* p*/4 - (h* + delta* + eps*) dN - eps_phi (1 + K) > 0",
       p.delta_star * p.p_star / 4 - s * n - ep * (1 + K)},
  };
}

NHParams select_nh(const ProcessSpec& proc, double delta, const SelectOptions& opt) {
  if (proc.family != Family::NoseHoover) throw UsageError("the Nose-Hoover construction needs a Nose-Hoover process");
  if (!(delta > 0.5 && delta <= 1)) throw InfeasibleError("delta must lie in (1/2, 1] for the Nose-Hoover construction");
  if (!(opt.zeta > 1 && opt.zeta < 2)) throw InfeasibleError("zeta must lie in (1, 2)");
  const auto& pot = proc.potential;
  if (pot.kind == PotentialKind::PolyConfining || pot.kind == PotentialKind::Quadratic) {
    const double k = pot.kind == PotentialKind::Quadratic ? 2.0 : pot.poly_k;
    const double lo = 1 - (k - 1) / k * (2 - opt.zeta);
    if (!(delta > lo)) throw InfeasibleError("delta must exceed 1 - ((k-1)/k)(2 - zeta) = " + std::to_string(lo));
  }
  const double n = proc.dim(), g = proc.gamma;
  NHParams p;
  p.delta = delta;
  p.zeta = opt.zeta;
  p.dawson_max = dawson_max();
  const double T = 1 / (8 * p.dawson_max * p.dawson_max);
  p.h_star = 0.5 * T;
  p.eps_star = 0.3 * T;
  p.delta_star = 0.1 * T;
  p.alpha_star = 1.25 * n / (4 * p.dawson_max * p.dawson_max);
  p.k_star = 2.0;
  p.y_star = 3 * g + 2;
  p.p_star = 8 * n * T / p.delta_star;
  p.u_star = 100.0;

  // R_1 from the largest level where |grad V| < 1, then the R_1 candidate minimising c_V.
  const VGeometry geo = sample_geometry(pot, 1e8);
  double L = 1.0;
  for (std::size_t i = 0; i < geo.V.size(); ++i)
    if (geo.grad[i] < 1) L = std::max(L, geo.V[i]);
  CVResult best{0, 0, std::numeric_limits<double>::infinity()};
  for (double f : {1.02, 1.1, 1.25, 1.5, 2.0, 3.0, 5.0}) {
    const CVResult c = c_V_for(geo, (L + 1) * f, p.zeta);
    if (c.c_V < best.c_V) best = c;
  }
  p.R_1 = best.R1;
  p.M = best.M;
  p.c_V_frak = best.c_V;

  // Enlarge u* (Psi1) and y* (Psi2) until the witness bound |Psi| <= eps* H holds.
  for (int it = 0;; ++it) {
    const PsiCheck c = check_psi(p, proc, psi_witnesses(p, proc, 250, opt.seed + 17));
    if (c.worst <= 1) break;
    if (it >= 40) throw InfeasibleError("Nose-Hoover: could not reach |Psi| <= eps* H by enlarging u* and y*");
    if (c.psi1 >= c.psi2) p.u_star *= 4;
    else p.y_star += std::max(1.0, 0.5 * p.y_star);
  }
  // The h1'(y) terms near y = -y* and the Psi1 gate dominate at moderate energy; enlarging
  // y* and u* pushes them to higher shells. Each round re-derives the dependent constants.
  for (int round = 0;; ++round) {
    p.K_frak = K_frak_of(p, proc);
    p.eps_phi = 0.9 * eps_phi_cap(p, proc);
    const double cl = p.h_star - p.eps_star;
    // F0 >= (h* - eps*) H - eps_phi |v| - eps_phi y^2 >= cl - eps_phi^2/(2 cl).
    p.shift = 1 - (cl - p.eps_phi * p.eps_phi / (2 * cl));
    require_all(nh_inequalities(p, proc), "Nose-Hoover parameter search");
    if (!opt.confirm || max_ratio_on_shell(p, proc, opt.H0, opt.n_confirm, opt.seed) < 0) break;
    if (round >= opt.max_refinements)
      throw InfeasibleError("Nose-Hoover: drift ratio is not negative on the confirmation shell");
    p.y_star *= 2;
    p.u_star *= 4;
  }
  p.c_upper = upper_constant(p, proc, opt.seed + 1);
  return p;
}

}  // namespace detail
}  // namespace qsdlab
