#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "qsdlab/cutoffs.hpp"
#include "qsdlab/parallel.hpp"
#include "qsdlab/processes.hpp"

namespace qsdlab {

enum class LyapunovFamily { GLRegular, GLSingular, NoseHoover };
std::string to_string(LyapunovFamily f);
LyapunovFamily parse_lyapunov_family(const std::string& s);

// F0 = h H + a kappa J(x).v + b v.z with J(x) = x |x|^(beta-1) chi(|x|).
struct GLRegularParams {
  double delta = 0.5;
  double beta = 0.5;
  double h_frak = 0.1;
  double a_frak = 0.0;
  double b_frak = 0.0;
  double kappa = 0.0;
  double C_J = 1.0;
  double shift = 0.0;
  double chi_inner = 1.0;
  double chi_outer = 2.0;
  double k = 2.0;  // growth exponent of V, recorded for the delta-range check
  double c_upper = 0.0;  // F <= c_upper H at sampled states
};

// F0 = h H + b R x.v + c R^2 v.z - b J_R v.G(x).
struct GLSingularParams {
  enum class JRKind { Constant1, EnergyWeighted };
  double delta = 0.5;
  double h_frak = 0.1;
  double b_frak = 0.0;
  double c_frak = 0.0;
  double R_frak = 1.0;
  JRKind jr_kind = JRKind::Constant1;
  double shift = 0.0;
  double C_G = 0.0;    // sup |G|
  double M_inf = 0.0;  // sup |v||z|/J_R^2
  double c_upper = 0.0;
};

// F0 = h* H + Psi0 + Psi1 + Psi2 + eps_phi Phi.
struct NHParams {
  double delta = 0.75;
  double zeta = 1.5;
  double h_star = 0.2;
  double delta_star = 0.1;
  double alpha_star = 1.0;
  double eps_star = 0.05;
  double k_star = 2.0;
  double y_star = 5.0;
  double p_star = 10.0;
  double u_star = 100.0;
  double eps_phi = 0.01;
  double R_1 = 2.0;
  double M = 1.0;
  double c_V_frak = 1.0;
  double K_frak = 1.0;  // constant bounding 2 gamma |grad_v L||grad_v Phi| / eps_phi
  double shift = 0.0;
  double dawson_max = 0.0;
  double c_upper = 0.0;
};

using LyapunovParams = std::variant<GLRegularParams, GLSingularParams, NHParams>;
LyapunovFamily family_of(const LyapunovParams& p);
double delta_of(const LyapunovParams& p);

// Throws ConfigError listing violated invariants of the parameter record.
void check_params(const LyapunovParams& p, const ProcessSpec& proc);

// F = F0 + shift with exact first derivatives and noise-block Laplacians.
FieldDerivatives F_derivatives(const LyapunovParams& p, const ProcessSpec& proc, const State& s);
double eval_F(const LyapunovParams& p, const ProcessSpec& proc, const State& s);
double eval_F0(const LyapunovParams& p, const ProcessSpec& proc, const State& s);

struct WValue {
  double value = 0.0;  // +inf on overflow
  double F = 0.0;
  bool overflow = false;
};
WValue eval_W(const LyapunovParams& p, const ProcessSpec& proc, const State& s);

// (L W)/W = d F^(d-1) LF + [d(d-1) F^(d-2) + d^2 F^(2d-2)] Gamma.
double drift_ratio(const LyapunovParams& p, const ProcessSpec& proc, const State& s);

// Nose-Hoover building blocks, exposed for tests and bound witnesses.
struct NHParts {
  double H = 0.0, psi0 = 0.0, psi1 = 0.0, psi2 = 0.0, phi = 0.0;
  double grad_v_phi_norm = 0.0;
};
NHParts nh_parts(const NHParams& p, const ProcessSpec& proc, const State& s);
// Int_0^z of D scaled: F(z) = -(1/(2 D_m^2)) int_0^z D.
double nh_frak_F(double z, double dm);

struct SelectOptions {
  double H0 = 100.0;        // empirical confirmation shell [H0, 10 H0]
  int n_confirm = 400;
  std::uint64_t seed = 7;
  double zeta = 1.2;        // NH only
  int max_refinements = 12;
  bool confirm = true;      // run the empirical shell check
};

// Closed-form feasibility search followed by an empirical check of drift_ratio < 0
// on the confirmation shell. Throws InfeasibleError naming the violated condition.
LyapunovParams select_params(LyapunovFamily family, const ProcessSpec& proc, double delta,
                             const SelectOptions& opt = {});

// Named inequality checks backing select_params.
struct Inequality {
  std::string name;
  double margin;  // > 0 when satisfied
};
std::vector<Inequality> feasibility_inequalities(const LyapunovParams& p, const ProcessSpec& proc);

// Numerical constants.
double jacobian_sup_CJ(double beta, double chi_inner, double chi_outer);
double G_sup(int n_particles, int dim_d);

// ---------------------------------------------------------------- drift condition on shells

struct Shell {
  enum class Kind { Energy, Collision };
  Kind kind = Kind::Energy;
  double lo = 0.0, hi = 0.0;  // energy bounds, or pair-separation bounds for Collision
};

// Energy shells [E_j, E_{j+1}] for consecutive levels, and [E_n, E_n^2/E_{n-1}] for the last.
std::vector<Shell> energy_shells(const std::vector<double>& levels);
// Collision shells [r_{j+1}, r_j] for decreasing separations (one fewer shell than radii).
std::vector<Shell> collision_shells(const std::vector<double>& separations);

struct ShellResult {
  Shell shell;
  double E_lo = 0.0, E_hi = 0.0;  // energy range (observed range for collision shells)
  int n_samples = 0;
  std::int64_t n_proposals = 0;
  double sup_ratio = 0.0;
  double r_n = 0.0;
  double b_n = 0.0;
  bool b_n_overflow = false;
  int n_invalid = 0;  // samples with F < 1 or non-finite ratio
};

struct C3Report {
  LyapunovFamily family;
  std::vector<ShellResult> shells;
  bool decreasing = false;     // last three sups strictly decreasing
  bool negative_tail = false;  // last three sups negative
  int negative_from = -1;      // first shell index from which all sups are negative
  bool passed = false;
};

struct C3Options {
  double collision_box = 1.0;      // centre-of-mass box for collision shells
  double collision_momentum = 3.0;  // radius of the (v, aux) ball on collision shells
  bool compute_b_n = true;
  bool check_params = true;  // off only for negative-control runs with deliberately invalid params
};

C3Report verify_C3(const LyapunovParams& p, const ProcessSpec& proc, const std::vector<Shell>& shells,
                   int n_per_shell, std::uint64_t seed, const C3Options& opt = {},
                   ExecPolicy policy = ExecPolicy::Parallel);

// Uniform sample on the phase-space slab {E_lo <= H <= E_hi} by rejection.
State sample_energy_slab(const ProcessSpec& proc, double E_lo, double E_hi, RngStream& rng,
                         std::int64_t* proposals = nullptr);
// Radius X with V(x) > E for |x| > X.
double position_radius(const PotentialSpec& pot, double E);

}  // namespace qsdlab
