#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "qsdlab/potentials.hpp"

namespace qsdlab {

enum class Family { KineticLangevin, GeneralizedLangevin, NoseHoover };
std::string to_string(Family f);
Family parse_family(const std::string& name);

struct ProcessSpec {
  Family family = Family::KineticLangevin;
  double gamma = 1.0;
  double lambda_c = 1.0;  // GL coupling
  double alpha_c = 1.0;   // GL auxiliary relaxation
  PotentialSpec potential;

  int dim() const { return potential.dim(); }
  // z has dN components for GL, y is scalar for NH, empty for KL.
  int aux_dim() const;
  // Number of standard normals consumed per Euler step.
  int noise_dim() const;
};

// Throws UsageError on parameter inconsistencies.
void check_process(const ProcessSpec& proc);

// Phase-space point (x, v, aux); also used for phase-space vectors (drift, gradients).
struct State {
  std::vector<double> x, v, aux;
};

State make_state(const ProcessSpec& proc);
void check_state(const ProcessSpec& proc, const State& s);

ExtReal hamiltonian(const ProcessSpec& proc, const State& s);
State drift(const ProcessSpec& proc, const State& s);
// Allocation-free variant; out must be shaped like s and gradV holds grad V(s.x).
void drift_into(const ProcessSpec& proc, const State& s, std::span<const double> gradV, State& out);

struct NoiseLayout {
  double v_amplitude = 0.0;    // sqrt(2 gamma)
  double aux_amplitude = 0.0;  // sqrt(2 alpha) on z for GL, 0 otherwise
  int v_dim = 0;
  int aux_dim = 0;
};
NoiseLayout diffusion_map(const ProcessSpec& proc);

// Exact first derivatives plus the Laplacians over the noise blocks.
struct FieldDerivatives {
  double value = 0.0;
  State grad;
  double lap_v = 0.0;
  double lap_aux = 0.0;
};

// Scalar observable described by callables.
struct ScalarField {
  std::function<double(const State&)> value;
  std::function<State(const State&)> gradient;
  std::function<double(const State&)> lap_v;
  std::function<double(const State&)> lap_aux;  // needed for GL only
};

double apply_generator(const ProcessSpec& proc, const FieldDerivatives& d, const State& s);
double apply_generator(const ProcessSpec& proc, const ScalarField& f, const State& s);
// Carre du champ over the noise blocks: gamma|grad_v f|^2 + alpha|grad_z f|^2 (GL), gamma|grad_v f|^2 otherwise.
double carre_du_champ(const ProcessSpec& proc, const FieldDerivatives& d);

// Central finite-difference adapter for ad-hoc observables.
ScalarField finite_difference_field(std::function<double(const State&)> f, double h = 1e-4);

// Exact derivatives of H (used for identities and exit bounds).
FieldDerivatives hamiltonian_derivatives(const ProcessSpec& proc, const State& s);

// Constant c with L H <= c H for H >= 1, and its derivation.
struct GrowthConstant {
  double c;
  std::string derivation;
};
GrowthConstant energy_growth_constant(const ProcessSpec& proc);

}  // namespace qsdlab
