#include "qsdlab/processes.hpp"

#include <cmath>

#include "qsdlab/errors.hpp"

namespace qsdlab {

std::string to_string(Family f) {
  switch (f) {
    case Family::KineticLangevin: return "kinetic-langevin";
    case Family::GeneralizedLangevin: return "generalized-langevin";
    case Family::NoseHoover: return "nose-hoover";
  }
  return "?";
}

Family parse_family(const std::string& name) {
  if (name == "kinetic-langevin" || name == "KL") return Family::KineticLangevin;
  if (name == "generalized-langevin" || name == "GL") return Family::GeneralizedLangevin;
  if (name == "nose-hoover" || name == "NH") return Family::NoseHoover;
  throw UsageError("unknown process family '" + name + "'");
}

int ProcessSpec::aux_dim() const {
  switch (family) {
    case Family::KineticLangevin: return 0;
    case Family::GeneralizedLangevin: return dim();
    case Family::NoseHoover: return 1;
  }
  return 0;
}

int ProcessSpec::noise_dim() const {
  return family == Family::GeneralizedLangevin ? 2 * dim() : dim();
}

void check_process(const ProcessSpec& proc) {
  check_potential(proc.potential);
  if (!(proc.gamma >= 0)) throw UsageError("friction gamma must be >= 0");
  if (proc.family == Family::NoseHoover && !(proc.gamma > 0))
    throw UsageError("Nose-Hoover dynamics require gamma > 0");
  if (proc.family == Family::GeneralizedLangevin && !(proc.lambda_c > 0 && proc.alpha_c > 0))
    throw UsageError("generalized Langevin dynamics require lambda > 0 and alpha > 0");
}

State make_state(const ProcessSpec& proc) {
  State s;
  s.x.assign(proc.dim(), 0.0);
  s.v.assign(proc.dim(), 0.0);
  s.aux.assign(proc.aux_dim(), 0.0);
  return s;
}

void check_state(const ProcessSpec& proc, const State& s) {
  if (static_cast<int>(s.x.size()) != proc.dim() || static_cast<int>(s.v.size()) != proc.dim())
    throw UsageError("state x/v dimension does not match dN");
  if (static_cast<int>(s.aux.size()) != proc.aux_dim())
    throw UsageError("auxiliary coordinates do not match the process family");
}

namespace {
double sq(std::span<const double> a) {
  double s = 0.0;
  for (double t : a) s += t * t;
  return s;
}
double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}
}  // namespace

ExtReal hamiltonian(const ProcessSpec& proc, const State& s) {
  check_state(proc, s);
  ExtReal V = eval_potential(proc.potential, s.x);
  if (V.is_outside()) return V;
  return ExtReal(V.or_infinity() + 0.5 * sq(s.v) + 0.5 * sq(s.aux));
}

void drift_into(const ProcessSpec& proc, const State& s, std::span<const double> gV, State& out) {
  const std::size_t n = s.x.size();
  const double g = proc.gamma;
  switch (proc.family) {
    case Family::KineticLangevin:
      for (std::size_t i = 0; i < n; ++i) {
        out.x[i] = s.v[i];
        out.v[i] = -gV[i] - g * s.v[i];
      }
      break;
    case Family::GeneralizedLangevin:
      for (std::size_t i = 0; i < n; ++i) {
        out.x[i] = s.v[i];
        out.v[i] = -gV[i] - g * s.v[i] + proc.lambda_c * s.aux[i];
        out.aux[i] = -proc.alpha_c * s.aux[i] - proc.lambda_c * s.v[i];
      }
      break;
    case Family::NoseHoover: {
      const double y = s.aux[0];
      for (std::size_t i = 0; i < n; ++i) {
        out.x[i] = s.v[i];
        out.v[i] = -gV[i] - g * s.v[i] - s.v[i] * y;
      }
      out.aux[0] = sq(s.v) - static_cast<double>(n);
      break;
    }
  }
}

State drift(const ProcessSpec& proc, const State& s) {
  check_state(proc, s);
  auto gV = grad_potential(proc.potential, s.x);
  State out = make_state(proc);
  drift_into(proc, s, gV, out);
  return out;
}

NoiseLayout diffusion_map(const ProcessSpec& proc) {
  NoiseLayout nl;
  nl.v_amplitude = std::sqrt(2.0 * proc.gamma);
  nl.v_dim = proc.dim();
  nl.aux_dim = proc.aux_dim();
  if (proc.family == Family::GeneralizedLangevin) nl.aux_amplitude = std::sqrt(2.0 * proc.alpha_c);
  return nl;
}

double apply_generator(const ProcessSpec& proc, const FieldDerivatives& d, const State& s) {
  const auto gV = grad_potential(proc.potential, s.x);
  const std::size_t n = s.x.size();
  const double g = proc.gamma;
  double out = dot(s.v, d.grad.x);
  switch (proc.family) {
    case Family::KineticLangevin:
      for (std::size_t i = 0; i < n; ++i) out += (-g * s.v[i] - gV[i]) * d.grad.v[i];
      out += g * d.lap_v;
      break;
    case Family::GeneralizedLangevin:
      for (std::size_t i = 0; i < n; ++i) {
        out += (-g * s.v[i] - gV[i] + proc.lambda_c * s.aux[i]) * d.grad.v[i];
        out -= (proc.alpha_c * s.aux[i] + proc.lambda_c * s.v[i]) * d.grad.aux[i];
      }
      out += g * d.lap_v + proc.alpha_c * d.lap_aux;
      break;
    case Family::NoseHoover: {
      const double y = s.aux[0];
      for (std::size_t i = 0; i < n; ++i) out += (-(y + g) * s.v[i] - gV[i]) * d.grad.v[i];
      out += g * d.lap_v + (sq(s.v) - static_cast<double>(n)) * d.grad.aux[0];
      break;
    }
  }
  return out;
}

double apply_generator(const ProcessSpec& proc, const ScalarField& f, const State& s) {
  if (!f.gradient || !f.lap_v) throw UsageError("observable lacks gradient or Laplacian callables");
  if (proc.family == Family::GeneralizedLangevin && !f.lap_aux)
    throw UsageError("observable lacks the auxiliary-block Laplacian required by GL");
  check_state(proc, s);
  FieldDerivatives d;
  d.grad = f.gradient(s);
  d.lap_v = f.lap_v(s);
  d.lap_aux = f.lap_aux ? f.lap_aux(s) : 0.0;
  return apply_generator(proc, d, s);
}

double carre_du_champ(const ProcessSpec& proc, const FieldDerivatives& d) {
  double out = proc.gamma * sq(d.grad.v);
  if (proc.family == Family::GeneralizedLangevin) out += proc.alpha_c * sq(d.grad.aux);
  return out;
}

ScalarField finite_difference_field(std::function<double(const State&)> f, double h) {
  ScalarField sf;
  sf.value = f;
  auto block_pass = [f, h](const State& s, auto member, bool second) {
    State t = s;
    std::vector<double> first((s.*member).size());
    double lap = 0.0;
    const double f0 = second ? f(s) : 0.0;
    for (std::size_t i = 0; i < (s.*member).size(); ++i) {
      const double c = (s.*member)[i];
      (t.*member)[i] = c + h;
      const double fp = f(t);
      (t.*member)[i] = c - h;
      const double fm = f(t);
      (t.*member)[i] = c;
      first[i] = (fp - fm) / (2 * h);
      lap += (fp - 2 * f0 + fm) / (h * h);
    }
    return std::pair{first, lap};
  };
  sf.gradient = [block_pass](const State& s) {
    State g;
    g.x = block_pass(s, &State::x, false).first;
    g.v = block_pass(s, &State::v, false).first;
    g.aux = block_pass(s, &State::aux, false).first;
    return g;
  };
  sf.lap_v = [block_pass](const State& s) { return block_pass(s, &State::v, true).second; };
  sf.lap_aux = [block_pass](const State& s) { return block_pass(s, &State::aux, true).second; };
  return sf;
}

FieldDerivatives hamiltonian_derivatives(const ProcessSpec& proc, const State& s) {
  FieldDerivatives d;
  d.value = hamiltonian(proc, s).value();
  d.grad.x = grad_potential(proc.potential, s.x);
  d.grad.v = s.v;
  d.grad.aux = s.aux;
  d.lap_v = static_cast<double>(s.v.size());
  d.lap_aux = proc.family == Family::GeneralizedLangevin ? static_cast<double>(s.aux.size()) : 0.0;
  return d;
}

GrowthConstant energy_growth_constant(const ProcessSpec& proc) {
  const double n = proc.dim();
  switch (proc.family) {
    case Family::KineticLangevin:
      return {proc.gamma * n, "L H = -gamma|v|^2 + gamma dN <= gamma dN <= gamma dN H since H >= 1"};
    case Family::GeneralizedLangevin:
      return {(proc.gamma + proc.alpha_c) * n,
              "L H = -gamma|v|^2 - alpha|z|^2 + (gamma+alpha) dN <= (gamma+alpha) dN H since H >= 1"};
    case Family::NoseHoover:
      return {(proc.gamma + 1.0) * n,
              "L H = -y dN - gamma|v|^2 + gamma dN <= |y| dN + gamma dN; |y| <= (1+y^2)/2 <= H and 1 <= H, "
              "so L H <= (gamma+1) dN H"};
  }
  return {0.0, ""};
}

}  // namespace qsdlab
