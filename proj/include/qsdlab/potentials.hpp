#pragma once

#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qsdlab/rng.hpp"

namespace qsdlab {

// A value that is either a finite/overflowed real or "outside O_V".
// Overflow (+inf from arithmetic) and "outside" are distinct.
class ExtReal {
 public:
  constexpr ExtReal() = default;
  constexpr explicit ExtReal(double v) : value_(v) {}
  static constexpr ExtReal outside() {
    ExtReal r;
    r.outside_ = true;
    r.value_ = std::numeric_limits<double>::infinity();
    return r;
  }
  constexpr bool is_outside() const { return outside_; }
  // Throws DomainError when outside.
  double value() const;
  // +inf when outside.
  constexpr double or_infinity() const { return value_; }

 private:
  double value_ = 0.0;
  bool outside_ = false;
};

enum class PotentialKind { Quadratic, PolyConfining, SingularComposite, Custom };
enum class PhiKind { None, LennardJonesTail, CoulombOnly, CustomSymmetric };

// User-supplied radial-free tail Phi(y) for CustomSymmetric interactions.
struct CustomPhi {
  std::function<double(std::span<const double>)> value;
  std::function<void(std::span<const double>, std::span<double>)> grad;
};

// V_I(y) = B/|y|^beta + Phi(y).
struct InteractionSpec {
  double B = 1.0;
  double beta = 12.0;
  PhiKind phi_kind = PhiKind::None;
  // LennardJonesTail: Phi = -phi_c/|y|^6.  CoulombOnly: Phi = 0 (the singular
  // part is B/|y|^beta with beta = 1 typically).
  double phi_c = 0.0;
  std::shared_ptr<CustomPhi> custom;
  // Declared gradient-growth metadata: |grad Phi| <= C_phi/|y|^q_phi + c_phi.
  double q_phi = 0.0;
  double r_phi = 1.0;
  double C_phi = 0.0;
  double c_phi = 0.0;
};

// V_p(x) = A (1 - |x-c|^2/rho^2)^4 on the ball |x-c| < rho, zero outside.
struct BumpPerturbation {
  double amplitude = 0.0;
  std::vector<double> center;
  double radius = 1.0;
};

struct CustomPotential {
  std::function<double(std::span<const double>)> value;  // +inf outside O_V
  std::function<void(std::span<const double>, std::span<double>)> grad;
  // Optional Hessian-vector product; finite differences of grad otherwise.
  std::function<void(std::span<const double>, std::span<const double>, std::span<double>)> hessvec;
};

// Declared constants of the growth sandwich c_V|x|^k <= V <= M_V|x|^k for |x| >= r_V.
struct PolyConstants {
  double c_V = 0.0;
  double M_V = 0.0;
  double r_V = 0.0;
};

struct PotentialSpec {
  PotentialKind kind = PotentialKind::Quadratic;
  int dim_d = 1;
  int n_particles = 1;
  double quadratic_a0 = 1.0;
  // PolyConfining: V = floor + poly_c (|x|^2 + eps^2)^{k/2} on the full vector x.
  double poly_k = 2.0;
  double poly_c = 1.0;
  double poly_eps = 1e-8;
  std::optional<InteractionSpec> interaction;
  std::optional<BumpPerturbation> perturbation;
  double floor = 1.0;
  PolyConstants poly_constants;
  std::shared_ptr<CustomPotential> custom;

  int dim() const { return dim_d * n_particles; }
  bool has_pairs() const { return kind == PotentialKind::SingularComposite && interaction && n_particles >= 2; }
};

ExtReal eval_potential(const PotentialSpec& spec, std::span<const double> x);
// Writes grad V(x) into g. Throws DomainError outside O_V.
void grad_potential(const PotentialSpec& spec, std::span<const double> x, std::span<double> g);
std::vector<double> grad_potential(const PotentialSpec& spec, std::span<const double> x);
// Writes Hess V(x) u into out (analytic for built-in kinds).
void hessian_vector(const PotentialSpec& spec, std::span<const double> x,
                    std::span<const double> u, std::span<double> out);
// Full Hessian by central differences of the analytic gradient, row-major dim x dim.
std::vector<double> fd_hessian(const PotentialSpec& spec, std::span<const double> x, double rel_h = 1e-5);

bool in_admissible_set(const PotentialSpec& spec, std::span<const double> x);
// Smallest pair distance min_{i<j}|x^i - x^j|, +inf when N = 1.
double min_pair_distance(const PotentialSpec& spec, std::span<const double> x);

// Pair interaction V_I at separation vector y (length d).
double pair_value(const InteractionSpec& I, std::span<const double> y);
// Radial profile of the built-in interactions: V_I(r), V_I'(r), V_I''(r).
struct Radial {
  double f, df, d2f;
};
Radial pair_radial(const InteractionSpec& I, double r);

// Minimum of the pair profile over r > 0 (numerical for custom tails).
double pair_minimum(const InteractionSpec& I, int dim_d);

// Floor such that V >= 1 everywhere on O_V.
double auto_floor(const PotentialSpec& spec);

// Throws UsageError describing the first structural inconsistency.
void check_potential(const PotentialSpec& spec);

enum class AssumptionId { VLoc, VPolyXk, VCoercive, V2, VInt, VSing1, VSing2 };
AssumptionId parse_assumption_id(const std::string& name);
std::string to_string(AssumptionId id);

struct SamplingPlan {
  double r_min = 2.0;
  double r_max = 100.0;
  int n_radii = 40;
  int n_directions = 16;
  // Collision paths for pair potentials: separation radii from sep_max down to sep_min.
  double sep_max = 1.0;
  double sep_min = 1e-2;
  std::uint64_t seed = 1;
  // [V poly-x^k] with gamma = 0 additionally needs |grad V| <= M_V |x|^{k-1}.
  bool require_gradient_bound = false;
  // [V sing2] exponents.
  double zeta = 1.5;
  double delta = 1.0;
};

struct CheckResult {
  std::string name;
  double worst_margin = 0.0;  // >= 0 means satisfied at every sample
  bool passed = false;
  std::string detail;
};

struct ValidationReport {
  AssumptionId id;
  std::vector<CheckResult> checks;
  bool passed = false;
  int n_samples = 0;
};

ValidationReport validate_assumptions(const PotentialSpec& spec, AssumptionId which,
                                      const SamplingPlan& plan);

}  // namespace qsdlab
