#pragma once

#include <span>
#include <vector>

#include "qsdlab/lyapunov.hpp"

namespace qsdlab::detail {

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}
inline double norm2(std::span<const double> a) { return dot(a, a); }

FieldDerivatives gl_regular_derivatives(const GLRegularParams& p, const ProcessSpec& proc, const State& s);
FieldDerivatives gl_singular_derivatives(const GLSingularParams& p, const ProcessSpec& proc, const State& s);
FieldDerivatives nh_derivatives(const NHParams& p, const ProcessSpec& proc, const State& s);

std::vector<Inequality> gl_regular_inequalities(const GLRegularParams& p, const ProcessSpec& proc);
std::vector<Inequality> gl_singular_inequalities(const GLSingularParams& p, const ProcessSpec& proc);
std::vector<Inequality> nh_inequalities(const NHParams& p, const ProcessSpec& proc);

GLRegularParams select_gl_regular(const ProcessSpec& proc, double delta, const SelectOptions& opt);
GLSingularParams select_gl_singular(const ProcessSpec& proc, double delta, const SelectOptions& opt);
NHParams select_nh(const ProcessSpec& proc, double delta, const SelectOptions& opt);

// Largest drift ratio over n samples of the energy slab [H0, 10 H0]; non-finite counts as +inf.
double max_ratio_on_shell(const LyapunovParams& p, const ProcessSpec& proc, double H0, int n,
                          std::uint64_t seed);
// 1.05 * sup F/H over states drawn from energy slabs spanning [1, 1e6].
double upper_constant(const LyapunovParams& p, const ProcessSpec& proc, std::uint64_t seed);

// Growth data of a [V poly-x^k] potential: declared constants, or derived ones for built-in kinds.
struct PolyGrowth {
  double k, c_V, M_V;
};
PolyGrowth poly_growth(const PotentialSpec& pot);

// Throws InfeasibleError "<condition>: <detail>" for the first non-positive margin.
void require_all(const std::vector<Inequality>& ineq, const char* context);
bool all_hold(const std::vector<Inequality>& ineq);

}  // namespace qsdlab::detail
