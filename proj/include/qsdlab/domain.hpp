#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "qsdlab/potentials.hpp"
#include "qsdlab/rng.hpp"

namespace qsdlab {

// Open position set O; the absorbing domain is D = O x R^m.
struct DomainSpec {
  enum class Shape { Whole, Ball, Box, Sublevel, Complement, Intersection, Union };
  Shape shape = Shape::Whole;
  std::vector<double> center;
  double radius = 0.0;
  std::vector<double> lo, hi;
  // Sublevel {g < threshold}; an empty g means g = V.
  std::function<double(std::span<const double>)> g;
  double threshold = 0.0;
  std::vector<DomainSpec> parts;

  static DomainSpec whole();
  static DomainSpec ball(std::vector<double> center, double radius);
  static DomainSpec box(std::vector<double> lo, std::vector<double> hi);
  static DomainSpec sublevel(double threshold, std::function<double(std::span<const double>)> g = {});
  static DomainSpec complement(DomainSpec d);
  static DomainSpec intersection(std::vector<DomainSpec> parts);
  static DomainSpec union_of(std::vector<DomainSpec> parts);

  // Shape membership only.
  bool shape_contains(const PotentialSpec& pot, std::span<const double> x) const;
  // x in O and x in O_V.
  bool contains(const PotentialSpec& pot, std::span<const double> x) const;
  bool bounded() const;
  // Axis box enclosing O (falls back to [-fallback, fallback] for unbounded shapes).
  void bounding_box(const PotentialSpec& pot, double fallback, std::vector<double>& lo,
                    std::vector<double>& hi) const;
};

struct DomainCheck {
  bool nonempty = false;
  int samples_in_O = 0;
  int samples_outside_OV = 0;  // points of O not in O_V
  bool witness_ok = false;
  std::vector<double> interior_point;
  std::string message;
};

// Spot-checks O nonempty, O inside O_V, and the witness lying outside closure(O).
DomainCheck check_domain(const DomainSpec& dom, const PotentialSpec& pot, std::span<const double> witness,
                         std::uint64_t seed, int n_samples = 20000, double fallback = 10.0);

// Throws UsageError when the domain is empty or the witness is not admissible.
void require_valid_domain(const DomainSpec& dom, const PotentialSpec& pot, std::span<const double> witness,
                          std::uint64_t seed);

}  // namespace qsdlab
