#pragma once

namespace qsdlab {

// Quintic smoothstep S(t) = t^3 (10 - 15 t + 6 t^2) on [0, 1]; max S' = 15/8.
struct Jet {
  double f = 0.0, d1 = 0.0, d2 = 0.0;
};
Jet smoothstep(double t);

class Cutoff {
 public:
  enum class Kind { StepDown, StepUp, BandInside, BandOutside };
  Cutoff() = default;
  // StepDown: 1 for z <= a, 0 for z >= b.   StepUp: 0 for z <= a, 1 for z >= b.
  // BandInside: 1 for |z| <= a, 0 for |z| >= b.   BandOutside: 0 for |z| <= a, 1 for |z| >= b.
  Cutoff(Kind kind, double a, double b);
  Jet operator()(double z) const;
  double value(double z) const { return (*this)(z).f; }
  Kind kind() const { return kind_; }
  double a() const { return a_; }
  double b() const { return b_; }

 private:
  Kind kind_ = Kind::StepDown;
  double a_ = 0.0, b_ = 1.0;
};

struct CutoffFamily {
  Cutoff f0, f1, f2, f3, h1, h3, hR, h0;
};

// Gates of the Nose-Hoover construction: f0 on [-1, 0], f1 at k*, f2/f3 bands [1, 2],
// h1 at -y*, h3 band [3, 4], hR at R1, h0 ramp [1, 2].
CutoffFamily build_cutoffs(double k_star, double y_star, double R1);

}  // namespace qsdlab
