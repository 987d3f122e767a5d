#include "qsdlab/cutoffs.hpp"

#include <cmath>

#include "qsdlab/errors.hpp"

namespace qsdlab {

Jet smoothstep(double t) {
  if (t <= 0.0) return {0.0, 0.0, 0.0};
  if (t >= 1.0) return {1.0, 0.0, 0.0};
  const double t2 = t * t;
  return {t2 * t * (10.0 - 15.0 * t + 6.0 * t2), 30.0 * t2 * (1.0 - t) * (1.0 - t),
          60.0 * t * (1.0 - t) * (1.0 - 2.0 * t)};
}

Cutoff::Cutoff(Kind kind, double a, double b) : kind_(kind), a_(a), b_(b) {
  if (!(b > a)) throw UsageError("cutoff gate interval is inverted");
  if ((kind == Kind::BandInside || kind == Kind::BandOutside) && !(a >= 0))
    throw UsageError("band cutoff needs 0 <= inner radius");
}

Jet Cutoff::operator()(double z) const {
  const double w = b_ - a_;
  auto up = [&](double u) {
    Jet s = smoothstep((u - a_) / w);
    return Jet{s.f, s.d1 / w, s.d2 / (w * w)};
  };
  switch (kind_) {
    case Kind::StepUp: return up(z);
    case Kind::StepDown: {
      Jet s = up(z);
      return {1.0 - s.f, -s.d1, -s.d2};
    }
    case Kind::BandOutside:
    case Kind::BandInside: {
      const double sg = z < 0 ? -1.0 : 1.0;
      Jet s = up(std::abs(z));
      Jet r{s.f, sg * s.d1, s.d2};
      if (kind_ == Kind::BandInside) r = {1.0 - r.f, -r.d1, -r.d2};
      return r;
    }
  }
  return {};
}

CutoffFamily build_cutoffs(double k_star, double y_star, double R1) {
  using K = Cutoff::Kind;
  return {Cutoff(K::StepDown, -1.0, 0.0),           Cutoff(K::StepDown, k_star, k_star + 1.0),
          Cutoff(K::BandInside, 1.0, 2.0),           Cutoff(K::BandOutside, 1.0, 2.0),
          Cutoff(K::StepDown, -y_star - 1.0, -y_star), Cutoff(K::BandInside, 3.0, 4.0),
          Cutoff(K::StepUp, R1 - 1.0, R1),           Cutoff(K::StepUp, 1.0, 2.0)};
}

}  // namespace qsdlab
