#include "qsdlab/domain.hpp"

#include <algorithm>
#include <cmath>

#include "qsdlab/errors.hpp"

namespace qsdlab {

DomainSpec DomainSpec::whole() { return {}; }

DomainSpec DomainSpec::ball(std::vector<double> c, double r) {
  if (!(r > 0)) throw UsageError("ball radius must be positive");
  DomainSpec d;
  d.shape = Shape::Ball;
  d.center = std::move(c);
  d.radius = r;
  return d;
}

DomainSpec DomainSpec::box(std::vector<double> lo, std::vector<double> hi) {
  if (lo.size() != hi.size()) throw UsageError("box bounds have different dimensions");
  for (std::size_t i = 0; i < lo.size(); ++i)
    if (!(lo[i] < hi[i])) throw UsageError("box needs lo < hi in every coordinate");
  DomainSpec d;
  d.shape = Shape::Box;
  d.lo = std::move(lo);
  d.hi = std::move(hi);
  return d;
}

DomainSpec DomainSpec::sublevel(double threshold, std::function<double(std::span<const double>)> g) {
  DomainSpec d;
  d.shape = Shape::Sublevel;
  d.threshold = threshold;
  d.g = std::move(g);
  return d;
}

DomainSpec DomainSpec::complement(DomainSpec inner) {
  DomainSpec d;
  d.shape = Shape::Complement;
  d.parts.push_back(std::move(inner));
  return d;
}

DomainSpec DomainSpec::intersection(std::vector<DomainSpec> parts) {
  if (parts.empty()) throw UsageError("intersection of no domains");
  DomainSpec d;
  d.shape = Shape::Intersection;
  d.parts = std::move(parts);
  return d;
}

DomainSpec DomainSpec::union_of(std::vector<DomainSpec> parts) {
  if (parts.empty()) throw UsageError("union of no domains");
  DomainSpec d;
  d.shape = Shape::Union;
  d.parts = std::move(parts);
  return d;
}

bool DomainSpec::shape_contains(const PotentialSpec& pot, std::span<const double> x) const {
  switch (shape) {
    case Shape::Whole: return true;
    case Shape::Ball: {
      double s = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) s += (x[i] - center[i]) * (x[i] - center[i]);
      return s < radius * radius;
    }
    case Shape::Box:
      for (std::size_t i = 0; i < x.size(); ++i)
        if (!(x[i] > lo[i] && x[i] < hi[i])) return false;
      return true;
    case Shape::Sublevel: {
      const double v = g ? g(x) : eval_potential(pot, x).or_infinity();
      return v < threshold;
    }
    case Shape::Complement: return !parts[0].shape_contains(pot, x);
    case Shape::Intersection:
      for (const auto& p : parts)
        if (!p.shape_contains(pot, x)) return false;
      return true;
    case Shape::Union:
      for (const auto& p : parts)
        if (p.shape_contains(pot, x)) return true;
      return false;
  }
  return false;
}

bool DomainSpec::contains(const PotentialSpec& pot, std::span<const double> x) const {
  if (!shape_contains(pot, x)) return false;
  if (pot.has_pairs() || pot.kind == PotentialKind::Custom) return in_admissible_set(pot, x);
  return true;
}

bool DomainSpec::bounded() const {
  switch (shape) {
    case Shape::Ball:
    case Shape::Box: return true;
    case Shape::Sublevel: return !g;  // V is coercive
    case Shape::Whole:
    case Shape::Complement: return false;
    case Shape::Intersection:
      return std::any_of(parts.begin(), parts.end(), [](const DomainSpec& p) { return p.bounded(); });
    case Shape::Union:
      return std::all_of(parts.begin(), parts.end(), [](const DomainSpec& p) { return p.bounded(); });
  }
  return false;
}

void DomainSpec::bounding_box(const PotentialSpec& pot, double fallback, std::vector<double>& l,
                              std::vector<double>& h) const {
  const int n = pot.dim();
  l.assign(n, -fallback);
  h.assign(n, fallback);
  switch (shape) {
    case Shape::Ball:
      for (int i = 0; i < n; ++i) {
        l[i] = center[i] - radius;
        h[i] = center[i] + radius;
      }
      break;
    case Shape::Box:
      l = lo;
      h = hi;
      break;
    case Shape::Sublevel:
      if (!g) {
        // Coercive V: grow a radius until V exceeds the threshold along the axes and diagonals.
        double r = 1.0;
        auto exceeds = [&](double rr) {
          std::vector<double> x(n);
          for (int k = 0; k < 2 * n + 2; ++k) {
            std::fill(x.begin(), x.end(), 0.0);
            if (k < 2 * n) x[k / 2] = (k % 2 ? -rr : rr);
            else
              for (int i = 0; i < n; ++i) x[i] = (k % 2 ? -rr : rr) / std::sqrt(double(n));
            if (eval_potential(pot, x).or_infinity() < threshold) return false;
          }
          return true;
        };
        while (!exceeds(r) && r < 1e6) r *= 2.0;
        l.assign(n, -2.0 * r);
        h.assign(n, 2.0 * r);
      }
      break;
    case Shape::Intersection: {
      for (const auto& p : parts) {
        if (!p.bounded()) continue;
        std::vector<double> pl, ph;
        p.bounding_box(pot, fallback, pl, ph);
        for (int i = 0; i < n; ++i) {
          l[i] = std::max(l[i], pl[i]);
          h[i] = std::min(h[i], ph[i]);
        }
      }
      break;
    }
    case Shape::Union: {
      if (!bounded()) break;
      l.assign(n, 1e300);
      h.assign(n, -1e300);
      for (const auto& p : parts) {
        std::vector<double> pl, ph;
        p.bounding_box(pot, fallback, pl, ph);
        for (int i = 0; i < n; ++i) {
          l[i] = std::min(l[i], pl[i]);
          h[i] = std::max(h[i], ph[i]);
        }
      }
      break;
    }
    default: break;
  }
}

DomainCheck check_domain(const DomainSpec& dom, const PotentialSpec& pot, std::span<const double> witness,
                         std::uint64_t seed, int n_samples, double fallback) {
  DomainCheck out;
  const int n = pot.dim();
  std::vector<double> lo, hi;
  dom.bounding_box(pot, fallback, lo, hi);
  for (int i = 0; i < n; ++i)
    if (!(lo[i] < hi[i])) {
      out.message = "domain bounding box is empty";
      return out;
    }
  RngStream rng = StreamFactory(seed).stream("domain.check", 0);
  std::vector<double> x(n);
  for (int k = 0; k < n_samples; ++k) {
    for (int i = 0; i < n; ++i) x[i] = lo[i] + (hi[i] - lo[i]) * rng.uniform();
    if (!dom.shape_contains(pot, x)) continue;
    ++out.samples_in_O;
    if (!in_admissible_set(pot, x)) {
      ++out.samples_outside_OV;
      continue;
    }
    if (out.interior_point.empty()) out.interior_point = x;
  }
  out.nonempty = !out.interior_point.empty();
  if (!out.nonempty) out.message = "no sampled point lies in O (empty domain)";

  if (static_cast<int>(witness.size()) == n) {
    bool ok = in_admissible_set(pot, witness) && !dom.shape_contains(pot, witness);
    // A neighbourhood of the witness must avoid O, otherwise it may sit on the boundary.
    double scale = 1e-6;
    for (int i = 0; i < n; ++i) scale = std::max(scale, 1e-6 * std::abs(witness[i]));
    std::vector<double> y(n);
    for (int k = 0; ok && k < 64; ++k) {
      for (int i = 0; i < n; ++i) y[i] = witness[i] + scale * (2.0 * rng.uniform() - 1.0);
      if (dom.shape_contains(pot, y)) ok = false;
    }
    out.witness_ok = ok;
    if (!ok && out.message.empty()) out.message = "witness point is not in O_V minus closure(O)";
  } else if (out.message.empty()) {
    out.message = "witness point missing or of wrong dimension";
  }
  return out;
}

void require_valid_domain(const DomainSpec& dom, const PotentialSpec& pot, std::span<const double> witness,
                          std::uint64_t seed) {
  auto c = check_domain(dom, pot, witness, seed);
  if (!c.nonempty || !c.witness_ok) throw UsageError("domain rejected: " + c.message);
}

}  // namespace qsdlab
