#include "qsdlab/potentials.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "qsdlab/errors.hpp"

namespace qsdlab {

double ExtReal::value() const {
  if (outside_) throw DomainError("position outside the admissible set O_V");
  return value_;
}

namespace {

void check_dim(const PotentialSpec& spec, std::size_t n) {
  if (static_cast<int>(n) != spec.dim())
    throw UsageError("position has dimension " + std::to_string(n) + ", expected dN = " +
                     std::to_string(spec.dim()));
}

double norm2(std::span<const double> x) {
  double s = 0.0;
  for (double xi : x) s += xi * xi;
  return s;
}

double bump_value(const BumpPerturbation& p, std::span<const double> x) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += (x[i] - p.center[i]) * (x[i] - p.center[i]);
  double w = 1.0 - s / (p.radius * p.radius);
  if (w <= 0.0) return 0.0;
  return p.amplitude * w * w * w * w;
}

void bump_grad_add(const BumpPerturbation& p, std::span<const double> x, std::span<double> g) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += (x[i] - p.center[i]) * (x[i] - p.center[i]);
  const double rho2 = p.radius * p.radius;
  double w = 1.0 - s / rho2;
  if (w <= 0.0) return;
  const double c = -8.0 * p.amplitude * w * w * w / rho2;
  for (std::size_t i = 0; i < x.size(); ++i) g[i] += c * (x[i] - p.center[i]);
}

void bump_hessvec_add(const BumpPerturbation& p, std::span<const double> x,
                      std::span<const double> u, std::span<double> out) {
  double s = 0.0, du = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double di = x[i] - p.center[i];
    s += di * di;
    du += di * u[i];
  }
  const double rho2 = p.radius * p.radius;
  double w = 1.0 - s / rho2;
  if (w <= 0.0) return;
  const double c_outer = 48.0 * p.amplitude * w * w / (rho2 * rho2);
  const double c_id = -8.0 * p.amplitude * w * w * w / rho2;
  for (std::size_t i = 0; i < x.size(); ++i)
    out[i] += c_outer * du * (x[i] - p.center[i]) + c_id * u[i];
}

// Sum over pairs i<j, calling fn(i, j, y = x^i - x^j, r).
template <class Fn>
void for_pairs(const PotentialSpec& spec, std::span<const double> x, std::vector<double>& y, Fn&& fn) {
  const int d = spec.dim_d;
  y.resize(d);
  for (int i = 0; i < spec.n_particles; ++i)
    for (int j = i + 1; j < spec.n_particles; ++j) {
      double r2 = 0.0;
      for (int a = 0; a < d; ++a) {
        y[a] = x[i * d + a] - x[j * d + a];
        r2 += y[a] * y[a];
      }
      fn(i, j, std::span<const double>(y), std::sqrt(r2));
    }
}

bool radial_interaction(const InteractionSpec& I) { return I.phi_kind != PhiKind::CustomSymmetric; }

}  // namespace

Radial pair_radial(const InteractionSpec& I, double r) {
  const double b = I.beta;
  const double rb = std::pow(r, -b);
  Radial out{I.B * rb, -b * I.B * rb / r, b * (b + 1.0) * I.B * rb / (r * r)};
  if (I.phi_kind == PhiKind::LennardJonesTail) {
    const double r6 = std::pow(r, -6.0);
    out.f -= I.phi_c * r6;
    out.df += 6.0 * I.phi_c * r6 / r;
    out.d2f -= 42.0 * I.phi_c * r6 / (r * r);
  }
  return out;
}

double pair_value(const InteractionSpec& I, std::span<const double> y) {
  const double r = std::sqrt(norm2(y));
  if (r == 0.0) return std::numeric_limits<double>::infinity();
  double v = I.B * std::pow(r, -I.beta);
  if (I.phi_kind == PhiKind::LennardJonesTail) v -= I.phi_c * std::pow(r, -6.0);
  if (I.phi_kind == PhiKind::CustomSymmetric) v += I.custom->value(y);
  return v;
}

namespace {

void pair_grad(const InteractionSpec& I, std::span<const double> y, double r, std::span<double> g) {
  if (radial_interaction(I)) {
    const double df = pair_radial(I, r).df;
    for (std::size_t a = 0; a < y.size(); ++a) g[a] = df * y[a] / r;
  } else {
    I.custom->grad(y, g);
    const double df = -I.beta * I.B * std::pow(r, -I.beta) / r;
    for (std::size_t a = 0; a < y.size(); ++a) g[a] += df * y[a] / r;
  }
}

// Hessian of V_I at y applied to w, written to out.
void pair_hessvec(const InteractionSpec& I, std::span<const double> y, double r,
                  std::span<const double> w, std::span<double> out) {
  const std::size_t d = y.size();
  InteractionSpec core = I;
  if (!radial_interaction(I)) core.phi_kind = PhiKind::None;
  const Radial rad = pair_radial(core, r);
  double yw = 0.0;
  for (std::size_t a = 0; a < d; ++a) yw += y[a] * w[a];
  yw /= r;
  for (std::size_t a = 0; a < d; ++a) {
    const double ya = y[a] / r;
    out[a] = rad.d2f * yw * ya + rad.df / r * (w[a] - yw * ya);
  }
  if (!radial_interaction(I)) {
    double wn = std::sqrt(norm2(w));
    if (wn == 0.0) return;
    const double h = 1e-6 * r / wn;
    std::vector<double> yp(y.begin(), y.end()), ym(y.begin(), y.end()), gp(d), gm(d);
    for (std::size_t a = 0; a < d; ++a) {
      yp[a] += h * w[a];
      ym[a] -= h * w[a];
    }
    I.custom->grad(yp, gp);
    I.custom->grad(ym, gm);
    for (std::size_t a = 0; a < d; ++a) out[a] += (gp[a] - gm[a]) / (2.0 * h);
  }
}

}  // namespace

double min_pair_distance(const PotentialSpec& spec, std::span<const double> x) {
  double best = std::numeric_limits<double>::infinity();
  if (spec.n_particles < 2) return best;
  const int d = spec.dim_d;
  for (int i = 0; i < spec.n_particles; ++i)
    for (int j = i + 1; j < spec.n_particles; ++j) {
      double r2 = 0.0;
      for (int a = 0; a < d; ++a) {
        const double t = x[i * d + a] - x[j * d + a];
        r2 += t * t;
      }
      best = std::min(best, std::sqrt(r2));
    }
  return best;
}

ExtReal eval_potential(const PotentialSpec& spec, std::span<const double> x) {
  check_dim(spec, x.size());
  double v = spec.floor;
  switch (spec.kind) {
    case PotentialKind::Quadratic:
      v += 0.5 * spec.quadratic_a0 * norm2(x);
      break;
    case PotentialKind::PolyConfining:
      v += spec.poly_c * std::pow(norm2(x) + spec.poly_eps * spec.poly_eps, 0.5 * spec.poly_k);
      break;
    case PotentialKind::SingularComposite: {
      v += 0.5 * spec.quadratic_a0 * norm2(x);
      if (spec.has_pairs()) {
        if (min_pair_distance(spec, x) == 0.0) return ExtReal::outside();
        std::vector<double> y;
        for_pairs(spec, x, y, [&](int, int, std::span<const double> yy, double) {
          v += pair_value(*spec.interaction, yy);
        });
      }
      break;
    }
    case PotentialKind::Custom: {
      const double c = spec.custom->value(x);
      if (std::isinf(c) && c > 0) return ExtReal::outside();
      v += c;
      break;
    }
  }
  if (spec.perturbation) v += bump_value(*spec.perturbation, x);
  if (std::isnan(v)) return ExtReal::outside();
  return ExtReal(v);
}

bool in_admissible_set(const PotentialSpec& spec, std::span<const double> x) {
  return !eval_potential(spec, x).is_outside();
}

void grad_potential(const PotentialSpec& spec, std::span<const double> x, std::span<double> g) {
  check_dim(spec, x.size());
  const std::size_t n = x.size();
  switch (spec.kind) {
    case PotentialKind::Quadratic:
      for (std::size_t i = 0; i < n; ++i) g[i] = spec.quadratic_a0 * x[i];
      break;
    case PotentialKind::PolyConfining: {
      const double s = norm2(x) + spec.poly_eps * spec.poly_eps;
      const double c = spec.poly_c * spec.poly_k * std::pow(s, 0.5 * spec.poly_k - 1.0);
      for (std::size_t i = 0; i < n; ++i) g[i] = c * x[i];
      break;
    }
    case PotentialKind::SingularComposite: {
      for (std::size_t i = 0; i < n; ++i) g[i] = spec.quadratic_a0 * x[i];
      if (spec.has_pairs()) {
        if (min_pair_distance(spec, x) == 0.0) throw DomainError("coincident particles: outside O_V");
        const int d = spec.dim_d;
        std::vector<double> y, gy(d);
        for_pairs(spec, x, y, [&](int i, int j, std::span<const double> yy, double r) {
          pair_grad(*spec.interaction, yy, r, gy);
          for (int a = 0; a < d; ++a) {
            g[i * d + a] += gy[a];
            g[j * d + a] -= gy[a];
          }
        });
      }
      break;
    }
    case PotentialKind::Custom:
      if (eval_potential(spec, x).is_outside()) throw DomainError("position outside O_V");
      spec.custom->grad(x, g);
      break;
  }
  if (spec.perturbation) bump_grad_add(*spec.perturbation, x, g);
}

std::vector<double> grad_potential(const PotentialSpec& spec, std::span<const double> x) {
  std::vector<double> g(x.size());
  grad_potential(spec, x, g);
  return g;
}

void hessian_vector(const PotentialSpec& spec, std::span<const double> x, std::span<const double> u,
                    std::span<double> out) {
  check_dim(spec, x.size());
  const std::size_t n = x.size();
  switch (spec.kind) {
    case PotentialKind::Quadratic:
      for (std::size_t i = 0; i < n; ++i) out[i] = spec.quadratic_a0 * u[i];
      break;
    case PotentialKind::PolyConfining: {
      const double s = norm2(x) + spec.poly_eps * spec.poly_eps;
      const double k = spec.poly_k;
      const double c1 = spec.poly_c * k * std::pow(s, 0.5 * k - 1.0);
      const double c2 = spec.poly_c * k * (k - 2.0) * std::pow(s, 0.5 * k - 2.0);
      double xu = 0.0;
      for (std::size_t i = 0; i < n; ++i) xu += x[i] * u[i];
      for (std::size_t i = 0; i < n; ++i) out[i] = c1 * u[i] + c2 * xu * x[i];
      break;
    }
    case PotentialKind::SingularComposite: {
      for (std::size_t i = 0; i < n; ++i) out[i] = spec.quadratic_a0 * u[i];
      if (spec.has_pairs()) {
        if (min_pair_distance(spec, x) == 0.0) throw DomainError("coincident particles: outside O_V");
        const int d = spec.dim_d;
        std::vector<double> y, w(d), hw(d);
        for_pairs(spec, x, y, [&](int i, int j, std::span<const double> yy, double r) {
          for (int a = 0; a < d; ++a) w[a] = u[i * d + a] - u[j * d + a];
          pair_hessvec(*spec.interaction, yy, r, w, hw);
          for (int a = 0; a < d; ++a) {
            out[i * d + a] += hw[a];
            out[j * d + a] -= hw[a];
          }
        });
      }
      break;
    }
    case PotentialKind::Custom: {
      if (spec.custom->hessvec) {
        spec.custom->hessvec(x, u, out);
        break;
      }
      const double un = std::sqrt(norm2(u));
      if (un == 0.0) {
        std::fill(out.begin(), out.end(), 0.0);
        break;
      }
      const double h = 1e-6 * std::max(1.0, std::sqrt(norm2(x))) / un;
      std::vector<double> xp(x.begin(), x.end()), xm(x.begin(), x.end()), gp(n), gm(n);
      for (std::size_t i = 0; i < n; ++i) {
        xp[i] += h * u[i];
        xm[i] -= h * u[i];
      }
      spec.custom->grad(xp, gp);
      spec.custom->grad(xm, gm);
      for (std::size_t i = 0; i < n; ++i) out[i] = (gp[i] - gm[i]) / (2.0 * h);
      break;
    }
  }
  if (spec.perturbation) bump_hessvec_add(*spec.perturbation, x, u, out);
}

std::vector<double> fd_hessian(const PotentialSpec& spec, std::span<const double> x, double rel_h) {
  const std::size_t n = x.size();
  double scale = std::max(1.0, std::sqrt(norm2(x)));
  scale = std::min(scale, min_pair_distance(spec, x));
  const double h = rel_h * scale;
  std::vector<double> H(n * n), xp(x.begin(), x.end()), gp(n), gm(n);
  for (std::size_t c = 0; c < n; ++c) {
    xp[c] = x[c] + h;
    grad_potential(spec, xp, gp);
    xp[c] = x[c] - h;
    grad_potential(spec, xp, gm);
    xp[c] = x[c];
    for (std::size_t r = 0; r < n; ++r) H[r * n + c] = (gp[r] - gm[r]) / (2.0 * h);
  }
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = r + 1; c < n; ++c) {
      const double m = 0.5 * (H[r * n + c] + H[c * n + r]);
      H[r * n + c] = H[c * n + r] = m;
    }
  return H;
}

double pair_minimum(const InteractionSpec& I, int dim_d) {
  auto profile = [&](double r) {
    if (radial_interaction(I)) return pair_radial(I, r).f;
    std::vector<double> y(dim_d, 0.0);
    y[0] = r;
    return pair_value(I, y);
  };
  double best = std::numeric_limits<double>::infinity(), best_r = 1.0;
  const int n = 4000;
  for (int i = 0; i <= n; ++i) {
    const double r = std::pow(10.0, -3.0 + 6.0 * i / n);
    const double f = profile(r);
    if (f < best) {
      best = f;
      best_r = r;
    }
  }
  // Golden-section refinement around the best grid point.
  double a = best_r * std::pow(10.0, -6.0 / n), b = best_r * std::pow(10.0, 6.0 / n);
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - g * (b - a), d = a + g * (b - a);
  for (int it = 0; it < 100; ++it) {
    if (profile(c) < profile(d)) b = d;
    else a = c;
    c = b - g * (b - a);
    d = a + g * (b - a);
  }
  return std::min(best, profile(0.5 * (a + b)));
}

double auto_floor(const PotentialSpec& spec) {
  double lowest = 0.0;
  if (spec.has_pairs()) {
    const double np = 0.5 * spec.n_particles * (spec.n_particles - 1);
    lowest += np * std::min(0.0, pair_minimum(*spec.interaction, spec.dim_d));
  }
  if (spec.perturbation) lowest += std::min(0.0, spec.perturbation->amplitude);
  return 1.0 - lowest;
}

void check_potential(const PotentialSpec& spec) {
  if (spec.dim_d < 1 || spec.n_particles < 1) throw UsageError("d and N must be positive");
  switch (spec.kind) {
    case PotentialKind::Quadratic:
      if (!(spec.quadratic_a0 > 0)) throw UsageError("quadratic confinement needs a0 > 0");
      break;
    case PotentialKind::PolyConfining:
      if (!(spec.poly_k > 1)) throw UsageError("polynomial growth exponent needs k > 1");
      if (!(spec.poly_c > 0)) throw UsageError("polynomial coefficient must be positive");
      break;
    case PotentialKind::SingularComposite:
      if (!(spec.quadratic_a0 > 0)) throw UsageError("quadratic confinement needs a0 > 0");
      if (spec.n_particles >= 2 && !spec.interaction)
        throw UsageError("singular composite potential with N >= 2 needs an interaction");
      if (spec.interaction) {
        const auto& I = *spec.interaction;
        if (!(I.B > 0) || !(I.beta > 0)) throw UsageError("interaction needs B > 0 and beta > 0");
        if (I.phi_kind == PhiKind::CustomSymmetric && (!I.custom || !I.custom->value || !I.custom->grad))
          throw UsageError("custom interaction tail needs value and gradient callables");
      }
      break;
    case PotentialKind::Custom:
      if (!spec.custom || !spec.custom->value || !spec.custom->grad)
        throw UsageError("custom potential needs value and gradient callables");
      break;
  }
  if (spec.perturbation) {
    const auto& p = *spec.perturbation;
    if (static_cast<int>(p.center.size()) != spec.dim())
      throw UsageError("perturbation center must have dimension dN");
    if (!(p.radius > 0)) throw UsageError("perturbation radius must be positive");
  }
}

// ---------------------------------------------------------------- validators

AssumptionId parse_assumption_id(const std::string& name) {
  if (name == "V-loc") return AssumptionId::VLoc;
  if (name == "V-poly") return AssumptionId::VPolyXk;
  if (name == "V-coercive") return AssumptionId::VCoercive;
  if (name == "V-2") return AssumptionId::V2;
  if (name == "V-int") return AssumptionId::VInt;
  if (name == "V-sing1") return AssumptionId::VSing1;
  if (name == "V-sing2") return AssumptionId::VSing2;
  throw UsageError("unknown assumption id '" + name +
                   "' (expected V-loc, V-poly, V-coercive, V-2, V-int, V-sing1, V-sing2)");
}

std::string to_string(AssumptionId id) {
  switch (id) {
    case AssumptionId::VLoc: return "V-loc";
    case AssumptionId::VPolyXk: return "V-poly";
    case AssumptionId::VCoercive: return "V-coercive";
    case AssumptionId::V2: return "V-2";
    case AssumptionId::VInt: return "V-int";
    case AssumptionId::VSing1: return "V-sing1";
    case AssumptionId::VSing2: return "V-sing2";
  }
  return "?";
}

namespace {

std::vector<double> random_unit(RngStream& rng, int n) {
  std::vector<double> u(n);
  double s;
  do {
    s = 0.0;
    for (auto& ui : u) {
      ui = rng.normal();
      s += ui * ui;
    }
  } while (s == 0.0);
  s = std::sqrt(s);
  for (auto& ui : u) ui /= s;
  return u;
}

std::vector<double> geometric(double a, double b, int n) {
  std::vector<double> r(n);
  for (int i = 0; i < n; ++i) r[i] = a * std::pow(b / a, n == 1 ? 0.0 : double(i) / (n - 1));
  return r;
}

struct Sequence {
  std::vector<std::vector<double>> points;  // V increases along the sequence
  std::string label;
};

// Rays to infinity and, for pair potentials, straight paths into a pair collision.
std::vector<Sequence> divergent_sequences(const PotentialSpec& spec, const SamplingPlan& plan,
                                          bool with_rays, bool with_collisions) {
  RngStream rng = StreamFactory(plan.seed).stream("potentials.sequences", 0);
  std::vector<Sequence> out;
  const int n = spec.dim();
  if (with_rays) {
    for (int k = 0; k < plan.n_directions; ++k) {
      auto u = random_unit(rng, n);
      Sequence s;
      s.label = "ray " + std::to_string(k);
      for (double r : geometric(plan.r_min, plan.r_max, plan.n_radii)) {
        std::vector<double> x(n);
        for (int i = 0; i < n; ++i) x[i] = r * u[i];
        s.points.push_back(std::move(x));
      }
      out.push_back(std::move(s));
    }
  }
  if (with_collisions && spec.has_pairs()) {
    const int d = spec.dim_d;
    for (int k = 0; k < plan.n_directions; ++k) {
      // Spread spectator particles so that only the pair (0, 1) collides.
      std::vector<double> base(n);
      for (int i = 0; i < spec.n_particles; ++i)
        for (int a = 0; a < d; ++a) base[i * d + a] = (a == 0 ? 3.0 * i : 0.0) + 0.3 * rng.normal();
      auto u = random_unit(rng, d);
      Sequence s;
      s.label = "collision " + std::to_string(k);
      for (double sep : geometric(plan.sep_max, plan.sep_min, plan.n_radii)) {
        std::vector<double> x = base;
        for (int a = 0; a < d; ++a) x[d + a] = x[a] + sep * u[a];
        s.points.push_back(std::move(x));
      }
      out.push_back(std::move(s));
    }
  }
  return out;
}

CheckResult ray_coercivity(const PotentialSpec& spec, const std::vector<Sequence>& seqs, int& count) {
  CheckResult c{"V eventually increasing and unbounded along divergent paths", 1e300, true, ""};
  for (const auto& s : seqs) {
    std::vector<double> vals;
    for (const auto& x : s.points) vals.push_back(eval_potential(spec, x).or_infinity());
    count += static_cast<int>(vals.size());
    const std::size_t start = vals.size() / 2;
    bool mono = true;
    for (std::size_t i = start + 1; i < vals.size(); ++i) mono = mono && vals[i] > vals[i - 1];
    // From the path minimum: a ray through a pair collision starts high.
    const double growth = vals.back() / std::max(*std::min_element(vals.begin(), vals.end()), 1e-300);
    const double margin = mono ? std::log10(growth) : -1.0;
    if (margin < c.worst_margin) {
      c.worst_margin = margin;
      c.detail = s.label;
    }
    if (!mono || growth < 10.0) c.passed = false;
  }
  return c;
}

double spectral_norm(const std::vector<double>& H, int n) {
  Eigen::Map<const Eigen::MatrixXd> M(H.data(), n, n);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M, Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

// Tail (second half) of vals monotone in the given direction, and end/start ratio beyond factor.
CheckResult trend_check(const std::string& name, const std::vector<std::pair<std::string, std::vector<double>>>& seqs,
                        bool to_zero) {
  CheckResult c{name, 1e300, true, ""};
  for (const auto& [label, vals] : seqs) {
    const std::size_t start = vals.size() / 2;
    bool mono = true;
    for (std::size_t i = start + 1; i < vals.size(); ++i) {
      const double tol = 1e-9 * std::abs(vals[i - 1]);
      mono = mono && (to_zero ? vals[i] <= vals[i - 1] + tol : vals[i] >= vals[i - 1] - tol);
    }
    const double ratio = to_zero ? vals.front() / vals.back() : vals.back() / vals.front();
    const double margin = mono ? std::log10(ratio) - std::log10(2.0) : -1.0;
    if (margin < c.worst_margin) {
      c.worst_margin = margin;
      c.detail = label;
    }
    if (!(margin >= 0.0)) c.passed = false;
  }
  return c;
}

void finalize(ValidationReport& rep) {
  rep.passed = !rep.checks.empty();
  for (const auto& c : rep.checks) rep.passed = rep.passed && c.passed;
}

ValidationReport validate_vint(const PotentialSpec& spec, const SamplingPlan& plan) {
  ValidationReport rep{AssumptionId::VInt, {}, false, 0};
  if (!spec.interaction) throw UsageError("[V-int] needs an interaction term");
  const auto& I = *spec.interaction;
  const int d = spec.dim_d;
  auto phi = [&](std::span<const double> y) {
    InteractionSpec t = I;
    t.B = 0.0;
    return pair_value(t, y);
  };
  auto grad_phi_norm = [&](std::span<const double> y) {
    InteractionSpec t = I;
    t.B = 0.0;
    std::vector<double> g(d);
    pair_grad(t, y, std::sqrt(norm2(y)), g);
    return std::sqrt(norm2(g));
  };
  RngStream rng = StreamFactory(plan.seed).stream("potentials.vint", 0);
  CheckResult sym{"Phi(y) = Phi(-y)", 1e300, true, ""};
  CheckResult growth{"|grad Phi(y)| <= C_phi/|y|^q_phi + c_phi", 1e300, true, ""};
  CheckResult tail{"Phi and grad Phi bounded for |y| > r_phi", 0.0, true, ""};
  double tail_sup = 0.0;
  for (double r : geometric(plan.sep_min, plan.r_max, plan.n_radii)) {
    for (int k = 0; k < plan.n_directions; ++k) {
      auto u = random_unit(rng, d);
      std::vector<double> y(d), ym(d);
      for (int a = 0; a < d; ++a) {
        y[a] = r * u[a];
        ym[a] = -y[a];
      }
      ++rep.n_samples;
      const double p = phi(y), pm = phi(ym);
      const double m = -std::abs(p - pm) / std::max(1.0, std::abs(p)) + 1e-12;
      if (m < sym.worst_margin) sym.worst_margin = m;
      if (m < 0) sym.passed = false;
      const double gn = grad_phi_norm(y);
      const double bound = I.C_phi * std::pow(r, -I.q_phi) + I.c_phi;
      const double gm = (bound - gn) / std::max(bound, 1e-300) + 1e-12;
      if (gm < growth.worst_margin) {
        growth.worst_margin = gm;
        growth.detail = "|y| = " + std::to_string(r);
      }
      if (gm < 0) growth.passed = false;
      if (r > I.r_phi) tail_sup = std::max({tail_sup, std::abs(p), gn});
    }
  }
  tail.passed = std::isfinite(tail_sup);
  tail.worst_margin = tail.passed ? 0.0 : -1.0;
  tail.detail = "sup = " + std::to_string(tail_sup);
  CheckResult q{"0 <= q_phi < beta + 1", std::min(I.q_phi, I.beta + 1.0 - I.q_phi), false, ""};
  q.passed = I.q_phi >= 0 && I.q_phi < I.beta + 1.0;
  // |y|^beta |Phi(y)| -> 0 along decreasing radii.
  CheckResult dom{"|y|^beta |Phi(y)| -> 0 as |y| -> 0", 0.0, true, ""};
  {
    auto u = random_unit(rng, d);
    std::vector<double> vals;
    for (double r : geometric(plan.sep_max, plan.sep_min, plan.n_radii)) {
      std::vector<double> y(d);
      for (int a = 0; a < d; ++a) y[a] = r * u[a];
      vals.push_back(std::pow(r, I.beta) * std::abs(phi(y)));
      ++rep.n_samples;
    }
    bool mono = true;
    for (std::size_t i = 1; i < vals.size(); ++i) mono = mono && vals[i] <= vals[i - 1] * (1 + 1e-12);
    const bool vanishing = vals.back() == 0.0 || vals.back() <= 1e-2 * vals.front();
    dom.passed = mono && vanishing;
    dom.worst_margin = vals.back() == 0.0 ? 0.0 : std::log10(vals.front() / vals.back()) - 2.0;
    dom.detail = "last value " + std::to_string(vals.back());
  }
  rep.checks = {sym, dom, growth, q, tail};
  finalize(rep);
  return rep;
}

}  // namespace

ValidationReport validate_assumptions(const PotentialSpec& spec, AssumptionId which, const SamplingPlan& plan) {
  check_potential(spec);
  if (plan.n_radii < 2 || plan.n_directions < 1) throw UsageError("sampling plan has no points");
  if (!(plan.r_min > 0 && plan.r_max > plan.r_min)) throw UsageError("sampling plan needs 0 < r_min < r_max");
  ValidationReport rep{which, {}, false, 0};
  const int n = spec.dim();
  switch (which) {
    case AssumptionId::VLoc: {
      CheckResult floor_c{"V >= 1", 1e300, true, ""};
      CheckResult grad_c{"grad V finite and locally Lipschitz", 1e300, true, ""};
      auto seqs = divergent_sequences(spec, plan, true, false);
      for (const auto& s : seqs)
        for (std::size_t i = 0; i < s.points.size(); ++i) {
          const auto& x = s.points[i];
          const double v = eval_potential(spec, x).or_infinity();
          floor_c.worst_margin = std::min(floor_c.worst_margin, v - 1.0);
          auto g = grad_potential(spec, x);
          const double gn = std::sqrt(norm2(g));
          if (!std::isfinite(gn)) grad_c.passed = false;
          if (i > 0) {
            // Difference quotient of the gradient between consecutive samples stays finite.
            auto g0 = grad_potential(spec, s.points[i - 1]);
            double dg = 0.0, dx = 0.0;
            for (int a = 0; a < n; ++a) {
              dg += (g[a] - g0[a]) * (g[a] - g0[a]);
              dx += (x[a] - s.points[i - 1][a]) * (x[a] - s.points[i - 1][a]);
            }
            if (!std::isfinite(std::sqrt(dg / dx))) grad_c.passed = false;
          }
        }
      floor_c.passed = floor_c.worst_margin >= -1e-12;
      grad_c.worst_margin = grad_c.passed ? 0.0 : -1.0;
      rep.checks = {floor_c, grad_c, ray_coercivity(spec, seqs, rep.n_samples)};
      break;
    }
    case AssumptionId::VPolyXk: {
      const auto& pc = spec.poly_constants;
      if (!(pc.c_V > 0 && pc.M_V > 0)) throw UsageError("[V poly-x^k] needs declared c_V > 0 and M_V > 0");
      const double k = spec.kind == PotentialKind::PolyConfining ? spec.poly_k : 2.0;
      CheckResult lo{"c_V |x|^k <= V(x)", 1e300, true, ""};
      CheckResult hi{"V(x) <= M_V |x|^k", 1e300, true, ""};
      CheckResult rad{"x . grad V(x) >= c_V |x|^k", 1e300, true, ""};
      CheckResult gb{"|grad V(x)| <= M_V |x|^(k-1)", 1e300, true, ""};
      SamplingPlan p = plan;
      p.r_min = std::max(plan.r_min, pc.r_V);
      for (const auto& s : divergent_sequences(spec, p, true, false))
        for (const auto& x : s.points) {
          ++rep.n_samples;
          const double r = std::sqrt(norm2(x)), rk = std::pow(r, k);
          const double v = eval_potential(spec, x).or_infinity();
          auto g = grad_potential(spec, x);
          double xg = 0.0;
          for (int a = 0; a < n; ++a) xg += x[a] * g[a];
          auto upd = [&](CheckResult& c, double m) {
            if (m < c.worst_margin) {
              c.worst_margin = m;
              c.detail = "|x| = " + std::to_string(r);
            }
          };
          upd(lo, (v - pc.c_V * rk) / rk);
          upd(hi, (pc.M_V * rk - v) / rk);
          upd(rad, (xg - pc.c_V * rk) / rk);
          upd(gb, (pc.M_V * rk / r - std::sqrt(norm2(g))) / (rk / r));
        }
      for (auto* c : {&lo, &hi, &rad, &gb}) c->passed = c->worst_margin >= 0.0;
      rep.checks = {lo, hi, rad};
      if (plan.require_gradient_bound) rep.checks.push_back(gb);
      break;
    }
    case AssumptionId::VCoercive: {
      auto seqs = divergent_sequences(spec, plan, true, true);
      rep.checks = {ray_coercivity(spec, seqs, rep.n_samples)};
      break;
    }
    case AssumptionId::V2: {
      CheckResult c{"quadratic confinement a0|y|^2/2 with a0 > 0", spec.quadratic_a0, false, ""};
      c.passed = (spec.kind == PotentialKind::Quadratic || spec.kind == PotentialKind::SingularComposite) &&
                 spec.quadratic_a0 > 0;
      rep.checks = {c};
      rep.n_samples = 0;
      break;
    }
    case AssumptionId::VInt:
      return validate_vint(spec, plan);
    case AssumptionId::VSing1: {
      CheckResult kind{"singular composite form with N >= 2, d >= 2", 0.0, false, ""};
      kind.passed = spec.kind == PotentialKind::SingularComposite && spec.n_particles >= 2 && spec.dim_d >= 2 &&
                    spec.interaction.has_value();
      rep.checks.push_back(kind);
      if (kind.passed) {
        auto vint = validate_vint(spec, plan);
        rep.n_samples += vint.n_samples;
        CheckResult c{"interaction satisfies [V-int]", 0.0, vint.passed, ""};
        rep.checks.push_back(c);
        CheckResult q{"quadratic confinement a0 > 0", spec.quadratic_a0, spec.quadratic_a0 > 0, ""};
        rep.checks.push_back(q);
      }
      if (spec.perturbation) {
        // The support ball avoids {x^i = x^j} iff its center is farther than rho
        // from each collision plane; distance to a plane is |c^i - c^j|/sqrt(2).
        const auto& p = *spec.perturbation;
        double dist = min_pair_distance(spec, p.center) / std::numbers::sqrt2;
        CheckResult s{"supp V_p avoids collisions", dist - p.radius, dist > p.radius, ""};
        rep.checks.push_back(s);
      }
      break;
    }
    case AssumptionId::VSing2: {
      std::vector<std::pair<std::string, std::vector<double>>> r1, r2;
      for (const auto& s : divergent_sequences(spec, plan, true, true)) {
        std::vector<double> a, b;
        for (const auto& x : s.points) {
          ++rep.n_samples;
          const double v = eval_potential(spec, x).value();
          const double gn = std::sqrt(norm2(grad_potential(spec, x)));
          const double hn = spectral_norm(fd_hessian(spec, x), n);
          a.push_back(hn / std::pow(gn, plan.zeta));
          b.push_back(std::pow(gn, 2.0 - plan.zeta) / std::pow(v, 1.0 - plan.delta));
        }
        r1.emplace_back(s.label, std::move(a));
        r2.emplace_back(s.label, std::move(b));
      }
      rep.checks = {trend_check("|Hess V|/|grad V|^zeta -> 0", r1, true),
                    trend_check("|grad V|^(2-zeta)/V^(1-delta) -> infinity", r2, false)};
      break;
    }
  }
  finalize(rep);
  return rep;
}

}  // namespace qsdlab
