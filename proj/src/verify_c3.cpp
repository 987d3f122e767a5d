#include <algorithm>
#include <cmath>
#include <limits>

#include "lyapunov_detail.hpp"
#include "qsdlab/errors.hpp"

namespace qsdlab {

namespace {

void uniform_ball(RngStream& rng, double radius, std::span<double> out) {
  if (out.empty()) return;
  double nn = 0.0;
  for (double& t : out) {
    t = rng.normal();
    nn += t * t;
  }
  const double r = radius * std::pow(rng.uniform_open(), 1.0 / static_cast<double>(out.size())) / std::sqrt(nn);
  for (double& t : out) t *= r;
}

constexpr std::int64_t kMaxProposals = 50'000'000;

}  // namespace

double position_radius(const PotentialSpec& pot, double E) {
  const double pert = pot.perturbation ? std::min(0.0, pot.perturbation->amplitude) : 0.0;
  double base = pot.floor + pert;
  switch (pot.kind) {
    case PotentialKind::Quadratic:
      return std::sqrt(std::max(0.0, 2 * (E - base) / pot.quadratic_a0));
    case PotentialKind::PolyConfining:
      return std::pow(std::max(0.0, (E - base) / pot.poly_c), 1.0 / pot.poly_k);
    case PotentialKind::SingularComposite: {
      if (pot.has_pairs()) {
        const int n_pairs = pot.n_particles * (pot.n_particles - 1) / 2;
        base += n_pairs * std::min(0.0, pair_minimum(*pot.interaction, pot.dim_d));
      }
      return std::sqrt(std::max(0.0, 2 * (E - base) / pot.quadratic_a0));
    }
    case PotentialKind::Custom:
      break;
  }
  throw UsageError("energy-shell sampling needs a built-in potential (no radius bound for custom V)");
}

State sample_energy_slab(const ProcessSpec& proc, double E_lo, double E_hi, RngStream& rng,
                         std::int64_t* proposals) {
  if (!(E_hi > E_lo)) throw UsageError("energy slab needs E_lo < E_hi");
  const double X = position_radius(proc.potential, E_hi);
  const double P = std::sqrt(2 * E_hi);
  State s = make_state(proc);
  const int n = proc.dim(), m = proc.aux_dim();
  std::vector<double> mom(n + m);
  for (std::int64_t k = 1; k <= kMaxProposals; ++k) {
    uniform_ball(rng, X, s.x);
    uniform_ball(rng, P, mom);
    std::copy(mom.begin(), mom.begin() + n, s.v.begin());
    std::copy(mom.begin() + n, mom.end(), s.aux.begin());
    const ExtReal H = hamiltonian(proc, s);
    if (H.is_outside()) continue;
    if (H.or_infinity() >= E_lo && H.or_infinity() <= E_hi) {
      if (proposals) *proposals += k;
      return s;
    }
  }
  throw NumericalError("sampling error: no state accepted on the energy slab [" + std::to_string(E_lo) + ", " +
                       std::to_string(E_hi) + "]");
}

std::vector<Shell> energy_shells(const std::vector<double>& levels) {
  if (levels.size() < 2) throw UsageError("energy shells need at least two levels");
  for (std::size_t i = 1; i < levels.size(); ++i)
    if (!(levels[i] > levels[i - 1])) throw UsageError("energy shell levels must be increasing");
  std::vector<Shell> out;
  for (std::size_t i = 0; i + 1 < levels.size(); ++i) out.push_back({Shell::Kind::Energy, levels[i], levels[i + 1]});
  const double a = levels[levels.size() - 2], b = levels.back();
  out.push_back({Shell::Kind::Energy, b, b * b / a});
  return out;
}

std::vector<Shell> collision_shells(const std::vector<double>& separations) {
  if (separations.size() < 2) throw UsageError("collision shells need at least two separations");
  std::vector<Shell> out;
  for (std::size_t i = 0; i + 1 < separations.size(); ++i) {
    if (!(separations[i + 1] < separations[i] && separations[i + 1] > 0))
      throw UsageError("collision separations must be positive and decreasing");
    out.push_back({Shell::Kind::Collision, separations[i + 1], separations[i]});
  }
  return out;
}

namespace {

State sample_collision(const ProcessSpec& proc, const Shell& sh, const C3Options& opt, RngStream& rng) {
  const auto& pot = proc.potential;
  if (!pot.has_pairs()) throw UsageError("collision shells need a pair potential with N >= 2");
  const int d = pot.dim_d, N = pot.n_particles;
  State s = make_state(proc);
  std::vector<double> u(d), c(d);
  for (int attempt = 0; attempt < 100000; ++attempt) {
    // Separation with density proportional to r^(d-1) on [lo, hi].
    const double a = std::pow(sh.lo, d), b = std::pow(sh.hi, d);
    const double r = std::pow(a + (b - a) * rng.uniform(), 1.0 / d);
    double nu = 0.0;
    for (int k = 0; k < d; ++k) {
      u[k] = rng.normal();
      nu += u[k] * u[k];
    }
    nu = std::sqrt(nu);
    for (int k = 0; k < d; ++k) {
      c[k] = opt.collision_box * (2 * rng.uniform() - 1);
      s.x[k] = c[k] + 0.5 * r * u[k] / nu;
      s.x[d + k] = c[k] - 0.5 * r * u[k] / nu;
    }
    for (int i = 2; i < N; ++i)
      for (int k = 0; k < d; ++k) s.x[i * d + k] = (opt.collision_box + 2) * (2 * rng.uniform() - 1);
    if (N > 2 && min_pair_distance(pot, s.x) < sh.hi) continue;
    std::vector<double> mom(s.v.size() + s.aux.size());
    uniform_ball(rng, opt.collision_momentum, mom);
    std::copy(mom.begin(), mom.begin() + s.v.size(), s.v.begin());
    std::copy(mom.begin() + s.v.size(), mom.end(), s.aux.begin());
    return s;
  }
  throw NumericalError("sampling error: no configuration accepted on the collision shell");
}

}  // namespace

C3Report verify_C3(const LyapunovParams& p, const ProcessSpec& proc, const std::vector<Shell>& shells,
                   int n_per_shell, std::uint64_t seed, const C3Options& opt, ExecPolicy policy) {
  if (opt.check_params) check_params(p, proc);
  if (shells.empty() || n_per_shell <= 0) throw UsageError("verify_C3 needs shells and n_per_shell > 0");
  const std::size_t S = shells.size();
  const std::int64_t total = static_cast<std::int64_t>(S) * n_per_shell;
  std::vector<double> ratio(total), energy(total);
  std::vector<std::int64_t> props(total, 0);
  StreamFactory f(seed);
  for_each_index(total, policy, [&](std::int64_t i) {
    RngStream rng = f.stream("lyapunov.verify_c3", static_cast<std::uint64_t>(i));
    const Shell& sh = shells[i / n_per_shell];
    State s = sh.kind == Shell::Kind::Energy ? sample_energy_slab(proc, sh.lo, sh.hi, rng, &props[i])
                                             : sample_collision(proc, sh, opt, rng);
    if (sh.kind == Shell::Kind::Collision) props[i] = 1;
    energy[i] = hamiltonian(proc, s).value();
    const FieldDerivatives d = F_derivatives(p, proc, s);
    const double q = drift_ratio(p, proc, s);
    ratio[i] = (std::isfinite(q) && d.value >= 1.0) ? q : std::numeric_limits<double>::quiet_NaN();
  });

  C3Report rep;
  rep.family = family_of(p);
  for (std::size_t j = 0; j < S; ++j) {
    ShellResult r;
    r.shell = shells[j];
    r.n_samples = n_per_shell;
    r.sup_ratio = -std::numeric_limits<double>::infinity();
    r.E_lo = std::numeric_limits<double>::infinity();
    r.E_hi = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < n_per_shell; ++k) {
      const std::int64_t i = static_cast<std::int64_t>(j) * n_per_shell + k;
      r.n_proposals += props[i];
      r.E_lo = std::min(r.E_lo, energy[i]);
      r.E_hi = std::max(r.E_hi, energy[i]);
      if (std::isnan(ratio[i])) ++r.n_invalid;
      else r.sup_ratio = std::max(r.sup_ratio, ratio[i]);
    }
    if (r.n_invalid > 0) r.sup_ratio = std::numeric_limits<double>::infinity();
    if (shells[j].kind == Shell::Kind::Energy) {
      r.E_lo = shells[j].lo;
      r.E_hi = shells[j].hi;
    }
    r.r_n = -r.sup_ratio;
    rep.shells.push_back(r);
  }

  // b_n = sup over {H <= E_n} of W (ratio + r_n), by sampling that sublevel set.
  if (opt.compute_b_n) {
    std::vector<double> bvals(total);
    std::vector<char> over(total, 0);
    for_each_index(total, policy, [&](std::int64_t i) {
      const std::size_t j = static_cast<std::size_t>(i / n_per_shell);
      const ShellResult& r = rep.shells[j];
      if (!std::isfinite(r.r_n)) {
        bvals[i] = 0.0;
        return;
      }
      RngStream rng = f.stream("lyapunov.verify_c3.b_n", static_cast<std::uint64_t>(i));
      const State s = sample_energy_slab(proc, 0.0, r.E_lo, rng);
      const WValue w = eval_W(p, proc, s);
      const double q = drift_ratio(p, proc, s);
      if (w.overflow) {
        over[i] = 1;
        bvals[i] = 0.0;
      } else {
        bvals[i] = std::isfinite(q) ? w.value * (q + r.r_n) : 0.0;
      }
    });
    for (std::size_t j = 0; j < S; ++j) {
      ShellResult& r = rep.shells[j];
      double b = 0.0;
      for (int k = 0; k < n_per_shell; ++k) {
        const std::int64_t i = static_cast<std::int64_t>(j) * n_per_shell + k;
        b = std::max(b, bvals[i]);
        if (over[i]) r.b_n_overflow = true;
      }
      r.b_n = b;
    }
  }

  const std::size_t m = std::min<std::size_t>(3, S);
  rep.negative_tail = true;
  rep.decreasing = true;
  for (std::size_t j = S - m; j < S; ++j) {
    if (!(rep.shells[j].sup_ratio < 0)) rep.negative_tail = false;
    if (j > S - m && !(rep.shells[j].sup_ratio < rep.shells[j - 1].sup_ratio)) rep.decreasing = false;
  }
  rep.negative_from = -1;
  for (std::size_t j = S; j-- > 0;) {
    if (!(rep.shells[j].sup_ratio < 0)) break;
    rep.negative_from = static_cast<int>(j);
  }
  rep.passed = rep.negative_tail && rep.decreasing;
  return rep;
}

}  // namespace qsdlab
