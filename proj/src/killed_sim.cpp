#include "qsdlab/killed_sim.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <limits>

namespace qsdlab {

void set_workers(int n) {
  if (n > 0) omp_set_num_threads(n);
}

int workers() { return omp_get_max_threads(); }

int noise_per_step(const ProcessSpec& proc, const StepOptions& opt) {
  return opt.integrator == Integrator::Splitting ? 2 * proc.noise_dim() : proc.noise_dim();
}

Stepper::Stepper(const ProcessSpec& proc, StepOptions opt)
    : proc_(proc),
      opt_(opt),
      layout_(diffusion_map(proc)),
      singular_(proc.potential.has_pairs() || proc.potential.kind == PotentialKind::Custom) {
  if (opt_.integrator == Integrator::Splitting && proc.family == Family::NoseHoover)
    throw UsageError("the splitting integrator is available for kinetic and generalized Langevin only");
  gV_.resize(proc.dim());
  noise_.resize(noise_per_step(proc, opt_));
  drift_ = make_state(proc);
  trial_ = make_state(proc);
}

void Stepper::ou_coeffs(double h) {
  if (h == ou_cached_dt_) return;
  ou_cached_dt_ = h;
  const double g = proc_.gamma;
  if (proc_.family == Family::KineticLangevin) {
    const double e = std::exp(-g * h);
    ou_E_[0] = e;
    ou_L_[0] = std::sqrt(std::max(0.0, 1.0 - e * e));
    return;
  }
  // A = [[-g, l], [-l, -a]] = sI + B with B^2 = qI.
  const double l = proc_.lambda_c, a = proc_.alpha_c;
  const double sh = -0.5 * (g + a);
  const double b11 = 0.5 * (a - g), b12 = l, b21 = -l, b22 = 0.5 * (g - a);
  const double q = b11 * b11 - l * l;
  double c0, c1;
  if (q > 0) {
    const double r = std::sqrt(q);
    c0 = std::cosh(r * h);
    c1 = std::sinh(r * h) / r;
  } else if (q < 0) {
    const double r = std::sqrt(-q);
    c0 = std::cos(r * h);
    c1 = std::sin(r * h) / r;
  } else {
    c0 = 1.0;
    c1 = h;
  }
  const double es = std::exp(sh * h);
  double E[4] = {es * (c0 + c1 * b11), es * c1 * b12, es * c1 * b21, es * (c0 + c1 * b22)};
  std::copy(E, E + 4, ou_E_);
  // The invariant covariance is the identity, so the step covariance is I - E E^T.
  const double C11 = 1.0 - (E[0] * E[0] + E[1] * E[1]);
  const double C12 = -(E[0] * E[2] + E[1] * E[3]);
  const double C22 = 1.0 - (E[2] * E[2] + E[3] * E[3]);
  const double l11 = std::sqrt(std::max(0.0, C11));
  const double l21 = l11 > 0 ? C12 / l11 : 0.0;
  ou_L_[0] = l11;
  ou_L_[1] = l21;
  ou_L_[2] = std::sqrt(std::max(0.0, C22 - l21 * l21));
}

namespace {
bool finite_state(const State& s) {
  for (const auto* b : {&s.x, &s.v, &s.aux})
    for (double t : *b)
      if (!std::isfinite(t)) return false;
  return true;
}
}  // namespace

bool Stepper::propose(const State& s, double dt, std::span<const double> dw, State& out, bool& blowup) {
  const std::size_t n = s.x.size();
  const auto& pot = proc_.potential;
  grad_potential(pot, s.x, gV_);
  double rmin = std::numeric_limits<double>::infinity();
  if (singular_) rmin = min_pair_distance(pot, s.x);

  if (opt_.integrator == Integrator::EulerMaruyama) {
    drift_into(proc_, s, gV_, drift_);
    for (std::size_t i = 0; i < n; ++i) {
      out.x[i] = s.x[i] + dt * drift_.x[i];
      out.v[i] = s.v[i] + dt * drift_.v[i] + layout_.v_amplitude * dw[i];
    }
    for (std::size_t i = 0; i < s.aux.size(); ++i) {
      out.aux[i] = s.aux[i] + dt * drift_.aux[i];
      if (proc_.family == Family::GeneralizedLangevin) out.aux[i] += layout_.aux_amplitude * dw[n + i];
    }
  } else {
    // O(h/2) B(h/2) A(h) B(h/2) O(h/2); dw holds 2*noise_dim standard normals.
    ou_coeffs(0.5 * dt);
    const std::size_t m = proc_.noise_dim();
    out = s;
    auto ou = [&](std::span<const double> xi) {
      if (proc_.family == Family::KineticLangevin) {
        for (std::size_t i = 0; i < n; ++i) out.v[i] = ou_E_[0] * out.v[i] + ou_L_[0] * xi[i];
      } else {
        for (std::size_t i = 0; i < n; ++i) {
          const double v = out.v[i], z = out.aux[i];
          out.v[i] = ou_E_[0] * v + ou_E_[1] * z + ou_L_[0] * xi[i];
          out.aux[i] = ou_E_[2] * v + ou_E_[3] * z + ou_L_[1] * xi[i] + ou_L_[2] * xi[n + i];
        }
      }
    };
    ou(dw.subspan(0, m));
    for (std::size_t i = 0; i < n; ++i) out.v[i] -= 0.5 * dt * gV_[i];
    for (std::size_t i = 0; i < n; ++i) out.x[i] += dt * out.v[i];
    if (singular_ && !(min_pair_distance(pot, out.x) > 0 && in_admissible_set(pot, out.x))) return false;
    if (!finite_state(out)) {
      blowup = true;
      return false;
    }
    grad_potential(pot, out.x, gV_);
    for (std::size_t i = 0; i < n; ++i) out.v[i] -= 0.5 * dt * gV_[i];
    ou(dw.subspan(m, m));
  }
  if (!finite_state(out)) {
    blowup = true;
    return false;
  }
  if (singular_) {
    double dx2 = 0.0, g2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      dx2 += (out.x[i] - s.x[i]) * (out.x[i] - s.x[i]);
      g2 += gV_[i] * gV_[i];
    }
    const double lim = opt_.displacement_fraction * rmin;
    if (std::sqrt(dx2) > lim || std::sqrt(g2) * dt * dt > lim) return false;
    if (!in_admissible_set(pot, out.x)) return false;
  }
  return true;
}

void Stepper::advance_increment(State& s, double dt, std::vector<double>& dw, RngStream* refine, int depth) {
  if (trial_.x.size() != s.x.size()) trial_ = s;
  bool blowup = false;
  if (propose(s, dt, dw, trial_, blowup)) {
    std::swap(s, trial_);
    return;
  }
  if (depth >= opt_.max_halvings) {
    if (blowup) throw NumericalBlowup("non-finite state after step halving");
    throw SingularityStall("step size underflow near a singularity of V", s);
  }
  std::vector<double> first(dw.size()), second(dw.size());
  if (opt_.integrator == Integrator::EulerMaruyama) {
    // Brownian bridge: W(dt/2) | W(dt) ~ N(W(dt)/2, dt/4).
    const double sd = 0.5 * std::sqrt(dt);
    for (std::size_t i = 0; i < dw.size(); ++i) {
      first[i] = 0.5 * dw[i] + (refine ? sd * refine->normal() : 0.0);
      second[i] = dw[i] - first[i];
    }
  } else {
    for (std::size_t i = 0; i < dw.size(); ++i) {
      first[i] = refine ? refine->normal() : 0.0;
      second[i] = refine ? refine->normal() : 0.0;
    }
  }
  advance_increment(s, 0.5 * dt, first, refine, depth + 1);
  advance_increment(s, 0.5 * dt, second, refine, depth + 1);
}

void Stepper::advance_with_noise(State& s, double dt, std::span<const double> noise, RngStream* refine) {
  std::vector<double> dw(noise.begin(), noise.end());
  if (opt_.integrator == Integrator::EulerMaruyama) {
    const double sq = std::sqrt(dt);
    for (auto& w : dw) w *= sq;
  }
  advance_increment(s, dt, dw, refine, 0);
}

void Stepper::advance(State& s, double dt, RngStream& rng) {
  for (auto& w : noise_) w = rng.normal();
  if (opt_.integrator == Integrator::EulerMaruyama) {
    const double sq = std::sqrt(dt);
    for (auto& w : noise_) w *= sq;
  }
  advance_increment(s, dt, noise_, &rng, 0);
}

State step(const ProcessSpec& proc, const State& s, double dt, std::span<const double> noise, RngStream* refine,
           const StepOptions& opt) {
  if (!(dt > 0)) throw UsageError("dt must be positive");
  check_state(proc, s);
  if (static_cast<int>(noise.size()) != noise_per_step(proc, opt))
    throw UsageError("noise vector has the wrong length");
  if (!in_admissible_set(proc.potential, s.x)) throw DomainError("step from a position outside O_V");
  Stepper st(proc, opt);
  State out = s;
  st.advance_with_noise(out, dt, noise, refine);
  return out;
}

namespace {
State lerp(const State& a, const State& b, double th) {
  State o = a;
  for (std::size_t i = 0; i < a.x.size(); ++i) o.x[i] = a.x[i] + th * (b.x[i] - a.x[i]);
  for (std::size_t i = 0; i < a.v.size(); ++i) o.v[i] = a.v[i] + th * (b.v[i] - a.v[i]);
  for (std::size_t i = 0; i < a.aux.size(); ++i) o.aux[i] = a.aux[i] + th * (b.aux[i] - a.aux[i]);
  return o;
}
}  // namespace

KilledTrajectoryResult simulate_killed(const State& initial, const ProcessSpec& proc, const DomainSpec& domain,
                                       double dt, double t_max, RngStream& rng, const SimulateOptions& opt) {
  if (!(dt > 0) || !(t_max >= 0)) throw UsageError("need dt > 0 and t_max >= 0");
  check_state(proc, initial);
  const auto& pot = proc.potential;
  if (!domain.contains(pot, initial.x)) throw UsageError("initial position is not in the domain O");
  Stepper st(proc, opt.step);
  KilledTrajectoryResult res;
  State s = initial, prev = initial;
  if (opt.thin > 0) res.path_samples.push_back(s);
  const auto n_total = static_cast<std::int64_t>(std::ceil(t_max / dt - 1e-9));
  for (std::int64_t k = 0; k < n_total; ++k) {
    const double t0 = k * dt;
    const double h = std::min(dt, t_max - t0);
    prev = s;
    try {
      st.advance(s, h, rng);
    } catch (SingularityStall& e) {
      e.time = t0;
      throw;
    }
    ++res.n_steps;
    if (!domain.contains(pot, s.x)) {
      double lo = 0.0, hi = 1.0;
      std::vector<double> xm(s.x.size());
      for (int it = 0; it < 8; ++it) {
        const double mid = 0.5 * (lo + hi);
        for (std::size_t i = 0; i < xm.size(); ++i) xm[i] = prev.x[i] + mid * (s.x[i] - prev.x[i]);
        if (domain.contains(pot, xm)) lo = mid;
        else hi = mid;
      }
      res.outcome = KilledTrajectoryResult::Outcome::Exited;
      res.exit_time = t0 + hi * h;
      res.final_state = lerp(prev, s, hi);
      return res;
    }
    if (opt.thin > 0 && res.n_steps % opt.thin == 0) res.path_samples.push_back(s);
  }
  res.outcome = KilledTrajectoryResult::Outcome::Survived;
  res.final_state = std::move(s);
  return res;
}

State sample_initial(const InitialDistribution& init, const ProcessSpec& proc, const DomainSpec& domain,
                     RngStream& rng) {
  State s = init.point;
  if (s.x.empty()) s = make_state(proc);
  check_state(proc, s);
  if (init.kind == InitialDistribution::Kind::UniformBox) {
    const int n = proc.dim();
    if (static_cast<int>(init.lo.size()) != n || static_cast<int>(init.hi.size()) != n)
      throw UsageError("initial box has the wrong dimension");
    for (int tries = 0;; ++tries) {
      if (tries > 1000000) throw UsageError("initial box does not intersect the domain");
      for (int i = 0; i < n; ++i) s.x[i] = init.lo[i] + (init.hi[i] - init.lo[i]) * rng.uniform();
      if (domain.contains(proc.potential, s.x)) break;
    }
  }
  if (init.maxwellian) {
    for (auto& v : s.v) v = rng.normal();
    for (auto& a : s.aux) a = rng.normal();
  }
  return s;
}

SurvivalTable survival_curve(const InitialDistribution& init, const ProcessSpec& proc, const DomainSpec& domain,
                             double dt, const std::vector<double>& time_grid, std::int64_t n_traj,
                             std::uint64_t seed, const SimulateOptions& opt, ExecPolicy policy) {
  if (n_traj < 1) throw UsageError("survival curve needs n_traj >= 1");
  if (time_grid.empty()) throw UsageError("empty time grid");
  for (std::size_t i = 1; i < time_grid.size(); ++i)
    if (!(time_grid[i] > time_grid[i - 1])) throw UsageError("time grid must be increasing");
  check_process(proc);
  const StreamFactory streams(seed);
  const double t_max = time_grid.back();
  std::vector<double> exit_time(n_traj, std::numeric_limits<double>::infinity());
  std::vector<char> stalled(n_traj, 0);
  SimulateOptions o = opt;
  o.thin = 0;
  for_each_index(n_traj, policy, [&](std::int64_t i) {
    RngStream rng = streams.stream("killed_sim.survival", static_cast<std::uint64_t>(i));
    State s0 = sample_initial(init, proc, domain, rng);
    try {
      auto r = simulate_killed(s0, proc, domain, dt, t_max, rng, o);
      if (r.outcome == KilledTrajectoryResult::Outcome::Exited) exit_time[i] = r.exit_time;
    } catch (const SingularityStall& e) {
      // Counted as removed at the stall time and reported separately.
      exit_time[i] = e.time;
      stalled[i] = 1;
    }
  });
  SurvivalTable tab;
  tab.exit_times = exit_time;
  for (char c : stalled) tab.n_stalls += c;
  std::vector<double> sorted = exit_time;
  std::sort(sorted.begin(), sorted.end());
  for (double t : time_grid) {
    // survivors = #{exit_time > t}
    const auto dead = std::upper_bound(sorted.begin(), sorted.end(), t) - sorted.begin();
    const std::int64_t surv = n_traj - dead;
    const double p = double(surv) / n_traj;
    tab.rows.push_back({t, surv, n_traj, std::sqrt(p * (1 - p) / n_traj)});
  }
  return tab;
}

std::vector<TrajectorySummary> simulate_ensemble(const InitialDistribution& init, const ProcessSpec& proc,
                                                 const DomainSpec& domain, double dt, double t_max,
                                                 std::int64_t n_traj, std::uint64_t seed,
                                                 const SimulateOptions& opt, ExecPolicy policy) {
  if (n_traj < 1) throw UsageError("simulate needs n_traj >= 1");
  check_process(proc);
  const StreamFactory streams(seed);
  std::vector<TrajectorySummary> out(n_traj);
  SimulateOptions o = opt;
  o.thin = 0;
  for_each_index(n_traj, policy, [&](std::int64_t i) {
    RngStream rng = streams.stream("killed_sim.simulate", static_cast<std::uint64_t>(i));
    State s0 = sample_initial(init, proc, domain, rng);
    TrajectorySummary ts{static_cast<std::uint64_t>(i), "survived", std::numeric_limits<double>::infinity(), 0};
    try {
      auto r = simulate_killed(s0, proc, domain, dt, t_max, rng, o);
      ts.n_steps = r.n_steps;
      if (r.outcome == KilledTrajectoryResult::Outcome::Exited) {
        ts.outcome = "exited";
        ts.exit_time = r.exit_time;
      }
    } catch (const SingularityStall& e) {
      ts.outcome = "stall";
      ts.exit_time = e.time;
    }
    out[i] = ts;
  });
  return out;
}

ExitBoundReport check_exit_bound(const ProcessSpec& proc, const State& x0, double R, double t, std::int64_t n_traj,
                                 std::uint64_t seed, double dt, const StepOptions& opt, ExecPolicy policy) {
  check_process(proc);
  if (n_traj < 1) throw UsageError("exit bound check needs n_traj >= 1");
  if (!(t >= 0)) throw UsageError("horizon t must be >= 0");
  const double H0 = hamiltonian(proc, x0).value();
  if (!(H0 < R)) throw UsageError("exit bound needs H(x0) < R");
  const auto gc = energy_growth_constant(proc);
  const StreamFactory streams(seed);
  std::vector<char> hit(n_traj, 0);
  const auto n_steps = static_cast<std::int64_t>(std::ceil(t / dt - 1e-9));
  for_each_index(n_traj, policy, [&](std::int64_t i) {
    RngStream rng = streams.stream("killed_sim.exit_bound", static_cast<std::uint64_t>(i));
    Stepper st(proc, opt);
    State s = x0;
    for (std::int64_t k = 0; k < n_steps; ++k) {
      st.advance(s, std::min(dt, t - k * dt), rng);
      if (hamiltonian(proc, s).or_infinity() >= R) {
        hit[i] = 1;
        return;
      }
    }
  });
  ExitBoundReport rep;
  rep.hits = 0;
  for (char c : hit) rep.hits += c;
  rep.n_traj = n_traj;
  rep.estimate = double(rep.hits) / n_traj;
  rep.stderr_ = std::sqrt(rep.estimate * (1 - rep.estimate) / n_traj);
  rep.c = gc.c;
  rep.c_derivation = gc.derivation;
  rep.H0 = H0;
  rep.bound = std::exp(gc.c * t) * H0 / R;
  rep.passed = rep.estimate + 3.0 * rep.stderr_ <= rep.bound;
  return rep;
}

}  // namespace qsdlab
