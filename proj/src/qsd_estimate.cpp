#include "qsdlab/qsd_estimate.hpp"

#include <Eigen/Dense>

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "qsdlab/errors.hpp"

namespace qsdlab {

namespace {

std::int64_t steps_for(double t, double dt) { return static_cast<std::int64_t>(std::llround(t / dt)); }

struct LocalStepper {
  Stepper st;
};

}  // namespace

QSDReport fleming_viot(const ProcessSpec& proc, const DomainSpec& domain, const InitialDistribution& init,
                       const FVOptions& opt, std::uint64_t seed) {
  if (opt.n_particles < 10) throw UsageError("Fleming-Viot needs n_particles >= 10");
  if (!(opt.dt > 0) || !(opt.t_burnin >= 0) || !(opt.t_sample > 0))
    throw UsageError("Fleming-Viot needs dt > 0, t_burnin >= 0 and t_sample > 0");
  check_process(proc);
  const std::int64_t N = opt.n_particles;
  const std::int64_t n_burn = steps_for(opt.t_burnin, opt.dt), n_samp = steps_for(opt.t_sample, opt.dt);
  if (n_samp < opt.n_batches || opt.n_batches < 2)
    throw UsageError("Fleming-Viot sampling window too short for the number of batches");
  const std::int64_t rec = std::max<std::int64_t>(1, steps_for(opt.record_interval, opt.dt));
  const auto& pot = proc.potential;
  const StreamFactory f(seed);

  std::vector<State> ps(N);
  std::vector<RngStream> rng(N);
  for (std::int64_t i = 0; i < N; ++i) {
    rng[i] = f.stream("qsd.fleming_viot", static_cast<std::uint64_t>(i));
    RngStream r0 = f.stream("qsd.fleming_viot.init", static_cast<std::uint64_t>(i));
    ps[i] = sample_initial(init, proc, domain, r0);
  }
  RngStream pick = f.stream("qsd.fleming_viot.resample", 0);

  QSDReport rep;
  rep.n_particles = N;
  rep.t_sample = n_samp * opt.dt;
  rep.x_hist = Histogram(opt.x_bins.lo, opt.x_bins.hi, opt.x_bins.bins);
  rep.v_hist = Histogram(opt.v_bins.lo, opt.v_bins.hi, opt.v_bins.bins);
  Histogram first_half(opt.x_bins.lo, opt.x_bins.hi, opt.x_bins.bins);
  Histogram second_half = first_half;

  std::vector<char> killed(N, 0), stalled(N, 0);
  std::vector<std::int64_t> alive_idx, ancestor(N);
  std::iota(ancestor.begin(), ancestor.end(), 0);
  std::vector<double> batch_kills(opt.n_batches, 0.0);
  std::vector<std::int64_t> batch_steps(opt.n_batches, 0);

  const std::int64_t total = n_burn + n_samp;
  for (std::int64_t k = 0; k < total; ++k) {
    for_each_index_local(
        N, opt.policy, [&] { return LocalStepper{Stepper(proc, opt.step)}; },
        [&](LocalStepper& L, std::int64_t i) {
          try {
            L.st.advance(ps[i], opt.dt, rng[i]);
            killed[i] = !domain.contains(pot, ps[i].x);
          } catch (const SingularityStall&) {
            killed[i] = 1;
            stalled[i] = 1;
          }
        });
    alive_idx.clear();
    for (std::int64_t i = 0; i < N; ++i)
      if (!killed[i]) alive_idx.push_back(i);
    const std::int64_t n_killed = N - static_cast<std::int64_t>(alive_idx.size());
    if (n_killed == N) {
      spdlog::error("fleming-viot: all {} particles killed in step {} (t = {}); dt = {} is too large", N, k,
                    (k + 1) * opt.dt, opt.dt);
      throw ExtinctionError("every particle was killed in one step; reduce dt");
    }
    for (std::int64_t i = 0; i < N; ++i) {
      if (!killed[i]) continue;
      const std::int64_t j = alive_idx[pick.below(alive_idx.size())];
      ps[i] = ps[j];
      ancestor[i] = ancestor[j];
      if (stalled[i]) ++rep.n_stalls;
      killed[i] = stalled[i] = 0;
    }
    if (k == n_burn - 1) std::iota(ancestor.begin(), ancestor.end(), 0);
    if (k >= n_burn) {
      const std::int64_t s = k - n_burn;
      const int b = static_cast<int>(s * opt.n_batches / n_samp);
      batch_kills[b] += static_cast<double>(n_killed);
      ++batch_steps[b];
      rep.kills += n_killed;
      if ((s + 1) % rec == 0) {
        Histogram& half = 2 * s < n_samp ? first_half : second_half;
        for (const State& st : ps) {
          rep.x_hist.add(st.x[0]);
          half.add(st.x[0]);
          if (!st.v.empty()) rep.v_hist.add(st.v[0]);
        }
      }
    }
  }
  if (n_burn == 0) std::iota(ancestor.begin(), ancestor.end(), 0);

  std::vector<double> rate(opt.n_batches);
  for (int b = 0; b < opt.n_batches; ++b) rate[b] = batch_kills[b] / (static_cast<double>(N) * batch_steps[b] * opt.dt);
  const MeanEstimate m = batch_means(rate, opt.n_batches);
  rep.lambda_hat = static_cast<double>(rep.kills) / (static_cast<double>(N) * rep.t_sample);
  rep.lambda_stderr = m.stderr_;
  rep.lambda_ci_lo = rep.lambda_hat - kZ95 * m.stderr_;
  rep.lambda_ci_hi = rep.lambda_hat + kZ95 * m.stderr_;
  rep.resampling_rate = rep.lambda_hat;
  rep.stationarity_gap = tv_distance(first_half, second_half);

  std::vector<double> c(N, 0.0);
  for (std::int64_t a : ancestor) c[a] += 1;
  double s2 = 0.0;
  for (double x : c) s2 += x * x;
  rep.ess = static_cast<double>(N) * static_cast<double>(N) / s2;
  rep.ensemble = std::move(ps);
  return rep;
}

namespace {

// Variance of sum_i c_i log S_i when every row comes from the same trajectories: for t_i <= t_j,
// Cov(log S_i, log S_j) = var_i, so the double sum telescopes from the latest row backwards.
double nested_variance(const std::vector<double>& c, const std::vector<double>& var) {
  double tail = 0.0, v = 0.0;
  for (std::size_t k = c.size(); k-- > 0;) {
    v += var[k] * (c[k] * c[k] + 2 * c[k] * tail);
    tail += c[k];
  }
  return std::max(v, 0.0);
}

// Row `coef` of (X^T W X)^-1 X^T W for the polynomial design of the given degree.
std::vector<double> ls_coefficients(const std::vector<double>& t, const std::vector<double>& w, int degree, int coef) {
  const auto n = static_cast<Eigen::Index>(t.size());
  Eigen::MatrixXd X(n, degree + 1);
  for (Eigen::Index i = 0; i < n; ++i)
    for (int k = 0; k <= degree; ++k) X(i, k) = std::pow(t[i], k);
  const Eigen::VectorXd W = Eigen::Map<const Eigen::VectorXd>(w.data(), n);
  const Eigen::MatrixXd XtW = X.transpose() * W.asDiagonal();
  const Eigen::MatrixXd C = (XtW * X).ldlt().solve(XtW);
  std::vector<double> out(t.size());
  for (Eigen::Index i = 0; i < n; ++i) out[i] = C(coef, i);
  return out;
}

}  // namespace

DecayEstimate estimate_decay_rate(const SurvivalTable& table) {
  std::vector<const SurvivalRow*> ok;
  for (const auto& r : table.rows)
    if (r.survivors >= 30) ok.push_back(&r);
  if (ok.size() < 5) throw NumericalError("decay-rate fit needs at least 5 time points with >= 30 survivors");
  DecayEstimate e;
  const auto& first = table.rows.front();
  if (table.rows.back().survivors == first.survivors && first.survivors == first.n) {
    e.no_decay = true;
    e.t_from = ok.front()->t;
    e.t_to = ok.back()->t;
    e.n_points = static_cast<int>(ok.size());
    return e;
  }
  const std::size_t start = ok.size() / 2;
  std::vector<double> t, y, w, var;
  for (std::size_t i = start; i < ok.size(); ++i) {
    const double n = static_cast<double>(ok[i]->n);
    const double p = static_cast<double>(ok[i]->survivors) / n;
    // Delta method for log p-hat, floored so that p = 1 keeps a finite weight.
    var.push_back(std::max((1 - p) / (n * p), 1.0 / (n * n)));
    t.push_back(ok[i]->t);
    y.push_back(std::log(p));
    w.push_back(1 / var.back());
  }
  const LinearFit fit = weighted_linear_fit(t, y, w);
  e.lambda_hat = -fit.slope;
  // The rows are nested (survivors at t_j are a subset of those at t_i), so the fit's
  // independent-row standard error is too small; use the exact covariance instead.
  e.stderr_ = std::sqrt(nested_variance(ls_coefficients(t, w, 1, 1), var));
  e.ci_lo = e.lambda_hat - kZ95 * e.stderr_;
  e.ci_hi = e.lambda_hat + kZ95 * e.stderr_;
  e.t_from = t.front();
  e.t_to = t.back();
  e.n_points = static_cast<int>(t.size());
  if (t.size() >= 4) {
    const QuadraticFit q = weighted_quadratic_fit(t, y, w);
    const double se_c2 = std::sqrt(nested_variance(ls_coefficients(t, w, 2, 2), var));
    e.curvature = se_c2 > 0 && std::abs(q.c2) > 3 * se_c2;
  }
  return e;
}

namespace {

// x[0] of each trajectory at each grid time, NaN once it has exited.
std::vector<double> conditioned_paths(const ProcessSpec& proc, const DomainSpec& domain,
                                      const InitialDistribution& init, const std::vector<double>& grid,
                                      std::int64_t n_traj, double dt, const StreamFactory& f, const char* name,
                                      const StepOptions& step, ExecPolicy policy) {
  const std::size_t T = grid.size();
  std::vector<double> out(static_cast<std::size_t>(n_traj) * T, std::numeric_limits<double>::quiet_NaN());
  std::vector<std::int64_t> at(T);
  for (std::size_t k = 0; k < T; ++k) at[k] = steps_for(grid[k], dt);
  for_each_index_local(
      n_traj, policy, [&] { return LocalStepper{Stepper(proc, step)}; },
      [&](LocalStepper& L, std::int64_t i) {
        RngStream rng = f.stream(name, static_cast<std::uint64_t>(i));
        State s = sample_initial(init, proc, domain, rng);
        std::int64_t n = 0;
        for (std::size_t k = 0; k < T; ++k) {
          for (; n < at[k]; ++n) {
            try {
              L.st.advance(s, dt, rng);
            } catch (const SingularityStall&) {
              return;
            }
            if (!domain.contains(proc.potential, s.x)) return;
          }
          out[static_cast<std::size_t>(i) * T + k] = s.x[0];
        }
      });
  return out;
}

}  // namespace

ConvergenceReport conditional_convergence(const ProcessSpec& proc, const DomainSpec& domain,
                                          const InitialDistribution& nu1, const InitialDistribution& nu2,
                                          const std::vector<double>& time_grid, std::int64_t n_traj, double dt,
                                          const BinSpec& bins, std::uint64_t seed, const StepOptions& step,
                                          ExecPolicy policy) {
  if (n_traj < 1 || time_grid.empty() || !(dt > 0)) throw UsageError("convergence needs n_traj >= 1, dt > 0 and times");
  for (std::size_t i = 1; i < time_grid.size(); ++i)
    if (!(time_grid[i] > time_grid[i - 1])) throw UsageError("time grid must be increasing");
  check_process(proc);
  const StreamFactory f(seed);
  const auto p1 = conditioned_paths(proc, domain, nu1, time_grid, n_traj, dt, f, "qsd.converge.nu1", step, policy);
  const auto p2 = conditioned_paths(proc, domain, nu2, time_grid, n_traj, dt, f, "qsd.converge.nu2", step, policy);
  const std::size_t T = time_grid.size();
  ConvergenceReport rep;
  std::vector<double> ft, fy, fw;
  for (std::size_t k = 0; k < T; ++k) {
    Histogram h1(bins.lo, bins.hi, bins.bins), h2 = h1;
    for (std::int64_t i = 0; i < n_traj; ++i) {
      const double a = p1[static_cast<std::size_t>(i) * T + k], b = p2[static_cast<std::size_t>(i) * T + k];
      if (!std::isnan(a)) h1.add(a);
      if (!std::isnan(b)) h2.add(b);
    }
    ConvergenceRow row;
    row.t = time_grid[k];
    row.survivors1 = static_cast<std::int64_t>(h1.total() + h1.dropped);
    row.survivors2 = static_cast<std::int64_t>(h2.total() + h2.dropped);
    if (row.survivors1 == 0 || row.survivors2 == 0) {
      row.tv = std::numeric_limits<double>::quiet_NaN();
      rep.rows.push_back(row);
      continue;
    }
    row.tv = tv_distance(h1, h2);
    const auto m1 = h1.masses(), m2 = h2.masses();
    const double inv = 1.0 / row.survivors1 + 1.0 / row.survivors2;
    double floor = 0.0, var = 0.0;
    for (std::size_t b = 0; b < m1.size(); ++b) {
      const double p = 0.5 * (m1[b] + m2[b]);
      floor += std::sqrt(p * (1 - p) * inv);
      var += 0.25 * p * (1 - p) * inv;
    }
    row.noise_floor = 0.5 * std::sqrt(2 / std::acos(-1.0)) * floor;
    rep.rows.push_back(row);
    // Near-disjoint supports saturate the distance at 1 and carry no rate information.
    if (row.survivors1 >= 100 && row.survivors2 >= 100 && row.tv > 2 * row.noise_floor && row.tv < 0.99) {
      ft.push_back(row.t);
      fy.push_back(std::log(row.tv));
      fw.push_back(row.tv * row.tv / var);
    }
  }
  if (rep.rows.back().survivors1 < 100 && ft.empty()) throw NumericalError("survivor starvation: fewer than 100 survivors");
  rep.n_fit = static_cast<int>(ft.size());
  if (ft.size() < 3) {
    rep.flag = "fewer than 3 points above the noise floor";
    return rep;
  }
  const LinearFit fit = weighted_linear_fit(ft, fy, fw);
  rep.M_hat = -fit.slope;
  rep.stderr_ = fit.se_slope;
  rep.ci_lo = rep.M_hat - kZ95 * rep.stderr_;
  rep.ci_hi = rep.M_hat + kZ95 * rep.stderr_;
  rep.fitted = true;
  if (!(rep.ci_lo > 0)) rep.flag = "rate not significantly positive";
  return rep;
}

std::vector<PhiProbe> phi_probe(const ProcessSpec& proc, const DomainSpec& domain, const std::vector<State>& probes,
                                double t_probe, std::int64_t n_traj, double lambda_hat, double dt,
                                std::uint64_t seed, const StepOptions& step, ExecPolicy policy) {
  if (probes.empty() || n_traj < 1 || !(t_probe > 0) || !(dt > 0))
    throw UsageError("phi probes need probe states, n_traj >= 1, t_probe > 0 and dt > 0");
  check_process(proc);
  for (const auto& s : probes)
    if (!domain.contains(proc.potential, s.x)) throw UsageError("phi probe state is not in D");
  const StreamFactory f(seed);
  const std::int64_t steps = steps_for(t_probe, dt);
  const std::int64_t P = static_cast<std::int64_t>(probes.size());
  std::vector<char> alive(static_cast<std::size_t>(P * n_traj), 0);
  for_each_index_local(
      P * n_traj, policy, [&] { return LocalStepper{Stepper(proc, step)}; },
      [&](LocalStepper& L, std::int64_t idx) {
        RngStream rng = f.stream("qsd.phi_probe", static_cast<std::uint64_t>(idx));
        State s = probes[idx / n_traj];
        for (std::int64_t n = 0; n < steps; ++n) {
          try {
            L.st.advance(s, dt, rng);
          } catch (const SingularityStall&) {
            return;
          }
          if (!domain.contains(proc.potential, s.x)) return;
        }
        alive[idx] = 1;
      });
  std::vector<PhiProbe> out(P);
  const double g = std::exp(lambda_hat * steps * dt);
  for (std::int64_t p = 0; p < P; ++p) {
    auto& r = out[p];
    r.state = probes[p];
    r.n = n_traj;
    r.survivors = std::count(alive.begin() + p * n_traj, alive.begin() + (p + 1) * n_traj, 1);
    if (r.survivors == 0) throw NumericalError("zero survivors at phi probe " + std::to_string(p));
    const double q = static_cast<double>(r.survivors) / n_traj;
    r.phi = g * q;
    r.stderr_ = g * std::sqrt(q * (1 - q) / n_traj);
  }
  const double norm = out[0].phi;
  for (auto& r : out) {
    r.phi /= norm;
    r.stderr_ /= norm;
  }
  out[0].phi = 1.0;
  return out;
}

FixedPointCheck qsd_fixed_point_check(const ProcessSpec& proc, const DomainSpec& domain, const QSDReport& fv,
                                      double delta_t, double dt, std::uint64_t seed, const StepOptions& step,
                                      ExecPolicy policy) {
  if (fv.ensemble.empty()) throw UsageError("fixed-point check needs a Fleming-Viot ensemble");
  if (!(delta_t > 0) || !(dt > 0)) throw UsageError("fixed-point check needs delta_t > 0 and dt > 0");
  const StreamFactory f(seed);
  const std::int64_t N = static_cast<std::int64_t>(fv.ensemble.size()), steps = steps_for(delta_t, dt);
  std::vector<double> xs(N, std::numeric_limits<double>::quiet_NaN());
  for_each_index_local(
      N, policy, [&] { return LocalStepper{Stepper(proc, step)}; },
      [&](LocalStepper& L, std::int64_t i) {
        RngStream rng = f.stream("qsd.fixed_point", static_cast<std::uint64_t>(i));
        State s = fv.ensemble[i];
        for (std::int64_t n = 0; n < steps; ++n) {
          try {
            L.st.advance(s, dt, rng);
          } catch (const SingularityStall&) {
            return;
          }
          if (!domain.contains(proc.potential, s.x)) return;
        }
        xs[i] = s.x[0];
      });
  Histogram h(fv.x_hist.lo, fv.x_hist.hi, fv.x_hist.bins());
  FixedPointCheck c;
  c.n = N;
  for (double x : xs)
    if (!std::isnan(x)) {
      h.add(x);
      ++c.survivors;
    }
  if (c.survivors == 0) throw NumericalError("no survivors after the extra propagation");
  const auto ref = fv.x_hist.masses(), got = h.masses();
  c.passed = true;
  for (int b = 0; b < h.bins(); ++b) {
    const double sd = std::sqrt(ref[b] * (1 - ref[b]) / static_cast<double>(c.survivors));
    c.bins.push_back({h.bin_lo(b), h.bin_lo(b) + h.width(), ref[b], got[b], sd});
    const double diff = std::abs(got[b] - ref[b]);
    const double z = sd > 0 ? diff / sd : (diff > 0 ? std::numeric_limits<double>::infinity() : 0.0);
    c.max_z = std::max(c.max_z, z);
    if (z > 3) c.passed = false;
  }
  return c;
}

}  // namespace qsdlab
