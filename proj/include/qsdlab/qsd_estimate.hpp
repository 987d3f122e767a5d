#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qsdlab/killed_sim.hpp"
#include "qsdlab/stats.hpp"

namespace qsdlab {

struct BinSpec {
  double lo = -1.0, hi = 1.0;
  int bins = 20;
};

struct FVOptions {
  std::int64_t n_particles = 10000;
  double dt = 1e-4;
  double t_burnin = 2.0;
  double t_sample = 4.0;
  int n_batches = 20;
  double record_interval = 0.01;  // histogram snapshot spacing
  BinSpec x_bins{-1.0, 1.0, 20};  // histogram of x[0]
  BinSpec v_bins{-5.0, 5.0, 20};  // histogram of v[0]
  StepOptions step;
  ExecPolicy policy = ExecPolicy::Parallel;
};

struct PhiProbe {
  State state;
  std::int64_t survivors = 0;
  std::int64_t n = 0;
  double phi = 0.0;
  double stderr_ = 0.0;
};

struct QSDReport {
  double lambda_hat = 0.0;
  double lambda_stderr = 0.0;
  double lambda_ci_lo = 0.0, lambda_ci_hi = 0.0;
  std::int64_t kills = 0;
  std::int64_t n_particles = 0;
  double t_sample = 0.0;
  Histogram x_hist, v_hist;  // time averages over the sampling window
  std::vector<PhiProbe> phi_probes;
  double ess = 0.0;               // N_eff of the ancestral lines alive at the end of burn-in
  double resampling_rate = 0.0;   // kills per particle per unit time (= lambda_hat)
  double stationarity_gap = 0.0;  // TV between x-marginals of the two halves of the window
  std::int64_t n_stalls = 0;      // singularity stalls, treated as kills
  std::vector<State> ensemble;    // final particle states
};

// Fleming-Viot particle system: killed particles restart from a uniformly chosen survivor.
// Propagation is parallel over particles; resampling runs serially in index order.
// Throws ExtinctionError when every particle is killed in the same step.
QSDReport fleming_viot(const ProcessSpec& proc, const DomainSpec& domain, const InitialDistribution& init,
                       const FVOptions& opt, std::uint64_t seed);

struct DecayEstimate {
  double lambda_hat = 0.0;
  double stderr_ = 0.0;
  double ci_lo = 0.0, ci_hi = 0.0;
  double t_from = 0.0, t_to = 0.0;
  int n_points = 0;
  bool no_decay = false;
  bool curvature = false;  // quadratic term significant at 3 sigma
};

// Weighted least squares of log survival against t over the last half of the rows with
// at least 30 survivors. The standard error uses the covariance of nested survivor counts.
// Throws NumericalError when fewer than 5 such rows exist.
DecayEstimate estimate_decay_rate(const SurvivalTable& table);

struct ConvergenceRow {
  double t = 0.0;
  std::int64_t survivors1 = 0, survivors2 = 0;
  double tv = 0.0;
  double noise_floor = 0.0;  // expected TV between two samples of one law
};

struct ConvergenceReport {
  std::vector<ConvergenceRow> rows;
  double M_hat = 0.0;
  double stderr_ = 0.0;
  double ci_lo = 0.0, ci_hi = 0.0;
  int n_fit = 0;
  bool fitted = false;
  std::string flag;
};

// Binned TV between the conditioned x[0]-marginals started from nu1 and nu2, and the
// exponential rate fitted over the window where both have >= 100 survivors and the
// distance lies between twice the noise floor and 0.99. Throws NumericalError on survivor starvation.
ConvergenceReport conditional_convergence(const ProcessSpec& proc, const DomainSpec& domain,
                                          const InitialDistribution& nu1, const InitialDistribution& nu2,
                                          const std::vector<double>& time_grid, std::int64_t n_traj, double dt,
                                          const BinSpec& bins, std::uint64_t seed,
                                          const StepOptions& step = {}, ExecPolicy policy = ExecPolicy::Parallel);

// phi(x) ~ exp(lambda t) P_x(t < sigma_D), normalised so that the first probe is 1.
std::vector<PhiProbe> phi_probe(const ProcessSpec& proc, const DomainSpec& domain,
                                const std::vector<State>& probes, double t_probe, std::int64_t n_traj,
                                double lambda_hat, double dt, std::uint64_t seed, const StepOptions& step = {},
                                ExecPolicy policy = ExecPolicy::Parallel);

struct FixedPointBin {
  double lo, hi;
  double reference;   // time-averaged Fleming-Viot mass
  double propagated;  // mass after extra propagation and conditioning
  double sigma;       // binomial standard deviation at the survivor count
};

struct FixedPointCheck {
  std::vector<FixedPointBin> bins;
  std::int64_t survivors = 0;
  std::int64_t n = 0;
  double max_z = 0.0;
  bool passed = false;
};

// Propagates the final Fleming-Viot ensemble for delta_t without resampling, conditions on
// survival, and compares the x[0]-marginal with the time-averaged histogram bin by bin (3 sigma).
FixedPointCheck qsd_fixed_point_check(const ProcessSpec& proc, const DomainSpec& domain, const QSDReport& fv,
                                      double delta_t, double dt, std::uint64_t seed, const StepOptions& step = {},
                                      ExecPolicy policy = ExecPolicy::Parallel);

}  // namespace qsdlab
