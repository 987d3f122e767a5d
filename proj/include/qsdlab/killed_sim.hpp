#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qsdlab/domain.hpp"
#include "qsdlab/errors.hpp"
#include "qsdlab/parallel.hpp"
#include "qsdlab/processes.hpp"
#include "qsdlab/rng.hpp"

namespace qsdlab {

// Step-size underflow at a singularity of V; carries the last accepted state.
struct SingularityStall : NumericalError {
  SingularityStall(const std::string& what, State s) : NumericalError(what), state(std::move(s)) {}
  State state;
  double time = 0.0;
};

enum class Integrator { EulerMaruyama, Splitting };

struct StepOptions {
  Integrator integrator = Integrator::EulerMaruyama;
  int max_halvings = 10;               // dt_min = dt / 2^max_halvings
  double displacement_fraction = 0.1;  // of the smallest pair distance
};

// Euler-Maruyama with reject-and-halve. noise holds noise_dim() standard normals
// (2*noise_dim() for the splitting scheme). On rejection the Brownian increment is
// split by a Brownian bridge using refine; without refine the midpoint split is used.
State step(const ProcessSpec& proc, const State& s, double dt, std::span<const double> noise,
           RngStream* refine = nullptr, const StepOptions& opt = {});

// Number of standard normals consumed by one step.
int noise_per_step(const ProcessSpec& proc, const StepOptions& opt);

// Reusable stepping engine that avoids allocations in the inner loop.
class Stepper {
 public:
  Stepper(const ProcessSpec& proc, StepOptions opt);
  // Advances s in place by dt drawing normals from rng.
  void advance(State& s, double dt, RngStream& rng);
  void advance_with_noise(State& s, double dt, std::span<const double> noise, RngStream* refine);
  const ProcessSpec& process() const { return proc_; }

 private:
  bool propose(const State& s, double dt, std::span<const double> dw, State& out, bool& blowup);
  void advance_increment(State& s, double dt, std::vector<double>& dw, RngStream* refine, int depth);

  const ProcessSpec& proc_;
  StepOptions opt_;
  NoiseLayout layout_;
  bool singular_;
  std::vector<double> gV_, noise_;
  State drift_, trial_;
  // GL splitting: per-coordinate 2x2 OU transition and Cholesky factor.
  double ou_cached_dt_ = -1.0;
  double ou_E_[4]{}, ou_L_[3]{};
  void ou_coeffs(double h);
};

struct KilledTrajectoryResult {
  enum class Outcome { Survived, Exited };
  Outcome outcome = Outcome::Survived;
  State final_state;  // survived state, or interpolated exit state
  double exit_time = 0.0;
  std::int64_t n_steps = 0;
  std::vector<State> path_samples;
};

struct SimulateOptions {
  StepOptions step;
  int thin = 0;  // record every thin-th state when > 0
};

KilledTrajectoryResult simulate_killed(const State& initial, const ProcessSpec& proc, const DomainSpec& domain,
                                       double dt, double t_max, RngStream& rng, const SimulateOptions& opt = {});

// Initial law for ensembles.
struct InitialDistribution {
  enum class Kind { Point, UniformBox };
  Kind kind = Kind::Point;
  State point;                   // Point: the state; UniformBox: v/aux used when !maxwellian
  std::vector<double> lo, hi;    // UniformBox in x, rejected against O
  bool maxwellian = false;       // v (and aux) drawn from N(0, 1)
};

State sample_initial(const InitialDistribution& init, const ProcessSpec& proc, const DomainSpec& domain,
                     RngStream& rng);

struct SurvivalRow {
  double t;
  std::int64_t survivors;
  std::int64_t n;
  double stderr_;
};

struct SurvivalTable {
  std::vector<SurvivalRow> rows;
  std::int64_t n_stalls = 0;
  std::vector<double> exit_times;  // +inf for survivors, per trajectory index
};

SurvivalTable survival_curve(const InitialDistribution& init, const ProcessSpec& proc, const DomainSpec& domain,
                             double dt, const std::vector<double>& time_grid, std::int64_t n_traj,
                             std::uint64_t seed, const SimulateOptions& opt = {},
                             ExecPolicy policy = ExecPolicy::Parallel);

struct TrajectorySummary {
  std::uint64_t index;
  std::string outcome;  // survived | exited | stall
  double exit_time;
  std::int64_t n_steps;
};

std::vector<TrajectorySummary> simulate_ensemble(const InitialDistribution& init, const ProcessSpec& proc,
                                                 const DomainSpec& domain, double dt, double t_max,
                                                 std::int64_t n_traj, std::uint64_t seed,
                                                 const SimulateOptions& opt = {},
                                                 ExecPolicy policy = ExecPolicy::Parallel);

struct ExitBoundReport {
  double estimate;
  double stderr_;
  double bound;
  double c;
  std::string c_derivation;
  double H0;
  std::int64_t n_traj;
  std::int64_t hits;
  bool passed;
};

ExitBoundReport check_exit_bound(const ProcessSpec& proc, const State& x0, double R, double t, std::int64_t n_traj,
                                 std::uint64_t seed, double dt = 1e-3, const StepOptions& opt = {},
                                 ExecPolicy policy = ExecPolicy::Parallel);

}  // namespace qsdlab
