#include <cmath>

#include "doctest.h"
#include "qsdlab/killed_sim.hpp"
#include "qsdlab/qsd_estimate.hpp"

using namespace qsdlab;

namespace {

ProcessSpec harmonic_kl() {
  ProcessSpec p;
  p.gamma = 1.0;
  return p;
}

InitialDistribution point_at(const ProcessSpec& p, double x) {
  InitialDistribution init;
  init.point = make_state(p);
  init.point.x[0] = x;
  return init;
}

}  // namespace

TEST_CASE("killed trajectories stop at the boundary") {
  const ProcessSpec p = harmonic_kl();
  const DomainSpec dom = DomainSpec::box({-1.0}, {1.0});
  RngStream r = StreamFactory(1).stream("test.killed", 0);
  int exited = 0;
  for (int i = 0; i < 200; ++i) {
    const auto res = simulate_killed(point_at(p, 0.5).point, p, dom, 1e-3, 5.0, r);
    if (res.outcome == KilledTrajectoryResult::Outcome::Exited) {
      ++exited;
      CHECK(std::abs(std::abs(res.final_state.x[0]) - 1.0) < 0.05);
      CHECK(res.exit_time <= 5.0);
    }
  }
  CHECK(exited > 100);
}

TEST_CASE("serial reference and OpenMP kernels give identical results") {
  const ProcessSpec p = harmonic_kl();
  const DomainSpec dom = DomainSpec::box({-1.0}, {1.0});
  set_workers(3);
  const auto a = survival_curve(point_at(p, 0.5), p, dom, 1e-3, {0.5, 1.0, 2.0}, 500, 11, {}, ExecPolicy::Serial);
  const auto b = survival_curve(point_at(p, 0.5), p, dom, 1e-3, {0.5, 1.0, 2.0}, 500, 11, {}, ExecPolicy::Parallel);
  REQUIRE(a.rows.size() == b.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) CHECK(a.rows[i].survivors == b.rows[i].survivors);
  CHECK(a.exit_times == b.exit_times);

  FVOptions o;
  o.n_particles = 300;
  o.dt = 1e-3;
  o.t_burnin = 0.2;
  o.t_sample = 0.3;
  o.policy = ExecPolicy::Serial;
  const auto f1 = fleming_viot(p, dom, point_at(p, 0.5), o, 5);
  o.policy = ExecPolicy::Parallel;
  const auto f2 = fleming_viot(p, dom, point_at(p, 0.5), o, 5);
  CHECK(f1.kills == f2.kills);
  CHECK(f1.lambda_hat == f2.lambda_hat);
  CHECK(f1.x_hist.weight == f2.x_hist.weight);
  set_workers(0);
}

TEST_CASE("killing at the start is an extinction") {
  const ProcessSpec p = harmonic_kl();
  const DomainSpec dom = DomainSpec::box({-1.0}, {1.0});
  InitialDistribution init = point_at(p, 0.999);
  init.point.v[0] = 1e4;
  FVOptions o;
  o.n_particles = 20;
  o.dt = 1e-3;
  o.t_burnin = 0.1;
  o.t_sample = 0.1;
  CHECK_THROWS_AS(fleming_viot(p, dom, init, o, 1), ExtinctionError);
}

TEST_CASE("exit bound check on a small harmonic case") {
  ProcessSpec p;
  p.family = Family::GeneralizedLangevin;
  State x0 = make_state(p);
  x0.x[0] = std::sqrt(2.0);  // H = 2
  const auto rep = check_exit_bound(p, x0, 50.0, 0.5, 500, 3);
  CHECK(rep.passed);
  CHECK(rep.H0 == doctest::Approx(2.0));
}
