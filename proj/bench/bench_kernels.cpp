// Serial reference vs OpenMP kernels on the shipped harmonic and quartic cases.
#include <benchmark/benchmark.h>

#include "qsdlab/killed_sim.hpp"
#include "qsdlab/lyapunov.hpp"
#include "qsdlab/qsd_estimate.hpp"

using namespace qsdlab;

namespace {

ProcessSpec harmonic_kl() {
  ProcessSpec p;
  p.family = Family::KineticLangevin;
  p.gamma = 1.0;
  return p;
}

ExecPolicy policy_of(const benchmark::State& st) { return st.range(0) ? ExecPolicy::Parallel : ExecPolicy::Serial; }

void BM_survival(benchmark::State& st) {
  const ProcessSpec p = harmonic_kl();
  const DomainSpec dom = DomainSpec::box({-1.0}, {1.0});
  InitialDistribution init;
  init.point = make_state(p);
  for (auto _ : st) {
    auto tab = survival_curve(init, p, dom, 1e-3, {0.5, 1.0}, 2000, 3, {}, policy_of(st));
    benchmark::DoNotOptimize(tab.rows.back().survivors);
  }
}

void BM_fleming_viot(benchmark::State& st) {
  const ProcessSpec p = harmonic_kl();
  const DomainSpec dom = DomainSpec::box({-1.0}, {1.0});
  InitialDistribution init;
  init.point = make_state(p);
  FVOptions o;
  o.n_particles = 2000;
  o.dt = 1e-3;
  o.t_burnin = 0.2;
  o.t_sample = 0.5;
  o.policy = policy_of(st);
  for (auto _ : st) {
    auto r = fleming_viot(p, dom, init, o, 3);
    benchmark::DoNotOptimize(r.lambda_hat);
  }
}

void BM_verify_c3(benchmark::State& st) {
  ProcessSpec p;
  p.family = Family::GeneralizedLangevin;
  p.potential.kind = PotentialKind::PolyConfining;
  p.potential.poly_k = 4.0;
  SelectOptions so;
  so.confirm = false;
  const LyapunovParams params = select_params(LyapunovFamily::GLRegular, p, 0.5, so);
  C3Options o;
  o.compute_b_n = false;
  for (auto _ : st) {
    auto r = verify_C3(params, p, energy_shells({10, 100, 1000}), 500, 5, o, policy_of(st));
    benchmark::DoNotOptimize(r.passed);
  }
}

}  // namespace

BENCHMARK(BM_survival)->Arg(0)->Arg(1)->ArgName("parallel")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_fleming_viot)->Arg(0)->Arg(1)->ArgName("parallel")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_verify_c3)->Arg(0)->Arg(1)->ArgName("parallel")->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
