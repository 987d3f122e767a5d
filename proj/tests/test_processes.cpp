#include <cmath>

#include "doctest.h"
#include "qsdlab/processes.hpp"

using namespace qsdlab;

namespace {

State random_state(const ProcessSpec& p, RngStream& r, double scale) {
  State s = make_state(p);
  for (auto& x : s.x) x = scale * r.normal();
  for (auto& v : s.v) v = scale * r.normal();
  for (auto& a : s.aux) a = scale * r.normal();
  return s;
}

double sq(const std::vector<double>& a) {
  double s = 0;
  for (double x : a) s += x * x;
  return s;
}

}  // namespace

TEST_CASE("energy dissipation identities of the generator") {
  RngStream r = StreamFactory(3).stream("test.generator", 0);
  ProcessSpec gl;
  gl.family = Family::GeneralizedLangevin;
  gl.gamma = 0.7;
  gl.alpha_c = 1.3;
  gl.lambda_c = 0.9;
  gl.potential.kind = PotentialKind::PolyConfining;
  gl.potential.dim_d = 2;
  gl.potential.poly_k = 4;
  ProcessSpec nh = gl;
  nh.family = Family::NoseHoover;
  for (int i = 0; i < 200; ++i) {
    const State s = random_state(gl, r, 1.5);
    const double n = gl.dim();
    CHECK(apply_generator(gl, hamiltonian_derivatives(gl, s), s) ==
          doctest::Approx(-gl.gamma * sq(s.v) - gl.alpha_c * sq(s.aux) + (gl.gamma + gl.alpha_c) * n));
    const State t = random_state(nh, r, 1.5);
    CHECK(apply_generator(nh, hamiltonian_derivatives(nh, t), t) ==
          doctest::Approx(-t.aux[0] * n - nh.gamma * sq(t.v) + nh.gamma * n));
  }
}

TEST_CASE("callable and difference fields agree with exact derivatives") {
  ProcessSpec kl;
  kl.potential.dim_d = 2;
  RngStream r = StreamFactory(4).stream("test.fd", 0);
  auto H = [&](const State& s) { return hamiltonian(kl, s).value(); };
  const ScalarField fd = finite_difference_field(H);
  for (int i = 0; i < 20; ++i) {
    const State s = random_state(kl, r, 1.0);
    CHECK(apply_generator(kl, fd, s) ==
          doctest::Approx(apply_generator(kl, hamiltonian_derivatives(kl, s), s)).epsilon(1e-5).scale(1.0));
  }
}

TEST_CASE("process consistency checks") {
  ProcessSpec p;
  p.family = Family::NoseHoover;
  p.gamma = 0.0;
  CHECK_THROWS(check_process(p));
  p.family = Family::GeneralizedLangevin;
  p.alpha_c = 0.0;
  CHECK_THROWS(check_process(p));
  CHECK(parse_family("nose-hoover") == Family::NoseHoover);
  CHECK(to_string(Family::KineticLangevin) == "kinetic-langevin");
}
