#include <cmath>

#include "doctest.h"
#include "qsdlab/cutoffs.hpp"
#include "qsdlab/dawson.hpp"
#include "qsdlab/errors.hpp"
#include "qsdlab/lyapunov.hpp"

using namespace qsdlab;

namespace {

ProcessSpec quartic(Family f) {
  ProcessSpec p;
  p.family = f;
  p.potential.kind = PotentialKind::PolyConfining;
  p.potential.poly_k = 4.0;
  return p;
}

State random_state(const ProcessSpec& p, RngStream& r, double scale) {
  State s = make_state(p);
  for (auto& x : s.x) x = scale * r.normal();
  for (auto& v : s.v) v = scale * r.normal();
  for (auto& a : s.aux) a = scale * r.normal();
  return s;
}

}  // namespace

TEST_CASE("Dawson integral") {
  CHECK(dawson(0.0) == 0.0);
  CHECK(dawson(-1.0) == -dawson(1.0));
  CHECK(dawson(1.0) == doctest::Approx(0.5380795069127684).epsilon(1e-12));
  CHECK(dawson(30.0) == doctest::Approx(1 / 60.0).epsilon(1e-3));
  CHECK(dawson_max() == doctest::Approx(0.5410442246).epsilon(1e-6));
  CHECK(dawson_argmax() == doctest::Approx(0.9241388730).epsilon(1e-8));
  // d/dz int_0^z D = D
  const double h = 1e-5;
  CHECK((dawson_integral(0.7 + h) - dawson_integral(0.7 - h)) / (2 * h) == doctest::Approx(dawson(0.7)).epsilon(1e-8));
}

TEST_CASE("cutoffs are smooth gates with bounded slope") {
  const Jet mid = smoothstep(0.5);
  CHECK(mid.f == doctest::Approx(0.5));
  CHECK(mid.d1 == doctest::Approx(15.0 / 8.0));
  for (auto kind : {Cutoff::Kind::StepDown, Cutoff::Kind::StepUp, Cutoff::Kind::BandInside, Cutoff::Kind::BandOutside}) {
    const Cutoff c(kind, 1.0, 3.0);
    for (double z = -4; z <= 4; z += 0.013) {
      const Jet j = c(z);
      CHECK((j.f >= 0 && j.f <= 1));
      CHECK(std::abs(j.d1) <= 15.0 / 8.0 / 2.0 + 1e-12);
      const double h = 1e-6;
      CHECK(j.d1 == doctest::Approx((c.value(z + h) - c.value(z - h)) / (2 * h)).epsilon(1e-5).scale(1.0));
    }
  }
  CHECK(Cutoff(Cutoff::Kind::StepDown, 1, 3).value(0.5) == 1.0);
  CHECK(Cutoff(Cutoff::Kind::StepDown, 1, 3).value(3.5) == 0.0);
  CHECK(Cutoff(Cutoff::Kind::BandInside, 1, 3).value(-0.5) == 1.0);
  CHECK(Cutoff(Cutoff::Kind::BandOutside, 1, 3).value(-3.5) == 1.0);
}

TEST_CASE("drift ratio matches the generator applied to W by differences") {
  SelectOptions so;
  so.confirm = false;
  RngStream r = StreamFactory(9).stream("test.ratio", 0);
  for (auto [fam, pf] : {std::pair{LyapunovFamily::GLRegular, Family::GeneralizedLangevin},
                         std::pair{LyapunovFamily::NoseHoover, Family::NoseHoover}}) {
    const ProcessSpec proc = quartic(pf);
    const double delta = fam == LyapunovFamily::NoseHoover ? 0.8 : 0.5;
    const LyapunovParams p = select_params(fam, proc, delta, so);
    const ScalarField W = finite_difference_field([&](const State& s) { return eval_W(p, proc, s).value; }, 1e-4);
    for (int i = 0; i < 10; ++i) {
      const State s = random_state(proc, r, 0.6);
      const double w = eval_W(p, proc, s).value;
      CHECK(apply_generator(proc, W, s) / w == doctest::Approx(drift_ratio(p, proc, s)).epsilon(1e-4).scale(1.0));
    }
  }
}

TEST_CASE("Nose-Hoover bound witnesses") {
  const ProcessSpec proc = quartic(Family::NoseHoover);
  SelectOptions so;
  so.confirm = false;
  const auto p = std::get<NHParams>(select_params(LyapunovFamily::NoseHoover, proc, 0.8, so));
  CHECK(p.h_star < 1 / (8 * dawson_max() * dawson_max()));
  RngStream r = StreamFactory(2).stream("test.nh_witness", 0);
  for (int k = 0; k < 5; ++k) {
    const double lo = std::pow(10.0, k);
    for (int i = 0; i < 100; ++i) {
      const State s = sample_energy_slab(proc, lo, 10 * lo, r);
      const NHParts t = nh_parts(p, proc, s);
      CHECK(std::abs(t.psi0 + t.psi1 + t.psi2) <= p.eps_star * t.H);
      CHECK(t.grad_v_phi_norm <= 1.0 + 1e-12);
      const WValue w = eval_W(p, proc, s);
      CHECK(w.F >= 1.0);
      CHECK(w.F <= p.c_upper * t.H * (1 + 1e-9));
      CHECK(std::pow(w.F, p.delta) <= std::pow(p.c_upper * t.H, p.delta) * (1 + 1e-9));  // log W
    }
  }
}

TEST_CASE("selected GL-regular parameters satisfy their inequalities") {
  const ProcessSpec proc = quartic(Family::GeneralizedLangevin);
  const LyapunovParams p = select_params(LyapunovFamily::GLRegular, proc, 0.5);
  for (const auto& q : feasibility_inequalities(p, proc)) CHECK_MESSAGE(q.margin > 0, q.name);
  CHECK_NOTHROW(check_params(p, proc));
  auto bad = std::get<GLRegularParams>(p);
  bad.beta = bad.k;
  CHECK_THROWS_AS(check_params(LyapunovParams(bad), proc), ConfigError);
}

TEST_CASE("shell construction") {
  const auto e = energy_shells({10, 100, 1000});
  REQUIRE(e.size() == 3);
  CHECK(e[2].lo == 1000);
  CHECK(e[2].hi == doctest::Approx(10000));
  const auto c = collision_shells({0.5, 0.4, 0.3});
  REQUIRE(c.size() == 2);
  CHECK(c[0].kind == Shell::Kind::Collision);
  CHECK(c[1].lo == 0.3);
}

TEST_CASE("Nose-Hoover derivatives inside the gates") {
  const ProcessSpec proc = quartic(Family::NoseHoover);
  SelectOptions so;
  so.confirm = false;
  const LyapunovParams p = select_params(LyapunovFamily::NoseHoover, proc, 0.8, so);
  const auto& q = std::get<NHParams>(p);
  RngStream r = StreamFactory(12).stream("test.nh_gates", 0);
  int active = 0;
  for (int i = 0; i < 20000 && active < 200; ++i) {
    State s = make_state(proc);
    s.aux[0] = -(q.y_star + 7) + (q.y_star + 9) * r.uniform();
    s.v[0] = 6 * r.normal();
    s.x[0] = 4 * r.normal();
    const NHParts t = nh_parts(q, proc, s);
    if (t.psi1 == 0 && t.psi2 == 0) continue;
    ++active;
    const FieldDerivatives d = F_derivatives(p, proc, s);
    auto shifted = [&](double* c, double h) {
      const double keep = *c;
      *c = keep + h;
      const double a = eval_F(p, proc, s);
      *c = keep - h;
      const double b = eval_F(p, proc, s);
      *c = keep;
      return std::pair{a, b};
    };
    const double h = 1e-5;
    auto [xa, xb] = shifted(&s.x[0], h);
    auto [va, vb] = shifted(&s.v[0], h);
    auto [ya, yb] = shifted(&s.aux[0], h);
    const double scale = 1 + std::abs(d.grad.x[0]) + std::abs(d.grad.v[0]) + std::abs(d.grad.aux[0]);
    CHECK(std::abs(d.grad.x[0] - (xa - xb) / (2 * h)) / scale < 1e-6);
    CHECK(std::abs(d.grad.v[0] - (va - vb) / (2 * h)) / scale < 1e-6);
    CHECK(std::abs(d.grad.aux[0] - (ya - yb) / (2 * h)) / scale < 1e-6);
    auto [la, lb] = shifted(&s.v[0], 1e-3);
    CHECK(std::abs(d.lap_v - (la - 2 * eval_F(p, proc, s) + lb) / 1e-6) < 1e-3);
  }
  CHECK(active == 200);
}
