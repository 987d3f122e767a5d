#include <cmath>

#include "doctest.h"
#include "qsdlab/errors.hpp"
#include "qsdlab/potentials.hpp"

using namespace qsdlab;

namespace {

PotentialSpec quartic(int n = 3) {
  PotentialSpec p;
  p.kind = PotentialKind::PolyConfining;
  p.dim_d = n;
  p.poly_k = 4.0;
  p.poly_c = 1.0;
  return p;
}

PotentialSpec lj_pair(int d = 2) {
  PotentialSpec p;
  p.kind = PotentialKind::SingularComposite;
  p.dim_d = d;
  p.n_particles = 2;
  p.quadratic_a0 = 1.0;
  InteractionSpec I;
  I.B = 1.0;
  I.beta = 12.0;
  I.phi_kind = PhiKind::LennardJonesTail;
  I.phi_c = 1.0;
  I.q_phi = 7.0;  // |d/dr (1/r^6)| = 6/r^7
  I.C_phi = 6.0;
  p.interaction = I;
  p.floor = auto_floor(p);
  return p;
}

void check_gradient(const PotentialSpec& p, std::vector<double> x) {
  const auto g = grad_potential(p, x);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double h = 1e-6 * std::max(1.0, std::abs(x[i]));
    auto xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    const double fd = (eval_potential(p, xp).value() - eval_potential(p, xm).value()) / (2 * h);
    CHECK(g[i] == doctest::Approx(fd).epsilon(1e-6).scale(1.0));
  }
}

}  // namespace

TEST_CASE("potential gradients match central differences") {
  PotentialSpec q;
  check_gradient(q, {0.3});
  check_gradient(quartic(), {0.4, -1.2, 2.0});
  check_gradient(lj_pair(), {0.1, 0.2, 1.2, -0.3});
  PotentialSpec b = quartic(2);
  b.perturbation = BumpPerturbation{0.7, {0.5, 0.0}, 1.0};
  check_gradient(b, {0.2, 0.3});
}

TEST_CASE("Hessian-vector products match the difference Hessian") {
  for (const auto& [p, x] : {std::pair{quartic(), std::vector<double>{0.4, -1.2, 2.0}},
                             std::pair{lj_pair(), std::vector<double>{0.1, 0.2, 1.2, -0.3}}}) {
    const int n = p.dim();
    const auto H = fd_hessian(p, x);
    std::vector<double> u(n), out(n);
    for (int i = 0; i < n; ++i) u[i] = 0.3 + 0.1 * i;
    hessian_vector(p, x, u, out);
    for (int i = 0; i < n; ++i) {
      double ref = 0.0;
      for (int j = 0; j < n; ++j) ref += H[i * n + j] * u[j];
      CHECK(out[i] == doctest::Approx(ref).epsilon(1e-5).scale(1.0));
    }
  }
}

TEST_CASE("coinciding particles are outside the admissible set") {
  const PotentialSpec p = lj_pair();
  const std::vector<double> x{0.5, 0.5, 0.5, 0.5};
  CHECK(eval_potential(p, x).is_outside());
  CHECK_FALSE(in_admissible_set(p, x));
  CHECK_THROWS_AS(eval_potential(p, x).value(), DomainError);
  CHECK(min_pair_distance(p, std::vector<double>{0, 0, 3, 4}) == doctest::Approx(5.0));
}

TEST_CASE("automatic floor keeps V >= 1") {
  const PotentialSpec p = lj_pair();
  const double rmin = std::pow(2.0, 1.0 / 6.0);  // minimiser of 1/r^12 - 1/r^6
  CHECK(eval_potential(p, std::vector<double>{-rmin / 2, 0, rmin / 2, 0}).value() >= 1.0 - 1e-12);
  CHECK(pair_minimum(*p.interaction, 2) == doctest::Approx(-0.25).epsilon(1e-6));
}

TEST_CASE("assumption validators") {
  SamplingPlan plan;
  PotentialSpec lj = lj_pair();
  CHECK(validate_assumptions(lj, AssumptionId::VInt, plan).passed);
  CHECK(validate_assumptions(lj, AssumptionId::VCoercive, plan).passed);
  PotentialSpec q = quartic(1);
  q.poly_constants = {0.5, 2.0, 2.0};
  CHECK(validate_assumptions(q, AssumptionId::VPolyXk, plan).passed);
  // Declared constants that contradict the growth must be caught.
  q.poly_constants = {1.5, 2.0, 2.0};
  CHECK_FALSE(validate_assumptions(q, AssumptionId::VPolyXk, plan).passed);
  CHECK(parse_assumption_id("V-int") == AssumptionId::VInt);
  CHECK_THROWS_AS(parse_assumption_id("V-bogus"), UsageError);
}
