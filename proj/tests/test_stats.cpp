#include <cmath>

#include "doctest.h"
#include "qsdlab/errors.hpp"
#include "qsdlab/qsd_estimate.hpp"
#include "qsdlab/stats.hpp"

using namespace qsdlab;

TEST_CASE("histogram and total variation") {
  Histogram a(0, 1, 4), b(0, 1, 4);
  a.add(0.1);
  a.add(0.6);
  a.add(1.5);
  b.add(0.1);
  b.add(0.1);
  CHECK(a.total() == 2);
  CHECK(a.dropped == 1);
  CHECK(tv_distance(a, b) == doctest::Approx(0.5));
  CHECK(tv_distance(a, a) == 0.0);
}

TEST_CASE("weighted linear fit recovers a line") {
  std::vector<double> t, y, w;
  for (int i = 0; i < 10; ++i) {
    t.push_back(i);
    y.push_back(3 - 0.5 * i);
    w.push_back(1.0);
  }
  const LinearFit f = weighted_linear_fit(t, y, w);
  CHECK(f.slope == doctest::Approx(-0.5));
  CHECK(f.intercept == doctest::Approx(3));
}

TEST_CASE("decay rate from an exact exponential table") {
  SurvivalTable tab;
  const std::int64_t n = 1000000;
  for (int i = 0; i <= 20; ++i) {
    const double t = 0.1 * i;
    const auto s = static_cast<std::int64_t>(std::llround(n * std::exp(-2 * t)));
    tab.rows.push_back({t, s, n, 0.0});
  }
  const DecayEstimate d = estimate_decay_rate(tab);
  CHECK(d.lambda_hat == doctest::Approx(2.0).epsilon(1e-3));
  CHECK_FALSE(d.no_decay);
  CHECK(d.ci_lo < 2.0 + 1e-3);
  CHECK(d.ci_hi > 2.0 - 1e-3);
}

TEST_CASE("no decay is flagged and short tables are rejected") {
  SurvivalTable tab;
  for (int i = 0; i <= 20; ++i) tab.rows.push_back({0.1 * i, 1000, 1000, 0.0});
  CHECK(estimate_decay_rate(tab).no_decay);
  SurvivalTable tiny;
  for (int i = 0; i < 3; ++i) tiny.rows.push_back({0.1 * i, 1000, 1000, 0.0});
  CHECK_THROWS_AS(estimate_decay_rate(tiny), NumericalError);
}

TEST_CASE("batch means") {
  std::vector<double> s(1000, 2.0);
  const MeanEstimate m = batch_means(s, 10);
  CHECK(m.mean == 2.0);
  CHECK(m.stderr_ == 0.0);
}
