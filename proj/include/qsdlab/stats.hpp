#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace qsdlab {

// Fixed-width histogram on [lo, hi); samples outside are counted in `dropped`.
struct Histogram {
  double lo = 0.0, hi = 1.0;
  std::vector<double> weight;
  double dropped = 0.0;

  Histogram() = default;
  Histogram(double lo, double hi, int bins);
  int bins() const { return static_cast<int>(weight.size()); }
  double width() const { return (hi - lo) / bins(); }
  double bin_lo(int i) const { return lo + i * width(); }
  void add(double x, double w = 1.0);
  double total() const;
  // Normalised masses summing to 1 (all zeros for an empty histogram).
  std::vector<double> masses() const;
};

// Binned total variation 0.5 sum |p_i - q_i| of two histograms on the same bins.
double tv_distance(const Histogram& a, const Histogram& b);
double tv_distance(std::span<const double> p, std::span<const double> q);

struct MeanEstimate {
  double mean = 0.0;
  double stderr_ = 0.0;
  int n_batches = 0;
};

// Batch means of a time series: the mean of batch averages and its standard error.
MeanEstimate batch_means(std::span<const double> series, int n_batches);

// Two-sided normal quantile used for 95% intervals.
inline constexpr double kZ95 = 1.959963984540054;

struct LinearFit {
  double intercept = 0.0, slope = 0.0;
  double se_intercept = 0.0, se_slope = 0.0;
  double chi2 = 0.0;
  int n = 0;
};

// Weighted least squares y ~ a + b t with weights w_i = 1/var_i.
LinearFit weighted_linear_fit(std::span<const double> t, std::span<const double> y, std::span<const double> w);

struct QuadraticFit {
  double c0 = 0.0, c1 = 0.0, c2 = 0.0;
  double se_c2 = 0.0;
};
// Weighted y ~ c0 + c1 t + c2 t^2, used to flag curvature.
QuadraticFit weighted_quadratic_fit(std::span<const double> t, std::span<const double> y,
                                    std::span<const double> w);

}  // namespace qsdlab
