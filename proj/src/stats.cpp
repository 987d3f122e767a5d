#include "qsdlab/stats.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <numeric>

#include "qsdlab/errors.hpp"

namespace qsdlab {

Histogram::Histogram(double lo_, double hi_, int bins) : lo(lo_), hi(hi_), weight(bins, 0.0) {
  if (!(hi_ > lo_) || bins < 1) throw UsageError("histogram needs lo < hi and at least one bin");
}

void Histogram::add(double x, double w) {
  if (!(x >= lo && x < hi)) {
    dropped += w;
    return;
  }
  int i = static_cast<int>((x - lo) / width());
  if (i >= bins()) i = bins() - 1;
  weight[i] += w;
}

double Histogram::total() const { return std::accumulate(weight.begin(), weight.end(), 0.0); }

std::vector<double> Histogram::masses() const {
  std::vector<double> m(weight.size(), 0.0);
  const double t = total();
  if (t > 0)
    for (std::size_t i = 0; i < m.size(); ++i) m[i] = weight[i] / t;
  return m;
}

double tv_distance(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw UsageError("total variation needs histograms on the same bins");
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += std::abs(p[i] - q[i]);
  return 0.5 * s;
}

double tv_distance(const Histogram& a, const Histogram& b) {
  if (a.lo != b.lo || a.hi != b.hi) throw UsageError("total variation needs histograms on the same bins");
  const auto p = a.masses(), q = b.masses();
  return tv_distance(p, q);
}

MeanEstimate batch_means(std::span<const double> series, int n_batches) {
  if (n_batches < 2) throw UsageError("batch means needs at least two batches");
  const std::size_t len = series.size() / n_batches;
  if (len == 0) throw UsageError("series shorter than the number of batches");
  std::vector<double> b(n_batches);
  for (int k = 0; k < n_batches; ++k)
    b[k] = std::accumulate(series.begin() + k * len, series.begin() + (k + 1) * len, 0.0) / len;
  MeanEstimate e;
  e.n_batches = n_batches;
  e.mean = std::accumulate(b.begin(), b.end(), 0.0) / n_batches;
  double ss = 0.0;
  for (double x : b) ss += (x - e.mean) * (x - e.mean);
  e.stderr_ = std::sqrt(ss / (n_batches - 1) / n_batches);
  return e;
}

namespace {

// Weighted normal equations; returns coefficients and their covariance (scaled by the
// reduced chi^2 when there are spare degrees of freedom and it exceeds 1).
void wls(std::span<const double> t, std::span<const double> y, std::span<const double> w, int p,
         Eigen::VectorXd& beta, Eigen::MatrixXd& cov, double& chi2) {
  const int n = static_cast<int>(t.size());
  if (static_cast<int>(y.size()) != n || static_cast<int>(w.size()) != n)
    throw UsageError("fit inputs must have equal lengths");
  if (n < p) throw UsageError("not enough points for the fit");
  Eigen::MatrixXd X(n, p);
  Eigen::VectorXd Y(n), W(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < p; ++j) X(i, j) = std::pow(t[i], j);
    Y(i) = y[i];
    W(i) = w[i];
  }
  const Eigen::MatrixXd A = X.transpose() * W.asDiagonal() * X;
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(A);
  beta = ldlt.solve(X.transpose() * W.asDiagonal() * Y);
  cov = ldlt.solve(Eigen::MatrixXd::Identity(p, p));
  const Eigen::VectorXd r = Y - X * beta;
  chi2 = (r.array().square() * W.array()).sum();
  if (n > p) {
    const double red = chi2 / (n - p);
    if (red > 1) cov *= red;
  }
}

}  // namespace

LinearFit weighted_linear_fit(std::span<const double> t, std::span<const double> y, std::span<const double> w) {
  Eigen::VectorXd b;
  Eigen::MatrixXd c;
  LinearFit f;
  wls(t, y, w, 2, b, c, f.chi2);
  f.intercept = b(0);
  f.slope = b(1);
  f.se_intercept = std::sqrt(c(0, 0));
  f.se_slope = std::sqrt(c(1, 1));
  f.n = static_cast<int>(t.size());
  return f;
}

QuadraticFit weighted_quadratic_fit(std::span<const double> t, std::span<const double> y,
                                    std::span<const double> w) {
  Eigen::VectorXd b;
  Eigen::MatrixXd c;
  double chi2 = 0.0;
  wls(t, y, w, 3, b, c, chi2);
  return {b(0), b(1), b(2), std::sqrt(c(2, 2))};
}

}  // namespace qsdlab
