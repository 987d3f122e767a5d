#include "qsdlab/dawson.hpp"

#include <array>
#include <cmath>
#include <utility>
#include <vector>

namespace qsdlab {

double dawson(double z) {
  const double a = std::abs(z);
  const double sign = z < 0 ? -1.0 : 1.0;
  if (a == 0.0) return 0.0;
  if (a < 6.0) {
    // exp(-z^2) * sum z^(2n+1) / (n! (2n+1)); all terms positive.
    const double z2 = a * a;
    double term = a, sum = a;  // term = z^(2n+1)/n!
    for (int n = 1; n < 400; ++n) {
      term *= z2 / n;
      const double add = term / (2 * n + 1);
      sum += add;
      if (add < 1e-17 * sum) break;
    }
    return sign * std::exp(-z2) * sum;
  }
  // 1/(2z) * sum (2n-1)!! / (2z^2)^n, truncated before the terms start growing.
  const double x = 1.0 / (2.0 * a * a);
  double term = 1.0, sum = 1.0;
  for (int n = 1; n < 200; ++n) {
    const double next = term * (2 * n - 1) * x;
    if (next > term) break;
    term = next;
    sum += term;
    if (term < 1e-17 * sum) break;
  }
  return sign * sum / (2.0 * a);
}

namespace {
std::pair<double, double> compute_max() {
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = 0.5, b = 1.5;
  double c = b - g * (b - a), d = a + g * (b - a);
  double fc = dawson(c), fd = dawson(d);
  while (b - a > 1e-12) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - g * (b - a);
      fc = dawson(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + g * (b - a);
      fd = dawson(d);
    }
  }
  const double z = 0.5 * (a + b);
  return {z, dawson(z)};
}

const std::pair<double, double>& max_cache() {
  static const std::pair<double, double> m = compute_max();
  return m;
}

// 10-point Gauss-Legendre nodes/weights on [-1, 1].
constexpr std::array<double, 5> kGLx = {0.1488743389816312, 0.4333953941292472, 0.6794095682990244,
                                       0.8650633666889845, 0.9739065285171717};
constexpr std::array<double, 5> kGLw = {0.2955242247147529, 0.2692667193099963, 0.2190863625159820,
                                       0.1494513491505806, 0.0666713443086881};

double gl10(double a, double b) {
  const double m = 0.5 * (a + b), h = 0.5 * (b - a);
  double s = 0.0;
  for (int i = 0; i < 5; ++i) s += kGLw[i] * (dawson(m + h * kGLx[i]) + dawson(m - h * kGLx[i]));
  return h * s;
}

constexpr double kPanel = 0.125;
constexpr int kPanels = 80;  // covers [0, 10]
constexpr double kSwitch = kPanel * kPanels;

const std::vector<double>& panel_table() {
  static const std::vector<double> table = [] {
    std::vector<double> t(kPanels + 1, 0.0);
    for (int k = 0; k < kPanels; ++k) t[k + 1] = t[k] + gl10(k * kPanel, (k + 1) * kPanel);
    return t;
  }();
  return table;
}

// Antiderivative of the large-argument expansion of D.
double tail_antiderivative(double s) {
  double out = 0.5 * std::log(s);
  double dfact = 1.0;  // (2n-1)!!
  const double s2 = s * s;
  double p = 1.0;
  for (int n = 1; n < 30; ++n) {
    dfact *= (2 * n - 1);
    p *= s2;
    const double t = dfact / (std::pow(2.0, n + 1) * 2.0 * n * p);
    out -= t;
    if (t < 1e-18) break;
  }
  return out;
}
}  // namespace

double dawson_max() { return max_cache().second; }
double dawson_argmax() { return max_cache().first; }

double dawson_integral(double z) {
  const double a = std::abs(z);
  const auto& t = panel_table();
  if (a < kSwitch) {
    const int k = static_cast<int>(a / kPanel);
    return t[k] + (a > k * kPanel ? gl10(k * kPanel, a) : 0.0);
  }
  return t[kPanels] + tail_antiderivative(a) - tail_antiderivative(kSwitch);
}

}  // namespace qsdlab
