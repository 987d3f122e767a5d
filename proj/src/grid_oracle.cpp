#include "qsdlab/grid_oracle.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <complex>

#include "qsdlab/errors.hpp"

namespace qsdlab {

namespace {

using SpMat = Eigen::SparseMatrix<double>;
using Vec = Eigen::VectorXd;

// A = -L as a sparse M-matrix.
SpMat build_operator(const ProcessSpec& proc, const GridOracleResult& g) {
  const int nx = g.nx, nv = g.nv;
  const double dx = g.dx(), dv = g.dv(), gam = proc.gamma;
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(nx) * nv * 5);
  std::vector<double> gx(1);
  for (int i = 0; i < nx; ++i) {
    const double x = g.x_center(i);
    const double xs[1] = {x};
    grad_potential(proc.potential, xs, gx);
    for (int j = 0; j < nv; ++j) {
      const double v = g.v_center(j);
      const int k = i * nv + j;
      double diag = 0.0;
      auto rate = [&](int ii, int jj, double r) {
        diag += r;
        if (ii >= 0 && ii < nx) trip.emplace_back(k, ii * nv + jj, -r);
      };
      // Transport in x: leaving the interval is absorption (no off-diagonal entry).
      if (v > 0) rate(i + 1, j, v / dx);
      else rate(i - 1, j, -v / dx);
      const double b = -gx[0] - gam * v;
      const double d = gam / (dv * dv);
      if (j + 1 < nv) rate(i, j + 1, std::max(b, 0.0) / dv + d);
      if (j > 0) rate(i, j - 1, std::max(-b, 0.0) / dv + d);
      trip.emplace_back(k, k, diag);
    }
  }
  SpMat A(nx * nv, nx * nv);
  A.setFromTriplets(trip.begin(), trip.end());
  A.makeCompressed();
  return A;
}

struct Eigenpair {
  double lambda;
  Vec vec;
  double residual;
  int iterations;
};

Eigenpair inverse_power(const SpMat& A, const Eigen::SparseLU<SpMat>& lu, double tol, int max_iter) {
  const Eigen::Index n = A.rows();
  Vec x = Vec::Ones(n) / std::sqrt(static_cast<double>(n));
  double lam = 0.0, res = 0.0;
  for (int it = 1; it <= max_iter; ++it) {
    Vec y = lu.solve(x);
    if (lu.info() != Eigen::Success) throw OracleError("sparse solve failed", std::nan(""));
    y /= y.norm();
    const Vec Ay = A * y;
    lam = y.dot(Ay);
    res = (Ay - lam * y).norm() / std::abs(lam);
    x = std::move(y);
    if (res < tol) return {lam, x, res, it};
  }
  throw OracleError("inverse power iteration did not converge", res);
}

}  // namespace

double GridOracleResult::phi_at(double x, double v) const {
  const double fx = std::clamp((x - x_lo) / dx() - 0.5, 0.0, nx - 1.0);
  const double fv = std::clamp((v + v_cut) / dv() - 0.5, 0.0, nv - 1.0);
  const int i = std::min(static_cast<int>(fx), nx - 2), j = std::min(static_cast<int>(fv), nv - 2);
  const double a = fx - i, b = fv - j;
  auto P = [&](int ii, int jj) { return phi[ii * nv + jj]; };
  return (1 - a) * (1 - b) * P(i, j) + a * (1 - b) * P(i + 1, j) + (1 - a) * b * P(i, j + 1) + a * b * P(i + 1, j + 1);
}

std::vector<double> GridOracleResult::mu_x() const {
  std::vector<double> m(nx, 0.0);
  for (int i = 0; i < nx; ++i)
    for (int j = 0; j < nv; ++j) m[i] += mu[i * nv + j];
  return m;
}

GridOracleResult grid_oracle_kl_1d(const ProcessSpec& proc, double x_lo, double x_hi, const GridOracleOptions& opt) {
  if (proc.family != Family::KineticLangevin || proc.dim() != 1)
    throw UsageError("the grid oracle needs a one-dimensional kinetic Langevin process");
  if (!(x_hi > x_lo)) throw UsageError("the grid oracle needs a bounded interval x_lo < x_hi");
  if (opt.nx < 4 || opt.nv < 4 || !(opt.v_cut > 0)) throw UsageError("grid oracle needs nx, nv >= 4 and v_cut > 0");
  if (!(proc.gamma > 0)) throw UsageError("the grid oracle needs gamma > 0");
  GridOracleResult g;
  g.nx = opt.nx;
  g.nv = opt.nv;
  g.x_lo = x_lo;
  g.x_hi = x_hi;
  g.v_cut = opt.v_cut;

  const SpMat A = build_operator(proc, g);
  const SpMat At = A.transpose();
  Eigen::SparseLU<SpMat> lu, lut;
  lu.compute(A);
  lut.compute(At);
  if (lu.info() != Eigen::Success || lut.info() != Eigen::Success)
    throw OracleError("sparse LU factorisation failed", std::nan(""));

  Eigenpair right = inverse_power(A, lu, opt.tol, opt.max_iter);
  Eigenpair left = inverse_power(At, lut, opt.tol, opt.max_iter);
  if (right.vec.sum() < 0) right.vec = -right.vec;
  if (left.vec.sum() < 0) left.vec = -left.vec;
  g.lambda = right.lambda;
  g.residual_phi = right.residual;
  g.residual_mu = left.residual;
  g.iterations = right.iterations + left.iterations;

  const Vec phi = right.vec / right.vec.maxCoeff();
  const Vec mu = left.vec / left.vec.sum();
  g.phi.assign(phi.data(), phi.data() + phi.size());
  g.mu.assign(mu.data(), mu.data() + mu.size());

  if (opt.second) {
    // Arnoldi on (I - phi mu^T / mu.phi) A^{-1}: its dominant Ritz value is 1/lambda_2.
    const Eigen::Index n = A.rows();
    const int m = std::min<int>(opt.krylov, static_cast<int>(n) - 1);
    const double mphi = mu.dot(phi);
    auto apply = [&](const Vec& x) {
      Vec y = lu.solve(x);
      y -= phi * (mu.dot(y) / mphi);
      return y;
    };
    Eigen::MatrixXd Q(n, m + 1), H = Eigen::MatrixXd::Zero(m + 1, m);
    Vec q0 = Vec::Ones(n);
    for (Eigen::Index i = 0; i < n; ++i) q0(i) += std::sin(0.37 * static_cast<double>(i));
    q0 -= phi * (mu.dot(q0) / mphi);
    Q.col(0) = q0 / q0.norm();
    int used = m;
    for (int k = 0; k < m; ++k) {
      Vec w = apply(Q.col(k));
      for (int pass = 0; pass < 2; ++pass)
        for (int j = 0; j <= k; ++j) {
          const double h = Q.col(j).dot(w);
          H(j, k) += h;
          w -= h * Q.col(j);
        }
      H(k + 1, k) = w.norm();
      if (H(k + 1, k) < 1e-14) {
        used = k + 1;
        break;
      }
      Q.col(k + 1) = w / H(k + 1, k);
    }
    Eigen::EigenSolver<Eigen::MatrixXd> es(H.topLeftCorner(used, used));
    std::complex<double> best = 0.0;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
      if (std::abs(es.eigenvalues()(i)) > std::abs(best)) best = es.eigenvalues()(i);
    if (std::abs(best) == 0.0) throw OracleError("Arnoldi found no second eigenvalue", std::nan(""));
    const std::complex<double> l2 = 1.0 / best;
    g.lambda2 = l2.real();
    g.lambda2_imag = l2.imag();
  }
  return g;
}

}  // namespace qsdlab
