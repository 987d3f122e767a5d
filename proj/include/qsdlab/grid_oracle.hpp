#pragma once

#include <vector>

#include "qsdlab/processes.hpp"

namespace qsdlab {

struct GridOracleOptions {
  int nx = 200;
  int nv = 200;
  double v_cut = 6.0;
  double tol = 1e-11;  // relative eigen-residual for the inverse power iteration
  int max_iter = 2000;
  bool second = true;  // also estimate lambda_2 (Arnoldi on the deflated inverse)
  int krylov = 40;
};

// Principal eigen-triple of the killed kinetic Langevin generator on (x_lo, x_hi) x (-v_cut, v_cut).
// Cells are indexed ix * nv + iv.
struct GridOracleResult {
  int nx = 0, nv = 0;
  double x_lo = 0.0, x_hi = 0.0, v_cut = 0.0;
  double lambda = 0.0;
  double lambda2 = 0.0;       // real part of the next eigenvalue
  double lambda2_imag = 0.0;
  std::vector<double> phi;    // right eigenvector, positive, max 1
  std::vector<double> mu;     // left eigenvector as cell masses summing to 1
  double residual_phi = 0.0;  // |A phi - lambda phi| / |phi|
  double residual_mu = 0.0;
  int iterations = 0;

  double dx() const { return (x_hi - x_lo) / nx; }
  double dv() const { return 2 * v_cut / nv; }
  double x_center(int i) const { return x_lo + (i + 0.5) * dx(); }
  double v_center(int j) const { return -v_cut + (j + 0.5) * dv(); }
  // Bilinear interpolation of phi between cell centres (clamped at the outer centres).
  double phi_at(double x, double v) const;
  // x-marginal of mu, one mass per x cell.
  std::vector<double> mu_x() const;
};

// Upwind finite-difference discretisation of L = v d_x + (-V' - gamma v) d_v + gamma d_v^2 with
// absorption for x outside (x_lo, x_hi) and zero flux at |v| = v_cut. Needs a kinetic Langevin
// process in one dimension. Throws OracleError when the iteration does not converge.
GridOracleResult grid_oracle_kl_1d(const ProcessSpec& proc, double x_lo, double x_hi,
                                   const GridOracleOptions& opt = {});

}  // namespace qsdlab
