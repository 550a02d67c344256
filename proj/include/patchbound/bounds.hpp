// Physical upper bounds on radiation efficiency and gain as parametrized
// Hermitian eigenvalue problems over the feasible-current ellipsoid, with the
// self-resonance constraint handled through a 1-D dual search.
#pragma once

#include <string>

#include <Eigen/Dense>

#include "patchbound/constants.hpp"

namespace patchbound {

struct BoundOptions {
  double p_in = 0.5;               // delivered power, W
  double nu_tol_rel = 1e-10;       // bisection width relative to the nu range
  double res_tol = 1e-8;           // resonance residual |I^H X I| / I^H R_tot I
  double gap_tol = 1e-6;           // certification duality-gap tolerance
  double degeneracy_tol = 1e-8;    // top-two eigenvalue relative closeness
  double boundary_shrink = 1e-12;  // relative inset of the open nu interval
  int max_bisect = 200;
};

// Admissible dual interval from the extreme eigenvalues of (X, R_tot):
// R_tot + nu X stays positive definite for nu in (lo, hi).
struct NuRange {
  double lo = 0.0, hi = 0.0;
  double xi_min = 0.0, xi_max = 0.0;
  bool x_indefinite = true;
};

struct BoundResult {
  double value = 0.0;  // efficiency bound, or gain bound for gain_ub
  double nu = 0.0;
  Eigen::VectorXcd current;  // scaled so I^H R_tot I = 2 P_in
  double primal = 0.0;       // Rayleigh value of the recovered current
  double dual = 0.0;         // dual eigenvalue at nu
  double rel_gap = 0.0;      // (dual - primal) / dual
  double res_resonance = 0.0;
  double res_power = 0.0;
  double directivity = 0.0;  // gain / efficiency of the bound current (gain_ub
                             // with a radiation operator supplied), else 0
  bool certified = false;
  bool resonant = false;
  int iterations = 0;
  std::string diagnostic;
};

NuRange nu_range(const Eigen::MatrixXcd& x, const Eigen::MatrixXcd& r_tot,
                 double semidef_tol = 1e-12);

// max eig(R_r, R_tot): best efficiency without the self-resonance constraint.
BoundResult efficiency_ub_nonresonant(const Eigen::MatrixXcd& r_r, const Eigen::MatrixXcd& r_tot,
                                      const BoundOptions& opts = {});

// min over nu of max eig(R_r, R_tot + nu X): efficiency of the best
// self-resonant current. Degenerate crossings are repaired by two-eigenvector
// mixing that restores I^H X I = 0 at the shared eigenvalue.
BoundResult efficiency_ub_resonant(const Eigen::MatrixXcd& r_r, const Eigen::MatrixXcd& r_tot,
                                   const Eigen::MatrixXcd& x, const BoundOptions& opts = {});

// Gain bound toward one direction from the 2 x N far-field row block F
// (unweighted theta/phi rows): G_ub = (4 pi / Z0) min_nu max eig of the 2x2
// reduced problem F (R_tot + nu X)^-1 F^H. resonant=false drops the
// constraint (single evaluation at nu = 0). When a radiation operator r_r is
// supplied, the directivity of the optimal current (gain / efficiency) is
// recorded on the result.
BoundResult gain_ub(const Eigen::MatrixXcd& f_rows, const Eigen::MatrixXcd& r_tot,
                    const Eigen::MatrixXcd& x, bool resonant,
                    const Eigen::MatrixXcd* r_r = nullptr, const BoundOptions& opts = {});

// Recomputes primal value, duality gap and constraint residuals for a result
// whose current and dual value are already set; updates the certified flag.
void certify(BoundResult& result, const Eigen::MatrixXcd& objective,
             const Eigen::MatrixXcd& r_tot, const Eigen::MatrixXcd* x, const BoundOptions& opts);

}  // namespace patchbound
