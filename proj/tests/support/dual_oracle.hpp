#pragma once

// Exhaustive active-set solver for tiny nu-SVR duals, written independently of
// the SMO trainer. Works on beta = alpha - alpha*:
//
//   max  -1/2 beta' K beta + y' beta
//   s.t. sum beta = 0,  |beta_i| <= C,  sum |beta_i| <= C nu l
//
// Every face of the feasible polytope (each beta_i at -C, 0, +C or free with a
// fixed sign; the L1 budget tight or slack) is solved through its KKT system.
// The best feasible stationary point is the optimum.

#include <vector>

namespace oracle {

struct DualResult {
  double objective = 0.0;
  std::vector<double> beta;
  std::size_t faces_checked = 0;
};

// x: rows of features (already in the coordinates the solver uses).
DualResult solve_nu_svr_dual(const std::vector<std::vector<double>>& x, const std::vector<double>& y, double c,
                             double nu);

double dual_value(const std::vector<std::vector<double>>& x, const std::vector<double>& y,
                  const std::vector<double>& beta);

}  // namespace oracle
