#include "dual_oracle.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace oracle {

namespace {

// Status of one coordinate on a face.
enum Status { AtLower = 0, NegFree = 1, Zero = 2, PosFree = 3, AtUpper = 4 };

}  // namespace

double dual_value(const std::vector<std::vector<double>>& x, const std::vector<double>& y,
                  const std::vector<double>& beta) {
  const std::size_t n = y.size(), d = x.front().size();
  std::vector<double> w(d, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < d; ++k) w[k] += beta[i] * x[i][k];
  }
  double ww = 0.0, yb = 0.0;
  for (double v : w) ww += v * v;
  for (std::size_t i = 0; i < n; ++i) yb += y[i] * beta[i];
  return -0.5 * ww + yb;
}

DualResult solve_nu_svr_dual(const std::vector<std::vector<double>>& x, const std::vector<double>& y, double c,
                             double nu) {
  const std::size_t n = y.size();
  if (n == 0 || n > 8) throw std::invalid_argument("oracle handles 1..8 rows");
  const std::size_t d = x.front().size();
  Eigen::MatrixXd K(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < d; ++k) s += x[i][k] * x[j][k];
      K(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = s;
    }
  }
  const double budget = c * nu * static_cast<double>(n);
  const double feas_tol = 1e-9 * std::max(1.0, budget);

  DualResult best;
  best.objective = -std::numeric_limits<double>::infinity();

  std::size_t combos = 1;
  for (std::size_t i = 0; i < n; ++i) combos *= 5;
  std::vector<int> status(n);
  for (std::size_t code = 0; code < combos; ++code) {
    std::size_t rest = code;
    for (std::size_t i = 0; i < n; ++i) {
      status[i] = static_cast<int>(rest % 5);
      rest /= 5;
    }
    std::vector<std::size_t> free_idx;
    std::vector<double> beta(n, 0.0), sign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      switch (status[i]) {
        case AtLower: beta[i] = -c; break;
        case AtUpper: beta[i] = c; break;
        case NegFree: sign[i] = -1.0; free_idx.push_back(i); break;
        case PosFree: sign[i] = 1.0; free_idx.push_back(i); break;
        default: break;
      }
    }
    double fixed_sum = 0.0, fixed_abs = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (sign[i] == 0.0) {
        fixed_sum += beta[i];
        fixed_abs += std::fabs(beta[i]);
      }
    }

    for (int l1_tight = 0; l1_tight < 2; ++l1_tight) {
      ++best.faces_checked;
      std::vector<double> cand = beta;
      const auto m = static_cast<Eigen::Index>(free_idx.size());
      if (m > 0) {
        const Eigen::Index rows = m + 1 + l1_tight;
        Eigen::MatrixXd A = Eigen::MatrixXd::Zero(rows, rows);
        Eigen::VectorXd b = Eigen::VectorXd::Zero(rows);
        // Stationarity: K_FF beta_F + lambda + mu s = y_F - K_FX beta_X.
        for (Eigen::Index r = 0; r < m; ++r) {
          const std::size_t i = free_idx[static_cast<std::size_t>(r)];
          for (Eigen::Index q = 0; q < m; ++q) {
            A(r, q) = K(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(free_idx[static_cast<std::size_t>(q)]));
          }
          A(r, m) = 1.0;
          if (l1_tight) A(r, m + 1) = sign[i];
          double rhs = y[i];
          for (std::size_t j = 0; j < n; ++j) {
            if (sign[j] == 0.0) rhs -= K(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) * beta[j];
          }
          b(r) = rhs;
        }
        for (Eigen::Index q = 0; q < m; ++q) A(m, q) = 1.0;
        b(m) = -fixed_sum;
        if (l1_tight) {
          for (Eigen::Index q = 0; q < m; ++q) A(m + 1, q) = sign[free_idx[static_cast<std::size_t>(q)]];
          b(m + 1) = budget - fixed_abs;
        }
        const Eigen::VectorXd sol = A.completeOrthogonalDecomposition().solve(b);
        if ((A * sol - b).norm() > 1e-8 * std::max(1.0, b.norm())) continue;
        for (Eigen::Index q = 0; q < m; ++q) cand[free_idx[static_cast<std::size_t>(q)]] = sol(q);
      } else if (l1_tight) {
        continue;  // covered by the slack variant
      }

      double sum = 0.0, abs_sum = 0.0;
      bool ok = true;
      for (std::size_t i = 0; i < n; ++i) {
        sum += cand[i];
        abs_sum += std::fabs(cand[i]);
        if (std::fabs(cand[i]) > c + feas_tol) ok = false;
        if (sign[i] != 0.0 && sign[i] * cand[i] < -feas_tol) ok = false;
      }
      if (!ok || std::fabs(sum) > feas_tol || abs_sum > budget + feas_tol) continue;
      const double value = dual_value(x, y, cand);
      if (value > best.objective) {
        best.objective = value;
        best.beta = cand;
      }
    }
  }
  return best;
}

}  // namespace oracle
