#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <vector>

#include "disco/error.hpp"

namespace disco::solvers {

// Dense two-phase primal simplex for
//
//   minimize c' x   subject to   A x = b,  x >= 0
//
// using Bland's smallest-index rule for both the entering and the leaving
// variable, so it cannot cycle on degenerate vertices.
struct LpResult {
  Eigen::VectorXd x;
  double value = 0.0;
  std::vector<int> basis;
  // Reduced costs of the structural columns at the optimum (zero on basics).
  Eigen::VectorXd reduced_costs;
};

namespace detail {

class Tableau {
 public:
  Tableau(const Eigen::MatrixXd& a, const Eigen::VectorXd& b)
      : t_(a.rows() + 1, a.cols() + 1) {
    const auto rows = a.rows();
    const auto cols = a.cols();
    t_.setZero();
    t_.topLeftCorner(rows, cols) = a;
    t_.col(cols).head(rows) = b;
    basis_.assign(rows, -1);
  }

  Eigen::Index rows() const { return t_.rows() - 1; }
  Eigen::Index cols() const { return t_.cols() - 1; }
  std::vector<int>& basis() { return basis_; }
  double rhs(Eigen::Index row) const { return t_(row, cols()); }
  double entry(Eigen::Index row, Eigen::Index col) const { return t_(row, col); }
  double reduced_cost(Eigen::Index col) const { return t_(rows(), col); }
  double objective() const { return -t_(rows(), cols()); }

  // Loads a cost vector and prices out the current basis.
  void set_costs(const Eigen::VectorXd& cost) {
    t_.row(rows()).setZero();
    t_.row(rows()).head(cost.size()) = cost.transpose();
    for (Eigen::Index i = 0; i < rows(); ++i) {
      const double cb = basis_[i] < cost.size() ? cost(basis_[i]) : 0.0;
      if (cb != 0.0) t_.row(rows()) -= cb * t_.row(i);
    }
  }

  void pivot(Eigen::Index row, Eigen::Index col) {
    t_.row(row) /= t_(row, col);
    for (Eigen::Index i = 0; i <= rows(); ++i) {
      if (i == row) continue;
      const double factor = t_(i, col);
      if (factor != 0.0) t_.row(i) -= factor * t_.row(row);
    }
    basis_[row] = static_cast<int>(col);
  }

  // Runs Bland-rule pivots over columns [0, limit). Returns false when the
  // problem is unbounded.
  bool optimize(Eigen::Index limit, int max_pivots, double tol) {
    for (int iter = 0; iter < max_pivots; ++iter) {
      Eigen::Index entering = -1;
      for (Eigen::Index j = 0; j < limit; ++j) {
        if (t_(rows(), j) < -tol) {
          entering = j;
          break;
        }
      }
      if (entering < 0) return true;
      Eigen::Index leaving = -1;
      double best = std::numeric_limits<double>::infinity();
      for (Eigen::Index i = 0; i < rows(); ++i) {
        const double a = t_(i, entering);
        if (a <= tol) continue;
        const double ratio = t_(i, cols()) / a;
        if (leaving < 0 || ratio < best - tol ||
            (std::abs(ratio - best) <= tol && basis_[i] < basis_[leaving])) {
          best = ratio;
          leaving = i;
        }
      }
      if (leaving < 0) return false;
      pivot(leaving, entering);
    }
    throw SolverError("LP pivot limit reached");
  }

  void drop_row(Eigen::Index row) {
    Eigen::MatrixXd next(t_.rows() - 1, t_.cols());
    next.topRows(row) = t_.topRows(row);
    next.bottomRows(t_.rows() - row - 1) = t_.bottomRows(t_.rows() - row - 1);
    t_ = std::move(next);
    basis_.erase(basis_.begin() + row);
  }

  void drop_columns_from(Eigen::Index first) {
    Eigen::MatrixXd next(t_.rows(), first + 1);
    next.leftCols(first) = t_.leftCols(first);
    next.col(first) = t_.col(cols());
    t_ = std::move(next);
  }

 private:
  Eigen::MatrixXd t_;
  std::vector<int> basis_;
};

}  // namespace detail

inline LpResult solve_lp(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                         const Eigen::VectorXd& cost, double tol = 1e-11) {
  const auto m = a.rows();
  const auto n = a.cols();
  if (b.size() != m || cost.size() != n) {
    throw SolverError("LP dimensions are inconsistent");
  }

  // Phase one: one artificial per row, rows flipped so that b >= 0.
  Eigen::MatrixXd extended(m, n + m);
  Eigen::VectorXd rhs = b;
  extended.leftCols(n) = a;
  extended.rightCols(m).setIdentity();
  for (Eigen::Index i = 0; i < m; ++i) {
    if (rhs(i) < 0.0) {
      extended.row(i).head(n) *= -1.0;
      rhs(i) = -rhs(i);
    }
  }
  detail::Tableau tableau(extended, rhs);
  for (Eigen::Index i = 0; i < m; ++i) tableau.basis()[i] = static_cast<int>(n + i);

  const int max_pivots = static_cast<int>(200 * (m + n) + 1000);
  Eigen::VectorXd phase_one = Eigen::VectorXd::Zero(n + m);
  phase_one.tail(m).setOnes();
  tableau.set_costs(phase_one);
  tableau.optimize(n + m, max_pivots, tol);
  const double scale = std::max(1.0, rhs.cwiseAbs().maxCoeff());
  if (tableau.objective() > 1e-9 * scale) {
    throw SolverError("LP is infeasible");
  }

  // Pivot remaining artificials out of the basis; rows where that is
  // impossible are redundant.
  for (Eigen::Index i = tableau.rows() - 1; i >= 0; --i) {
    if (tableau.basis()[i] < n) continue;
    Eigen::Index col = -1;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (std::abs(tableau.entry(i, j)) > 1e-9) {
        col = j;
        break;
      }
    }
    if (col >= 0) {
      tableau.pivot(i, col);
    } else {
      tableau.drop_row(i);
    }
  }
  tableau.drop_columns_from(n);

  tableau.set_costs(cost);
  if (!tableau.optimize(n, max_pivots, tol)) {
    throw SolverError("LP is unbounded");
  }

  LpResult result;
  result.x = Eigen::VectorXd::Zero(n);
  for (Eigen::Index i = 0; i < tableau.rows(); ++i) {
    result.x(tableau.basis()[i]) = std::max(0.0, tableau.rhs(i));
  }
  result.value = cost.dot(result.x);
  result.basis = tableau.basis();
  result.reduced_costs.resize(n);
  for (Eigen::Index j = 0; j < n; ++j) result.reduced_costs(j) = tableau.reduced_cost(j);
  return result;
}

}  // namespace disco::solvers
