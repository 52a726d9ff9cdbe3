#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <string>
#include <vector>

#include "disco/error.hpp"
#include "disco/solvers/quadprog.hpp"
#include "disco/solvers/simplex_lp.hpp"

namespace disco {

// Data of one weight-fitting problem: each design column is a control unit's
// quantile (or CDF) function on the grid, target is the treated unit's.
struct LsProblem {
  Eigen::MatrixXd design;
  Eigen::VectorXd target;
  bool simplex = true;
  // Spacing of the support grid; scales the L1 objective into an integral.
  double cell_width = 1.0;
};

struct WeightVector {
  Eigen::VectorXd weights;
  double objective = 0.0;
  // Controls whose nonnegativity constraint binds (simplex problems only).
  std::vector<int> active_set;
};

namespace detail {

inline void validate(const LsProblem& problem) {
  if (problem.design.cols() < 1) throw UsageError("weight problem needs J >= 1");
  if (problem.design.rows() < 1 ||
      problem.design.rows() != problem.target.size()) {
    throw UsageError("design and target row counts differ");
  }
  if (!problem.design.allFinite() || !problem.target.allFinite()) {
    throw UsageError("weight problem contains non-finite entries");
  }
}

inline double mean_squared_residual(const LsProblem& problem,
                                    const Eigen::VectorXd& weights) {
  return (problem.design * weights - problem.target).squaredNorm() /
         static_cast<double>(problem.design.rows());
}

inline double l1_residual(const LsProblem& problem,
                          const Eigen::VectorXd& weights) {
  return problem.cell_width *
         (problem.design * weights - problem.target).cwiseAbs().sum();
}

// Zeroes tiny negative round-off, renormalizes, and records binding indices.
inline WeightVector finish_simplex(Eigen::VectorXd weights) {
  WeightVector out;
  for (Eigen::Index j = 0; j < weights.size(); ++j) {
    if (weights(j) < -1e-8) {
      throw SolverError("simplex weight " + std::to_string(j) +
                        " is negative: " + std::to_string(weights(j)));
    }
    if (weights(j) < 1e-10) weights(j) = 0.0;
  }
  weights /= weights.sum();
  for (Eigen::Index j = 0; j < weights.size(); ++j) {
    if (weights(j) == 0.0) out.active_set.push_back(static_cast<int>(j));
  }
  out.weights = std::move(weights);
  return out;
}

// Gram form of (1/G)||A w - b||^2 as 1/2 w'Hw + c'w, with a small ridge so H
// stays positive definite for collinear columns.
inline void gram_form(const LsProblem& problem, Eigen::MatrixXd& hessian,
                      Eigen::VectorXd& linear) {
  const double scale = 2.0 / static_cast<double>(problem.design.rows());
  const auto num = problem.design.cols();
  hessian = scale * (problem.design.transpose() * problem.design);
  linear = -scale * (problem.design.transpose() * problem.target);
  const double trace = hessian.trace();
  const double ridge =
      trace > 0.0 ? 1e-10 * trace / static_cast<double>(num) : 1.0;
  hessian.diagonal().array() += ridge;
}

// Re-solves the unridged sum-to-one problem on the support of `weights`.
// Removes the small pull of the ridge toward equal weights; kept only when it
// stays feasible and does not raise the objective.
inline Eigen::VectorXd polish_support(const LsProblem& problem,
                                      Eigen::VectorXd weights) {
  std::vector<Eigen::Index> support;
  for (Eigen::Index j = 0; j < weights.size(); ++j) {
    if (weights(j) > 1e-10) support.push_back(j);
  }
  const auto k = static_cast<Eigen::Index>(support.size());
  if (k < 1) return weights;
  Eigen::MatrixXd sub(problem.design.rows(), k);
  for (Eigen::Index i = 0; i < k; ++i) sub.col(i) = problem.design.col(support[i]);
  Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(k + 1, k + 1);
  kkt.topLeftCorner(k, k) = sub.transpose() * sub;
  kkt.topRightCorner(k, 1).setOnes();
  kkt.bottomLeftCorner(1, k).setOnes();
  Eigen::VectorXd rhs(k + 1);
  rhs.head(k) = sub.transpose() * problem.target;
  rhs(k) = 1.0;
  const Eigen::VectorXd solution = kkt.completeOrthogonalDecomposition().solve(rhs);
  if (!solution.allFinite() || solution.head(k).minCoeff() < -1e-12 ||
      (kkt * solution - rhs).norm() > 1e-9 * (1.0 + rhs.norm())) {
    return weights;
  }
  Eigen::VectorXd candidate = Eigen::VectorXd::Zero(weights.size());
  for (Eigen::Index i = 0; i < k; ++i) candidate(support[i]) = solution(i);
  const double before = mean_squared_residual(problem, weights);
  const double after = mean_squared_residual(problem, candidate);
  return after <= before + 1e-14 * std::max(1.0, before) ? candidate : weights;
}

}  // namespace detail

// Minimizes (1/G)||design w - target||^2 over the unit simplex with the
// Goldfarb–Idnani dual active-set method.
inline WeightVector solve_simplex_ls(const LsProblem& problem) {
  detail::validate(problem);
  const auto num = problem.design.cols();
  Eigen::VectorXd weights;
  if (num == 1) {
    weights = Eigen::VectorXd::Ones(1);
  } else {
    Eigen::MatrixXd hessian;
    Eigen::VectorXd linear;
    detail::gram_form(problem, hessian, linear);
    const Eigen::MatrixXd eq = Eigen::MatrixXd::Ones(num, 1);
    const Eigen::VectorXd eq_rhs = Eigen::VectorXd::Ones(1);
    const Eigen::MatrixXd ineq = Eigen::MatrixXd::Identity(num, num);
    const Eigen::VectorXd ineq_rhs = Eigen::VectorXd::Zero(num);
    weights = solvers::solve_quadprog(hessian, linear, eq, eq_rhs, ineq,
                                      ineq_rhs)
                  .x;
    weights = detail::polish_support(problem, std::move(weights));
  }
  WeightVector out = detail::finish_simplex(std::move(weights));
  out.objective = detail::mean_squared_residual(problem, out.weights);
  return out;
}

// Minimizes the same objective subject only to sum(w) = 1 by solving the
// bordered KKT system; the minimum-norm solution is taken if it is singular.
inline WeightVector solve_affine_ls(const LsProblem& problem) {
  detail::validate(problem);
  const auto num = problem.design.cols();
  WeightVector out;
  if (num == 1) {
    out.weights = Eigen::VectorXd::Ones(1);
  } else {
    Eigen::MatrixXd hessian;
    Eigen::VectorXd linear;
    detail::gram_form(problem, hessian, linear);
    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(num + 1, num + 1);
    kkt.topLeftCorner(num, num) = hessian;
    kkt.topRightCorner(num, 1).setOnes();
    kkt.bottomLeftCorner(1, num).setOnes();
    Eigen::VectorXd rhs(num + 1);
    rhs.head(num) = -linear;
    rhs(num) = 1.0;
    const Eigen::VectorXd solution =
        kkt.completeOrthogonalDecomposition().solve(rhs);
    if (!solution.allFinite() ||
        (kkt * solution - rhs).norm() > 1e-6 * (1.0 + rhs.norm())) {
      throw SolverError("sum-to-one KKT system has no solution");
    }
    out.weights = solution.head(num);
  }
  out.objective = detail::mean_squared_residual(problem, out.weights);
  return out;
}

namespace detail {

// Columns: weights (J), positive residual parts u (G), negative parts v (G).
// Rows: design w - u + v = target, sum(w) = 1, then `extra` rows appended by
// the caller.
inline void l1_program(const LsProblem& problem, Eigen::MatrixXd& a,
                       Eigen::VectorXd& b, Eigen::VectorXd& cost) {
  const auto rows = problem.design.rows();
  const auto num = problem.design.cols();
  a = Eigen::MatrixXd::Zero(rows + 1, num + 2 * rows);
  a.topLeftCorner(rows, num) = problem.design;
  a.block(0, num, rows, rows) = -Eigen::MatrixXd::Identity(rows, rows);
  a.block(0, num + rows, rows, rows).setIdentity();
  a.block(rows, 0, 1, num).setOnes();
  b.resize(rows + 1);
  b.head(rows) = problem.target;
  b(rows) = 1.0;
  cost = Eigen::VectorXd::Zero(num + 2 * rows);
  cost.tail(2 * rows).setOnes();
}

// Appends the row  coeffs' x + s = bound  with a fresh slack column.
inline void append_le_row(Eigen::MatrixXd& a, Eigen::VectorXd& b,
                          Eigen::VectorXd& cost,
                          const Eigen::VectorXd& coeffs, double bound) {
  const auto rows = a.rows();
  const auto cols = a.cols();
  a.conservativeResize(rows + 1, cols + 1);
  a.row(rows).setZero();
  a.col(cols).setZero();
  a.row(rows).head(coeffs.size()) = coeffs.transpose();
  a(rows, cols) = 1.0;
  b.conservativeResize(rows + 1);
  b(rows) = bound;
  cost.conservativeResize(cols + 1);
  cost(cols) = 0.0;
}

}  // namespace detail

// Minimizes cell_width * sum_g |design w - target|_g over the unit simplex as
// an LP. When the optimum is not unique the lexicographically smallest
// optimal weight vector is returned.
inline WeightVector solve_simplex_l1(const LsProblem& problem) {
  detail::validate(problem);
  const auto rows = problem.design.rows();
  const auto num = problem.design.cols();
  if (num == 1) {
    WeightVector out = detail::finish_simplex(Eigen::VectorXd::Ones(1));
    out.objective = detail::l1_residual(problem, out.weights);
    return out;
  }

  Eigen::MatrixXd a;
  Eigen::VectorXd b, cost;
  detail::l1_program(problem, a, b, cost);
  const solvers::LpResult base = solvers::solve_lp(a, b, cost);
  Eigen::VectorXd weights = base.x.head(num);

  std::vector<bool> basic(a.cols(), false);
  for (int j : base.basis) basic[j] = true;
  bool unique = true;
  for (Eigen::Index j = 0; j < a.cols(); ++j) {
    if (!basic[j] && std::abs(base.reduced_costs(j)) <= 1e-9) unique = false;
  }

  if (!unique) {
    // Walk the optimal face: minimize w_0, then w_1 with w_0 held, and so on.
    const double bound = base.value + 1e-11 * std::max(1.0, base.value);
    Eigen::VectorXd objective_row = Eigen::VectorXd::Zero(num + 2 * rows);
    objective_row.tail(2 * rows).setOnes();
    detail::append_le_row(a, b, cost, objective_row, bound);
    cost.setZero();
    for (Eigen::Index k = 0; k + 1 < num; ++k) {
      if (weights(k) > 1e-12) {
        Eigen::VectorXd lex_cost = Eigen::VectorXd::Zero(a.cols());
        lex_cost(k) = 1.0;
        weights = solvers::solve_lp(a, b, lex_cost).x.head(num);
      }
      Eigen::VectorXd pin = Eigen::VectorXd::Zero(num);
      pin(k) = 1.0;
      detail::append_le_row(a, b, cost, pin, weights(k) + 1e-10);
    }
  }

  WeightVector out = detail::finish_simplex(std::move(weights));
  out.objective = detail::l1_residual(problem, out.weights);
  return out;
}

}  // namespace disco
