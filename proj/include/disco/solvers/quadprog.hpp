#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "disco/error.hpp"

namespace disco::solvers {

// Goldfarb–Idnani dual active-set method for strictly convex QPs:
//
//   minimize    1/2 x' H x + c' x
//   subject to  E' x = e          (equality columns of E)
//               I' x >= i         (inequality columns of I)
//
// H must be symmetric positive definite. The iterates stay dual feasible and
// add the most violated primal constraint each step; factors are kept as
// J = L^{-T} Q and an upper-triangular R, updated with Givens rotations.
struct QpResult {
  Eigen::VectorXd x;
  double value = 0.0;
  // Indices (into the inequality columns) active at the solution.
  std::vector<int> active;
  int iterations = 0;
};

namespace detail {

class GoldfarbIdnani {
 public:
  GoldfarbIdnani(const Eigen::MatrixXd& hessian, const Eigen::VectorXd& linear,
                 const Eigen::MatrixXd& eq, const Eigen::VectorXd& eq_rhs,
                 const Eigen::MatrixXd& ineq, const Eigen::VectorXd& ineq_rhs,
                 int max_iterations)
      : n_(static_cast<int>(hessian.rows())),
        p_(static_cast<int>(eq.cols())),
        m_(static_cast<int>(ineq.cols())),
        hessian_(hessian),
        linear_(linear),
        eq_(eq),
        eq_rhs_(eq_rhs),
        ineq_(ineq),
        ineq_rhs_(ineq_rhs),
        max_iterations_(max_iterations) {}

  QpResult solve() {
    const int total = p_ + m_;
    R_ = Eigen::MatrixXd::Zero(n_, n_);
    r_ = Eigen::VectorXd::Zero(total);
    u_ = Eigen::VectorXd::Zero(total);
    active_.assign(total, 0);
    Eigen::VectorXd d(n_), z(n_), np(n_);

    Eigen::LLT<Eigen::MatrixXd> llt(hessian_);
    if (llt.info() != Eigen::Success) {
      throw SolverError("QP Hessian is not positive definite");
    }
    const double c1 = hessian_.trace();
    Eigen::MatrixXd lower = llt.matrixL();
    J_ = lower.triangularView<Eigen::Lower>()
             .solve(Eigen::MatrixXd::Identity(n_, n_))
             .transpose();
    const double c2 = J_.trace();

    x_ = -llt.solve(linear_);
    value_ = 0.5 * linear_.dot(x_);
    iq_ = 0;
    r_norm_ = 1.0;

    for (int i = 0; i < p_; ++i) {
      np = eq_.col(i);
      compute_d(d, np);
      update_z(z, d);
      update_r(d);
      double step = 0.0;
      const double zz = z.dot(z);
      if (std::abs(zz) > kEps) step = (eq_rhs_(i) - np.dot(x_)) / z.dot(np);
      x_ += step * z;
      u_(iq_) = step;
      for (int k = 0; k < iq_; ++k) u_(k) -= step * r_(k);
      value_ += 0.5 * step * step * z.dot(np);
      active_[iq_] = -i - 1;
      if (!add_constraint(d)) {
        throw SolverError("QP equality constraints are linearly dependent");
      }
    }

    std::vector<int> iai(m_);
    std::vector<bool> allowed(m_, true);
    Eigen::VectorXd slack(m_);
    for (int i = 0; i < m_; ++i) iai[i] = i;

    Eigen::VectorXd x_old = x_;
    Eigen::VectorXd u_old = u_;
    std::vector<int> active_old = active_;

    int iterations = 0;
    while (true) {
      // Step 1: pick the most violated inequality.
      if (++iterations > max_iterations_) {
        throw SolverError("QP iteration limit reached", kkt_residual());
      }
      for (int i = p_; i < iq_; ++i) iai[active_[i]] = -1;
      double psi = 0.0;
      for (int i = 0; i < m_; ++i) {
        allowed[i] = true;
        slack(i) = ineq_.col(i).dot(x_) - ineq_rhs_(i);
        psi += std::min(0.0, slack(i));
      }
      if (std::abs(psi) <= m_ * kEps * c1 * c2 * 100.0) break;
      x_old = x_;
      u_old = u_;
      active_old = active_;

    choose:
      double most = 0.0;
      int ip = 0;
      for (int i = 0; i < m_; ++i) {
        if (slack(i) < most && iai[i] != -1 && allowed[i]) {
          most = slack(i);
          ip = i;
        }
      }
      if (most >= 0.0) break;

      np = ineq_.col(ip);
      u_(iq_) = 0.0;
      active_[iq_] = ip;

      // Step 2: determine the step direction and length.
      while (true) {
        if (++iterations > max_iterations_) {
          throw SolverError("QP iteration limit reached", kkt_residual());
        }
        compute_d(d, np);
        update_z(z, d);
        update_r(d);

        int drop = 0;
        double dual_step = kInf;
        for (int k = p_; k < iq_; ++k) {
          if (r_(k) > 0.0 && u_(k) / r_(k) < dual_step) {
            dual_step = u_(k) / r_(k);
            drop = active_[k];
          }
        }
        const double primal_step =
            std::abs(z.dot(z)) > kEps ? -slack(ip) / z.dot(np) : kInf;
        const double step = std::min(dual_step, primal_step);
        if (step >= kInf) {
          throw SolverError("QP constraints are infeasible");
        }

        if (primal_step >= kInf) {
          // Dual-only step: shed the blocking constraint and retry.
          for (int k = 0; k < iq_; ++k) u_(k) -= step * r_(k);
          u_(iq_) += step;
          iai[drop] = drop;
          delete_constraint(drop);
          continue;
        }

        x_ += step * z;
        value_ += step * z.dot(np) * (0.5 * step + u_(iq_));
        for (int k = 0; k < iq_; ++k) u_(k) -= step * r_(k);
        u_(iq_) += step;

        if (step == primal_step) {
          if (!add_constraint(d)) {
            // Degenerate: the new constraint depends on the active ones.
            allowed[ip] = false;
            delete_constraint(ip);
            for (int i = 0; i < m_; ++i) iai[i] = i;
            for (int i = p_; i < iq_; ++i) {
              active_[i] = active_old[i];
              u_(i) = u_old(i);
              iai[active_[i]] = -1;
            }
            x_ = x_old;
            goto choose;
          }
          iai[ip] = -1;
          break;
        }

        // Partial step: drop the blocking constraint, keep ip pending.
        iai[drop] = drop;
        delete_constraint(drop);
        slack(ip) = ineq_.col(ip).dot(x_) - ineq_rhs_(ip);
      }
    }

    QpResult result;
    result.x = x_;
    result.value = 0.5 * x_.dot(hessian_ * x_) + linear_.dot(x_);
    for (int i = p_; i < iq_; ++i) result.active.push_back(active_[i]);
    std::sort(result.active.begin(), result.active.end());
    result.iterations = iterations;
    return result;
  }

 private:
  static constexpr double kEps = std::numeric_limits<double>::epsilon();
  static constexpr double kInf = std::numeric_limits<double>::infinity();

  double kkt_residual() const {
    Eigen::VectorXd slack = ineq_.transpose() * x_ - ineq_rhs_;
    double worst = 0.0;
    for (int i = 0; i < m_; ++i) worst = std::max(worst, -slack(i));
    if (p_ > 0) {
      worst = std::max(worst,
                       (eq_.transpose() * x_ - eq_rhs_).cwiseAbs().maxCoeff());
    }
    return worst;
  }

  void compute_d(Eigen::VectorXd& d, const Eigen::VectorXd& np) const {
    d.noalias() = J_.transpose() * np;
  }

  void update_z(Eigen::VectorXd& z, const Eigen::VectorXd& d) const {
    z.setZero();
    for (int j = iq_; j < n_; ++j) z += J_.col(j) * d(j);
  }

  void update_r(const Eigen::VectorXd& d) {
    for (int i = iq_ - 1; i >= 0; --i) {
      double sum = 0.0;
      for (int j = i + 1; j < iq_; ++j) sum += R_(i, j) * r_(j);
      r_(i) = (d(i) - sum) / R_(i, i);
    }
  }

  bool add_constraint(Eigen::VectorXd& d) {
    for (int j = n_ - 1; j >= iq_ + 1; --j) {
      double cc = d(j - 1);
      double ss = d(j);
      const double h = std::hypot(cc, ss);
      if (h == 0.0) continue;
      d(j) = 0.0;
      ss /= h;
      cc /= h;
      if (cc < 0.0) {
        cc = -cc;
        ss = -ss;
        d(j - 1) = -h;
      } else {
        d(j - 1) = h;
      }
      const double xny = ss / (1.0 + cc);
      for (int k = 0; k < n_; ++k) {
        const double t1 = J_(k, j - 1);
        const double t2 = J_(k, j);
        J_(k, j - 1) = t1 * cc + t2 * ss;
        J_(k, j) = xny * (t1 + J_(k, j - 1)) - t2;
      }
    }
    ++iq_;
    for (int i = 0; i < iq_; ++i) R_(i, iq_ - 1) = d(i);
    if (std::abs(d(iq_ - 1)) <= kEps * r_norm_) return false;
    r_norm_ = std::max(r_norm_, std::abs(d(iq_ - 1)));
    return true;
  }

  void delete_constraint(int constraint) {
    int qq = -1;
    for (int i = p_; i < iq_; ++i) {
      if (active_[i] == constraint) {
        qq = i;
        break;
      }
    }
    if (qq < 0) throw SolverError("QP active set is inconsistent");
    for (int i = qq; i < iq_ - 1; ++i) {
      active_[i] = active_[i + 1];
      u_(i) = u_(i + 1);
      R_.col(i) = R_.col(i + 1);
    }
    active_[iq_ - 1] = active_[iq_];
    u_(iq_ - 1) = u_(iq_);
    active_[iq_] = 0;
    u_(iq_) = 0.0;
    for (int j = 0; j < iq_; ++j) R_(j, iq_ - 1) = 0.0;
    --iq_;
    if (iq_ == 0) return;

    for (int j = qq; j < iq_; ++j) {
      double cc = R_(j, j);
      double ss = R_(j + 1, j);
      const double h = std::hypot(cc, ss);
      if (h == 0.0) continue;
      cc /= h;
      ss /= h;
      R_(j + 1, j) = 0.0;
      if (cc < 0.0) {
        R_(j, j) = -h;
        cc = -cc;
        ss = -ss;
      } else {
        R_(j, j) = h;
      }
      const double xny = ss / (1.0 + cc);
      for (int k = j + 1; k < iq_; ++k) {
        const double t1 = R_(j, k);
        const double t2 = R_(j + 1, k);
        R_(j, k) = t1 * cc + t2 * ss;
        R_(j + 1, k) = xny * (t1 + R_(j, k)) - t2;
      }
      for (int k = 0; k < n_; ++k) {
        const double t1 = J_(k, j);
        const double t2 = J_(k, j + 1);
        J_(k, j) = t1 * cc + t2 * ss;
        J_(k, j + 1) = xny * (J_(k, j) + t1) - t2;
      }
    }
  }

  int n_, p_, m_;
  const Eigen::MatrixXd& hessian_;
  const Eigen::VectorXd& linear_;
  const Eigen::MatrixXd& eq_;
  const Eigen::VectorXd& eq_rhs_;
  const Eigen::MatrixXd& ineq_;
  const Eigen::VectorXd& ineq_rhs_;
  int max_iterations_;

  Eigen::MatrixXd R_, J_;
  Eigen::VectorXd r_, u_, x_;
  std::vector<int> active_;
  int iq_ = 0;
  double r_norm_ = 1.0;
  double value_ = 0.0;
};

}  // namespace detail

inline QpResult solve_quadprog(const Eigen::MatrixXd& hessian,
                               const Eigen::VectorXd& linear,
                               const Eigen::MatrixXd& eq,
                               const Eigen::VectorXd& eq_rhs,
                               const Eigen::MatrixXd& ineq,
                               const Eigen::VectorXd& ineq_rhs,
                               int max_iterations = 0) {
  const auto n = hessian.rows();
  if (hessian.cols() != n || linear.size() != n || eq.rows() != n ||
      ineq.rows() != n || eq.cols() != eq_rhs.size() ||
      ineq.cols() != ineq_rhs.size()) {
    throw SolverError("QP dimensions are inconsistent");
  }
  if (max_iterations <= 0) {
    max_iterations = static_cast<int>(50 * (n + eq.cols() + ineq.cols()) + 100);
  }
  return detail::GoldfarbIdnani(hessian, linear, eq, eq_rhs, ineq, ineq_rhs,
                                max_iterations)
      .solve();
}

}  // namespace disco::solvers
