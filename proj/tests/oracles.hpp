#pragma once

// Independent reference computations used only by tests. Nothing here calls
// into the library's solvers or quantile code.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

namespace oracle {

// Quantile by scanning the thresholds k/n of the sorted sample.
inline double quantile_by_thresholds(std::vector<double> sample, double q) {
  std::sort(sample.begin(), sample.end());
  const std::size_t n = sample.size();
  for (std::size_t k = 1; k <= n; ++k) {
    // k/n >= q  <=>  k >= q n, tested in exact integer-ish arithmetic.
    if (static_cast<double>(k) >= q * static_cast<double>(n) - 1e-12) return sample[k - 1];
  }
  return sample.back();
}

inline double cdf_by_count(const std::vector<double>& sample, double y) {
  double count = 0.0;
  for (double x : sample) count += (x <= y) ? 1.0 : 0.0;
  return count / static_cast<double>(sample.size());
}

using Objective = std::function<double(const Eigen::VectorXd&)>;

inline double mean_squared(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                           const Eigen::VectorXd& w) {
  return (a * w - b).squaredNorm() / static_cast<double>(a.rows());
}

inline double scaled_l1(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                        const Eigen::VectorXd& w, double cell) {
  return cell * (a * w - b).cwiseAbs().sum();
}

struct LatticeMin {
  Eigen::VectorXd weights;
  double value = std::numeric_limits<double>::infinity();
};

// Minimum over the simplex lattice {w : w_j = k_j * step} for J = 2 or 3,
// restricted to the box [center - radius, center + radius] when radius > 0.
inline LatticeMin lattice_search(int num, double step, const Objective& f,
                                 const Eigen::VectorXd* center = nullptr,
                                 double radius = 0.0) {
  LatticeMin best;
  auto consider = [&](const Eigen::VectorXd& w) {
    const double v = f(w);
    if (v < best.value) {
      best.value = v;
      best.weights = w;
    }
  };
  auto range = [&](int j, double& lo, double& hi) {
    lo = 0.0;
    hi = 1.0;
    if (center != nullptr && radius > 0.0) {
      lo = std::max(0.0, (*center)(j) - radius);
      hi = std::min(1.0, (*center)(j) + radius);
    }
  };
  double lo0, hi0;
  range(0, lo0, hi0);
  const long k0_lo = static_cast<long>(std::ceil(lo0 / step - 1e-9));
  const long k0_hi = static_cast<long>(std::floor(hi0 / step + 1e-9));
  if (num == 2) {
    for (long k = k0_lo; k <= k0_hi; ++k) {
      Eigen::VectorXd w(2);
      w(0) = std::min(1.0, k * step);
      w(1) = 1.0 - w(0);
      consider(w);
    }
    return best;
  }
  double lo1, hi1;
  range(1, lo1, hi1);
  const long k1_lo = static_cast<long>(std::ceil(lo1 / step - 1e-9));
  const long k1_hi = static_cast<long>(std::floor(hi1 / step + 1e-9));
  for (long a = k0_lo; a <= k0_hi; ++a) {
    for (long b = k1_lo; b <= k1_hi; ++b) {
      const double w0 = a * step;
      const double w1 = b * step;
      if (w0 + w1 > 1.0 + 1e-12) continue;
      Eigen::VectorXd w(3);
      w << w0, w1, std::max(0.0, 1.0 - w0 - w1);
      consider(w);
    }
  }
  return best;
}

// Coarse lattice at 1e-3, then a local lattice at 1e-5 around the winner.
inline LatticeMin refined_lattice_min(int num, const Objective& f) {
  LatticeMin coarse = lattice_search(num, 1e-3, f);
  LatticeMin fine = lattice_search(num, 1e-5, f, &coarse.weights, 2e-3);
  return fine.value < coarse.value ? fine : coarse;
}

}  // namespace oracle
