#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "disco/error.hpp"

namespace disco {

namespace detail {

inline void require_nonempty(std::span<const double> sample) {
  if (sample.empty()) throw InputError("empty sample");
}

inline void require_probability(double q) {
  if (!(q >= 0.0 && q <= 1.0)) throw UsageError("probability outside [0,1]");
}

// Smallest k in [1, n] with k / n >= q.
inline std::size_t quantile_rank(std::size_t n, double q) {
  const double nd = static_cast<double>(n);
  auto k = static_cast<std::size_t>(std::ceil(q * nd));
  k = std::clamp<std::size_t>(k, 1, n);
  while (k > 1 && static_cast<double>(k - 1) / nd >= q) --k;
  while (k < n && static_cast<double>(k) / nd < q) ++k;
  return k;
}

}  // namespace detail

// Left-continuous generalized inverse of the empirical CDF of an
// ascending-sorted sample: the smallest order statistic x_(k) with k/n >= q.
inline double sorted_quantile(std::span<const double> sorted, double q) {
  detail::require_nonempty(sorted);
  detail::require_probability(q);
  return sorted[detail::quantile_rank(sorted.size(), q) - 1];
}

// Fraction of an ascending-sorted sample that is <= y.
inline double sorted_cdf(std::span<const double> sorted, double y) {
  detail::require_nonempty(sorted);
  auto it = std::upper_bound(sorted.begin(), sorted.end(), y);
  return static_cast<double>(it - sorted.begin()) /
         static_cast<double>(sorted.size());
}

inline double empirical_quantile(std::span<const double> sample, double q) {
  detail::require_nonempty(sample);
  std::vector<double> sorted(sample.begin(), sample.end());
  std::sort(sorted.begin(), sorted.end());
  return sorted_quantile(sorted, q);
}

inline double empirical_cdf(std::span<const double> sample, double y) {
  detail::require_nonempty(sample);
  std::size_t count = 0;
  for (double x : sample) count += (x <= y) ? 1 : 0;
  return static_cast<double>(count) / static_cast<double>(sample.size());
}

// m probabilities at interval midpoints, (i - 0.5) / m, mapped into [qmin, qmax].
inline std::vector<double> probability_grid(std::size_t m, double qmin,
                                            double qmax) {
  if (m < 1) throw UsageError("probability grid needs at least one point");
  if (!(qmin >= 0.0 && qmin < qmax && qmax <= 1.0)) {
    throw UsageError("need 0 <= qmin < qmax <= 1");
  }
  std::vector<double> grid(m);
  const double width = qmax - qmin;
  for (std::size_t i = 0; i < m; ++i) {
    grid[i] = qmin + width * (static_cast<double>(i) + 0.5) /
                         static_cast<double>(m);
  }
  return grid;
}

// g equally spaced points covering [amin, amax] including both ends. A
// degenerate support (amin == amax) yields g copies of amin.
inline std::vector<double> support_grid(std::size_t g, double amin,
                                        double amax) {
  if (g < 2) throw UsageError("support grid needs at least two points");
  if (!(amin <= amax)) throw UsageError("need amin <= amax");
  std::vector<double> grid(g);
  const double step = (amax - amin) / static_cast<double>(g - 1);
  for (std::size_t k = 0; k < g; ++k) {
    grid[k] = amin + step * static_cast<double>(k);
  }
  grid.back() = amax;
  return grid;
}

struct QuantileLookup {
  double value = 0.0;
  // True when q exceeds every cdf value, so the last support point is
  // returned without reaching mass q.
  bool saturated = false;
};

// Pseudo-inverse of a gridded CDF: the smallest support point whose CDF value
// reaches q. Differences below 1e-12 count as reaching q.
inline QuantileLookup quantile_from_cdf(std::span<const double> cdf,
                                        std::span<const double> y_points,
                                        double q) {
  if (cdf.empty() || cdf.size() != y_points.size()) {
    throw UsageError("cdf and support grids must be nonempty and equal length");
  }
  constexpr double kSlack = 1e-12;
  for (std::size_t k = 0; k < cdf.size(); ++k) {
    if (cdf[k] + kSlack >= q) return {y_points[k], false};
  }
  return {y_points.back(), true};
}

// A sample's quantile function on a probability grid and its CDF on a support
// grid.
struct DistGrid {
  std::vector<double> q_points;
  std::vector<double> quantiles;
  std::vector<double> y_points;
  std::vector<double> cdf;
};

inline DistGrid dist_grid(std::span<const double> sample, std::size_t m,
                          std::size_t g, double qmin, double qmax, double amin,
                          double amax) {
  detail::require_nonempty(sample);
  if (m < 2 || g < 2) throw UsageError("dist_grid needs m >= 2 and g >= 2");
  if (!(amin <= amax)) throw UsageError("need amin <= amax");
  std::vector<double> sorted(sample.begin(), sample.end());
  std::sort(sorted.begin(), sorted.end());
  if (amin == amax && sorted.front() != sorted.back()) {
    throw UsageError("degenerate support requires a constant sample");
  }

  DistGrid grid;
  grid.q_points = probability_grid(m, qmin, qmax);
  grid.quantiles.reserve(m);
  for (double q : grid.q_points) grid.quantiles.push_back(sorted_quantile(sorted, q));
  grid.y_points = support_grid(g, amin, amax);
  grid.cdf.reserve(g);
  for (double y : grid.y_points) grid.cdf.push_back(sorted_cdf(sorted, y));
  return grid;
}

}  // namespace disco
