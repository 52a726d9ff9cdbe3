#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "disco/config.hpp"
#include "disco/error.hpp"
#include "disco/estimator.hpp"
#include "disco/inference.hpp"

namespace disco {

struct SummaryRow {
  Period period = 0;
  bool post = false;
  double range_lo = 0.0;
  double range_hi = 0.0;
  // Number of grid points averaged in the cell.
  std::size_t count = 0;
  double effect = 0.0;
  std::optional<double> se;
  std::optional<double> ci_lo;
  std::optional<double> ci_hi;
  bool significant = false;
};

struct SummaryTable {
  AggKind kind = AggKind::kQuantileDiff;
  std::vector<double> partition;
  std::optional<double> cl;
  std::vector<SummaryRow> rows;
};

// Quartile partition of [0,1] for quantile kinds, of [amin, amax] otherwise.
inline std::vector<double> default_partition(AggKind kind, double amin,
                                             double amax) {
  std::vector<double> points;
  const double lo = is_quantile_kind(kind) ? 0.0 : amin;
  const double hi = is_quantile_kind(kind) ? 1.0 : amax;
  for (int i = 0; i <= 4; ++i) points.push_back(lo + (hi - lo) * i / 4.0);
  points.back() = hi;
  return points;
}

namespace detail {

// Grid rows falling in each cell [lo, hi), the last cell closed.
inline std::vector<std::vector<Eigen::Index>> cell_members(
    std::span<const double> coords, std::span<const double> partition) {
  const std::size_t cells = partition.size() - 1;
  std::vector<std::vector<Eigen::Index>> members(cells);
  for (std::size_t i = 0; i < coords.size(); ++i) {
    const double x = coords[i];
    for (std::size_t c = 0; c < cells; ++c) {
      const bool last = c + 1 == cells;
      if (x >= partition[c] && (x < partition[c + 1] || (last && x <= partition[c + 1]))) {
        members[c].push_back(static_cast<Eigen::Index>(i));
        break;
      }
    }
  }
  return members;
}

inline double cell_mean(const Eigen::MatrixXd& values, Eigen::Index col,
                        const std::vector<Eigen::Index>& rows) {
  double sum = 0.0;
  for (Eigen::Index r : rows) sum += values(r, col);
  return sum / static_cast<double>(rows.size());
}

}  // namespace detail

// Averages the grid values of `kind` within each partition cell for every
// period. With bands, each cell also gets a bootstrap standard error and a
// percentile interval built from cell means of the gap draws.
inline SummaryTable aggregate(const DiscoResult& result,
                              const BootstrapBands* bands, AggKind kind,
                              std::span<const double> partition) {
  if (partition.size() < 2) throw UsageError("partition needs at least two points");
  for (std::size_t i = 1; i < partition.size(); ++i) {
    if (!(partition[i] > partition[i - 1])) {
      throw UsageError("partition points must be strictly increasing");
    }
  }
  const bool quantile = is_quantile_kind(kind);
  const double lo = quantile ? 0.0 : result.amin;
  const double hi = quantile ? 1.0 : result.amax;
  const double slack = 1e-12 * std::max(1.0, std::abs(hi - lo));
  if (partition.front() < lo - slack || partition.back() > hi + slack) {
    throw UsageError(std::string(quantile ? "quantile" : "cdf") +
                     " partition points must lie within [" + std::to_string(lo) +
                     ", " + std::to_string(hi) + "]");
  }
  if (bands != nullptr && bands->kind != kind) {
    throw UsageError("bands were computed for " + std::string(to_string(bands->kind)) +
                     " but the summary asks for " + std::string(to_string(kind)));
  }

  const std::vector<double>& coords = quantile ? result.q_points : result.y_points;
  const auto members = detail::cell_members(coords, partition);
  for (std::size_t c = 0; c < members.size(); ++c) {
    if (members[c].empty()) {
      throw UsageError("partition cell [" + std::to_string(partition[c]) + ", " +
                       std::to_string(partition[c + 1]) +
                       "] contains no grid point");
    }
  }

  SummaryTable table;
  table.kind = kind;
  table.partition.assign(partition.begin(), partition.end());
  if (bands != nullptr) table.cl = bands->cl;
  const Eigen::MatrixXd& values = estimate_for(result, kind);

  for (std::size_t t = 0; t < result.periods.size(); ++t) {
    const auto col = static_cast<Eigen::Index>(t);
    for (std::size_t c = 0; c < members.size(); ++c) {
      SummaryRow row;
      row.period = result.periods[t];
      row.post = t >= result.num_pre();
      row.range_lo = partition[c];
      row.range_hi = partition[c + 1];
      row.count = members[c].size();
      row.effect = detail::cell_mean(values, col, members[c]);
      if (bands != nullptr) {
        const auto& gaps = bands->gaps();
        const double scale = bands->draws->sqrt_n[t];
        std::vector<double> means;
        means.reserve(gaps.size());
        for (const auto& gap : gaps) {
          means.push_back(detail::cell_mean(gap, col, members[c]) / scale);
        }
        row.se = detail::sample_sd(means);
        row.ci_lo = row.effect + detail::draw_quantile(means, (1.0 - bands->cl) / 2.0);
        row.ci_hi = row.effect + detail::draw_quantile(means, (1.0 + bands->cl) / 2.0);
        row.significant = is_diff_kind(kind) && (*row.ci_lo > 0.0 || *row.ci_hi < 0.0);
      }
      table.rows.push_back(row);
    }
  }
  return table;
}

}  // namespace disco
