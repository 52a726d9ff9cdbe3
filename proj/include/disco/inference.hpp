#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "disco/config.hpp"
#include "disco/distributions.hpp"
#include "disco/error.hpp"
#include "disco/estimator.hpp"
#include "disco/panel.hpp"
#include "disco/parallel.hpp"

namespace disco {

struct PermutationResult {
  // Index 0 is the actual treated unit, followed by the controls.
  std::vector<UnitId> unit_ids;
  std::vector<double> ratios;
  std::vector<double> pre_rmse;
  std::vector<double> post_rmse;
  double p_value = 1.0;
};

// Ratio of post- to pre-treatment Wasserstein RMSE. A perfect pre-period fit
// ranks above everything when the post fit is not perfect, and counts as 1
// when both are perfect.
inline double rmse_ratio(double pre, double post) {
  if (pre > 0.0) return post / pre;
  return post > 0.0 ? std::numeric_limits<double>::infinity() : 1.0;
}

inline double permutation_p_value(const std::vector<double>& ratios) {
  if (ratios.empty()) throw UsageError("no permutation ratios");
  std::size_t count = 0;
  for (double r : ratios) count += (r >= ratios.front()) ? 1 : 0;
  return static_cast<double>(count) / static_cast<double>(ratios.size());
}

namespace detail {

struct PlaceboFit {
  double pre_rmse = 0.0;
  double post_rmse = 0.0;
};

inline PlaceboFit placebo_fit(const MicroPanel& panel, UnitId treated,
                              const DiscoConfig& config) {
  const Layout layout = layout_for(panel, treated, config);
  const CellTable table = CellTable::from_panel(panel, layout.units, layout.periods);
  const auto [amin, amax] = panel.support();
  const Grids grids = make_grids(config, amin, amax);
  const WeightFit fit = fit_weights(table, layout.num_pre, config, grids);

  double pre = 0.0;
  double post = 0.0;
  for (std::size_t t = 0; t < table.num_periods(); ++t) {
    const Eigen::VectorXd observed = quantiles_on(table.at(0, t), grids.q_fit);
    const Eigen::VectorXd synthetic = synthetic_quantiles(
        table, t, fit.weights, config.mixture, grids, grids.q_fit);
    const double d2 = wasserstein2_sq(
        {observed.data(), static_cast<std::size_t>(observed.size())},
        {synthetic.data(), static_cast<std::size_t>(synthetic.size())},
        config.qmin, config.qmax);
    (t < layout.num_pre ? pre : post) += d2;
  }
  const auto num_post = table.num_periods() - layout.num_pre;
  return {std::sqrt(pre / static_cast<double>(layout.num_pre)),
          std::sqrt(post / static_cast<double>(num_post))};
}

}  // namespace detail

// Re-runs the estimator with every unit cast as treated (all other units,
// including the real target, as donors) and ranks the post/pre RMSE ratios.
inline PermutationResult permutation_test(const MicroPanel& panel,
                                          const DiscoConfig& config) {
  config.validate();
  if (!panel.has_unit(config.target_id)) {
    throw InputError("target unit " + std::to_string(config.target_id) +
                     " is not in the panel");
  }
  PermutationResult result;
  result.unit_ids.push_back(config.target_id);
  for (UnitId id : panel.unit_ids()) {
    if (id != config.target_id) result.unit_ids.push_back(id);
  }
  if (result.unit_ids.size() < 2) throw InputError("panel has no control units");

  const std::size_t n = result.unit_ids.size();
  std::vector<detail::PlaceboFit> fits(n);
  parallel_for(n, resolve_threads(config.threads), [&](std::size_t i) {
    try {
      fits[i] = detail::placebo_fit(panel, result.unit_ids[i], config);
    } catch (const Error& e) {
      throw Error("placebo run with unit " + std::to_string(result.unit_ids[i]) +
                  " as treated failed: " + e.what());
    }
  });
  for (const auto& fit : fits) {
    result.pre_rmse.push_back(fit.pre_rmse);
    result.post_rmse.push_back(fit.post_rmse);
    result.ratios.push_back(rmse_ratio(fit.pre_rmse, fit.post_rmse));
  }
  result.p_value = permutation_p_value(result.ratios);
  return result;
}

// Bootstrap gap draws: one g x T matrix per kept replicate for each of the
// four reported functions, scaled by sqrt(n_t) with n_t the treated unit's
// cell size in period t. Synthetic-path gaps compare the resampled synthetic
// function with the point estimate; difference gaps resample the treated
// unit as well.
struct BootstrapDraws {
  std::vector<Eigen::MatrixXd> quantile_synth;
  std::vector<Eigen::MatrixXd> cdf_synth;
  std::vector<Eigen::MatrixXd> quantile_diff;
  std::vector<Eigen::MatrixXd> cdf_diff;
  std::vector<double> sqrt_n;
  std::size_t requested = 0;
  std::size_t dropped = 0;

  std::size_t effective() const noexcept { return quantile_synth.size(); }

  const std::vector<Eigen::MatrixXd>& gaps(AggKind kind) const {
    switch (kind) {
      case AggKind::kQuantile: return quantile_synth;
      case AggKind::kCdf: return cdf_synth;
      case AggKind::kQuantileDiff: return quantile_diff;
      case AggKind::kCdfDiff: return cdf_diff;
    }
    return quantile_diff;
  }
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Seed of bootstrap replicate b; replicates are independent streams.
inline std::uint64_t replicate_seed(std::uint64_t seed, std::uint64_t b) {
  return splitmix64(seed ^ splitmix64(b));
}

namespace detail {

inline CellTable resample(const CellTable& table, std::mt19937_64& rng) {
  CellTable out(table.num_units(), table.num_periods());
  for (std::size_t u = 0; u < table.num_units(); ++u) {
    for (std::size_t t = 0; t < table.num_periods(); ++t) {
      const auto& cell = table.at(u, t);
      auto& draw = out.at(u, t);
      draw.resize(cell.size());
      std::uniform_int_distribution<std::size_t> pick(0, cell.size() - 1);
      for (auto& v : draw) v = cell[pick(rng)];
      std::sort(draw.begin(), draw.end());
    }
  }
  return out;
}

}  // namespace detail

inline BootstrapDraws bootstrap_gaps(const MicroPanel& panel,
                                     const DiscoConfig& config,
                                     const DiscoResult& point) {
  config.validate();
  const detail::Layout layout = detail::layout_for(panel, config.target_id, config);
  const CellTable table = CellTable::from_panel(panel, layout.units, layout.periods);
  const Grids grids = make_grids(config, point.amin, point.amax);
  const std::size_t boots = config.inference.boots;

  struct Slot {
    bool ok = false;
    Eigen::MatrixXd qs, cs, qd, cd;
  };
  std::vector<Slot> slots(boots);
  std::vector<double> sqrt_n;
  for (std::size_t count : point.treated_counts) {
    sqrt_n.push_back(std::sqrt(static_cast<double>(count)));
  }
  const Eigen::RowVectorXd scale =
      Eigen::Map<const Eigen::RowVectorXd>(sqrt_n.data(), static_cast<Eigen::Index>(sqrt_n.size()));

  parallel_for(boots, resolve_threads(config.threads), [&](std::size_t b) {
    std::mt19937_64 rng(replicate_seed(config.seed, b));
    const CellTable draw = detail::resample(table, rng);
    try {
      const WeightFit fit = fit_weights(draw, layout.num_pre, config, grids);
      const SyntheticPaths paths = build_paths(draw, fit.weights, config, grids);
      Slot& slot = slots[b];
      slot.qs = (paths.quantile_synth - point.quantile_synth).array().rowwise() *
                scale.array();
      slot.cs = (paths.cdf_synth - point.cdf_synth).array().rowwise() * scale.array();
      slot.qd = ((paths.quantile_t - paths.quantile_synth) - point.quantile_diff)
                    .array()
                    .rowwise() *
                scale.array();
      slot.cd = ((paths.cdf_t - paths.cdf_synth) - point.cdf_diff).array().rowwise() *
                scale.array();
      slot.ok = true;
    } catch (const SolverError&) {
      slots[b].ok = false;
    }
  });

  BootstrapDraws draws;
  draws.requested = boots;
  draws.sqrt_n = sqrt_n;
  for (auto& slot : slots) {
    if (!slot.ok) {
      ++draws.dropped;
      continue;
    }
    draws.quantile_synth.push_back(std::move(slot.qs));
    draws.cdf_synth.push_back(std::move(slot.cs));
    draws.quantile_diff.push_back(std::move(slot.qd));
    draws.cdf_diff.push_back(std::move(slot.cd));
  }
  if (static_cast<double>(draws.dropped) > 0.05 * static_cast<double>(boots)) {
    throw SolverError(std::to_string(draws.dropped) + " of " +
                      std::to_string(boots) +
                      " bootstrap replicates failed to solve");
  }
  if (draws.effective() == 0) throw SolverError("no bootstrap replicate solved");
  return draws;
}

struct Bands {
  Eigen::MatrixXd lower;
  Eigen::MatrixXd upper;
  // Pointwise standard deviation of the draws, in the estimate's units.
  Eigen::MatrixXd se;
};

namespace detail {

// Left-continuous empirical quantile of unsorted values.
inline double draw_quantile(std::vector<double> values, double level) {
  std::sort(values.begin(), values.end());
  return sorted_quantile(values, level);
}

inline double sample_sd(const std::vector<double>& values) {
  if (values.size() < 2) return 0.0;
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

}  // namespace detail

// Pointwise bands take the (1-cl)/2 and (1+cl)/2 quantiles of the gap draws
// around the estimate. Uniform bands are sup-t bands per period: each tail's
// critical value is the (1+cl)/2 quantile of the largest standardized gap in
// that direction across grid points. Gaps are divided by `scale` (one entry
// per period) to return to the estimate's units.
inline Bands confidence_bands(const std::vector<Eigen::MatrixXd>& gaps,
                              const Eigen::MatrixXd& estimate,
                              const std::vector<double>& scale, double cl,
                              bool uniform) {
  if (gaps.empty()) throw UsageError("confidence bands need at least one draw");
  if (!(cl > 0.0 && cl < 1.0)) throw UsageError("cl must lie in (0, 1)");
  const auto rows = estimate.rows();
  const auto cols = estimate.cols();
  if (static_cast<Eigen::Index>(scale.size()) != cols) {
    throw UsageError("one scale factor per period is required");
  }
  for (const auto& gap : gaps) {
    if (gap.rows() != rows || gap.cols() != cols) {
      throw UsageError("gap draws do not match the estimate's shape");
    }
  }

  Bands bands;
  bands.lower.resize(rows, cols);
  bands.upper.resize(rows, cols);
  bands.se.resize(rows, cols);
  const std::size_t boots = gaps.size();
  const double lo_level = (1.0 - cl) / 2.0;
  const double hi_level = (1.0 + cl) / 2.0;

  std::vector<double> values(boots);
  for (Eigen::Index t = 0; t < cols; ++t) {
    Eigen::VectorXd sd(rows);
    for (Eigen::Index k = 0; k < rows; ++k) {
      for (std::size_t b = 0; b < boots; ++b) values[b] = gaps[b](k, t);
      sd(k) = detail::sample_sd(values);
      bands.se(k, t) = sd(k) / scale[static_cast<std::size_t>(t)];
      if (!uniform || boots == 1) {
        bands.lower(k, t) = estimate(k, t) + detail::draw_quantile(values, lo_level) /
                                                 scale[static_cast<std::size_t>(t)];
        bands.upper(k, t) = estimate(k, t) + detail::draw_quantile(values, hi_level) /
                                                 scale[static_cast<std::size_t>(t)];
      }
    }
    if (!uniform || boots == 1) continue;

    std::vector<double> up(boots), down(boots);
    for (std::size_t b = 0; b < boots; ++b) {
      double hi = -std::numeric_limits<double>::infinity();
      double lo = -std::numeric_limits<double>::infinity();
      for (Eigen::Index k = 0; k < rows; ++k) {
        const double z = gaps[b](k, t) / std::max(sd(k), 1e-12);
        hi = std::max(hi, z);
        lo = std::max(lo, -z);
      }
      up[b] = hi;
      down[b] = lo;
    }
    const double c_up = detail::draw_quantile(up, hi_level);
    const double c_down = detail::draw_quantile(down, hi_level);
    for (Eigen::Index k = 0; k < rows; ++k) {
      const double width = std::max(sd(k), 1e-12) / scale[static_cast<std::size_t>(t)];
      bands.upper(k, t) = estimate(k, t) + c_up * width;
      bands.lower(k, t) = estimate(k, t) - c_down * width;
    }
  }
  return bands;
}

// Bands for one reported function, keeping the draws they were built from so
// summaries can be recomputed for any partition.
struct BootstrapBands {
  AggKind kind = AggKind::kQuantileDiff;
  bool uniform = true;
  double cl = 0.95;
  Eigen::MatrixXd estimate;
  Eigen::MatrixXd lower;
  Eigen::MatrixXd upper;
  Eigen::MatrixXd se;
  const BootstrapDraws* draws = nullptr;

  const std::vector<Eigen::MatrixXd>& gaps() const { return draws->gaps(kind); }
};

inline const Eigen::MatrixXd& estimate_for(const DiscoResult& result, AggKind kind) {
  switch (kind) {
    case AggKind::kQuantile: return result.quantile_synth;
    case AggKind::kCdf: return result.cdf_synth;
    case AggKind::kQuantileDiff: return result.quantile_diff;
    case AggKind::kCdfDiff: return result.cdf_diff;
  }
  return result.quantile_diff;
}

inline BootstrapBands bands_for(const BootstrapDraws& draws,
                                const DiscoResult& result, AggKind kind,
                                double cl, bool uniform) {
  BootstrapBands out;
  out.kind = kind;
  out.uniform = uniform;
  out.cl = cl;
  out.estimate = estimate_for(result, kind);
  Bands bands = confidence_bands(draws.gaps(kind), out.estimate, draws.sqrt_n,
                                 cl, uniform);
  out.lower = std::move(bands.lower);
  out.upper = std::move(bands.upper);
  out.se = std::move(bands.se);
  out.draws = &draws;
  return out;
}

}  // namespace disco
