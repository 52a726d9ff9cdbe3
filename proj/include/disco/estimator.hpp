#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <span>
#include <string>
#include <vector>

#include "disco/config.hpp"
#include "disco/distributions.hpp"
#include "disco/error.hpp"
#include "disco/panel.hpp"
#include "disco/solvers.hpp"

namespace disco {

// Sorted samples of the units entering one estimation, indexed by
// (unit position, period position). Position 0 is the treated unit; the
// remaining positions are the donors in order.
class CellTable {
 public:
  CellTable(std::size_t num_units, std::size_t num_periods)
      : num_units_(num_units),
        num_periods_(num_periods),
        cells_(num_units * num_periods) {}

  static CellTable from_panel(const MicroPanel& panel,
                              std::span<const UnitId> units,
                              std::span<const Period> periods) {
    CellTable table(units.size(), periods.size());
    for (std::size_t u = 0; u < units.size(); ++u) {
      for (std::size_t t = 0; t < periods.size(); ++t) {
        if (!panel.has_cell(units[u], periods[t])) {
          throw InputError("unit " + std::to_string(units[u]) +
                           " has no observations in period " +
                           std::to_string(periods[t]));
        }
        table.at(u, t) = panel.cell(units[u], periods[t]);
      }
    }
    return table;
  }

  std::size_t num_units() const noexcept { return num_units_; }
  std::size_t num_donors() const noexcept { return num_units_ - 1; }
  std::size_t num_periods() const noexcept { return num_periods_; }

  std::vector<double>& at(std::size_t unit, std::size_t period) {
    return cells_[unit * num_periods_ + period];
  }
  const std::vector<double>& at(std::size_t unit, std::size_t period) const {
    return cells_[unit * num_periods_ + period];
  }

 private:
  std::size_t num_units_;
  std::size_t num_periods_;
  std::vector<std::vector<double>> cells_;
};

// Probability grids for fitting (m points) and reporting (g points), and the
// common support grid (g points on [amin, amax]).
struct Grids {
  std::vector<double> q_fit;
  std::vector<double> q_eval;
  std::vector<double> y_eval;
  double cell_width = 0.0;
  double qmin = 0.0;
  double qmax = 1.0;
};

inline Grids make_grids(const DiscoConfig& config, double amin, double amax) {
  Grids grids;
  grids.q_fit = probability_grid(config.m, config.qmin, config.qmax);
  grids.q_eval = probability_grid(config.g, config.qmin, config.qmax);
  grids.y_eval = support_grid(config.g, amin, amax);
  grids.cell_width = (amax - amin) / static_cast<double>(config.g - 1);
  grids.qmin = config.qmin;
  grids.qmax = config.qmax;
  return grids;
}

// Treated and synthetic functions on the reporting grids, one column per
// period.
struct SyntheticPaths {
  Eigen::MatrixXd quantile_t;
  Eigen::MatrixXd quantile_synth;
  Eigen::MatrixXd cdf_t;
  Eigen::MatrixXd cdf_synth;
};

namespace detail {

inline Eigen::VectorXd quantiles_on(const std::vector<double>& sorted,
                                    std::span<const double> probs) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(probs.size()));
  for (std::size_t i = 0; i < probs.size(); ++i) {
    out(static_cast<Eigen::Index>(i)) = sorted_quantile(sorted, probs[i]);
  }
  return out;
}

inline Eigen::VectorXd cdf_on(const std::vector<double>& sorted,
                              std::span<const double> ys) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(ys.size()));
  for (std::size_t k = 0; k < ys.size(); ++k) {
    out(static_cast<Eigen::Index>(k)) = sorted_cdf(sorted, ys[k]);
  }
  return out;
}

inline Eigen::VectorXd mixture_cdf_on(const CellTable& table, std::size_t t,
                                      const Eigen::VectorXd& weights,
                                      std::span<const double> ys) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(ys.size()));
  for (std::size_t j = 0; j < table.num_donors(); ++j) {
    const double w = weights(static_cast<Eigen::Index>(j));
    if (w == 0.0) continue;
    out += w * cdf_on(table.at(j + 1, t), ys);
  }
  return out;
}

inline Eigen::VectorXd invert_cdf(const Eigen::VectorXd& cdf,
                                  std::span<const double> ys,
                                  std::span<const double> probs) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(probs.size()));
  std::span<const double> values(cdf.data(), static_cast<std::size_t>(cdf.size()));
  for (std::size_t i = 0; i < probs.size(); ++i) {
    out(static_cast<Eigen::Index>(i)) = quantile_from_cdf(values, ys, probs[i]).value;
  }
  return out;
}

// Synthetic quantile function of period t on the probabilities `probs`.
inline Eigen::VectorXd synthetic_quantiles(const CellTable& table,
                                           std::size_t t,
                                           const Eigen::VectorXd& weights,
                                           bool mixture, const Grids& grids,
                                           std::span<const double> probs) {
  if (mixture) {
    return invert_cdf(mixture_cdf_on(table, t, weights, grids.y_eval),
                      grids.y_eval, probs);
  }
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(probs.size()));
  for (std::size_t j = 0; j < table.num_donors(); ++j) {
    const double w = weights(static_cast<Eigen::Index>(j));
    if (w == 0.0) continue;
    out += w * quantiles_on(table.at(j + 1, t), probs);
  }
  return out;
}

// CDF of a quantile function sampled on the fitting grid: the share of
// [qmin, qmax] on which it stays <= y.
inline Eigen::VectorXd cdf_from_quantiles(const Eigen::VectorXd& quantiles,
                                          const Grids& grids) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(grids.y_eval.size()));
  const double width = grids.qmax - grids.qmin;
  const auto m = static_cast<double>(quantiles.size());
  for (std::size_t k = 0; k < grids.y_eval.size(); ++k) {
    const double y = grids.y_eval[k];
    const auto below = (quantiles.array() <= y).count();
    out(static_cast<Eigen::Index>(k)) =
        grids.qmin + width * static_cast<double>(below) / m;
  }
  return out;
}

inline LsProblem period_problem(const CellTable& table, std::size_t t,
                                const DiscoConfig& config, const Grids& grids) {
  const std::size_t donors = table.num_donors();
  LsProblem problem;
  problem.simplex = config.simplex;
  if (config.mixture) {
    const auto rows = static_cast<Eigen::Index>(grids.y_eval.size());
    problem.design.resize(rows, static_cast<Eigen::Index>(donors));
    for (std::size_t j = 0; j < donors; ++j) {
      problem.design.col(static_cast<Eigen::Index>(j)) =
          cdf_on(table.at(j + 1, t), grids.y_eval);
    }
    problem.target = cdf_on(table.at(0, t), grids.y_eval);
    problem.cell_width = grids.cell_width;
  } else {
    const auto rows = static_cast<Eigen::Index>(grids.q_fit.size());
    problem.design.resize(rows, static_cast<Eigen::Index>(donors));
    for (std::size_t j = 0; j < donors; ++j) {
      problem.design.col(static_cast<Eigen::Index>(j)) =
          quantiles_on(table.at(j + 1, t), grids.q_fit);
    }
    problem.target = quantiles_on(table.at(0, t), grids.q_fit);
  }
  return problem;
}

inline WeightVector solve_period(const CellTable& table, std::size_t t,
                                 const DiscoConfig& config,
                                 const Grids& grids) {
  const LsProblem problem = period_problem(table, t, config, grids);
  if (config.mixture) return solve_simplex_l1(problem);
  return config.simplex ? solve_simplex_ls(problem) : solve_affine_ls(problem);
}

}  // namespace detail

// Unweighted mean of per-period weight rows.
inline Eigen::VectorXd average_weights(const Eigen::MatrixXd& period_weights) {
  if (period_weights.rows() < 1) {
    throw UsageError("averaging needs at least one pre-treatment period");
  }
  return period_weights.colwise().mean().transpose();
}

// Midpoint-rule integral of the squared difference of two quantile functions
// sampled on the same midpoint grid over [qmin, qmax].
inline double wasserstein2_sq(std::span<const double> qf_a,
                              std::span<const double> qf_b, double qmin,
                              double qmax) {
  if (qf_a.size() != qf_b.size() || qf_a.empty()) {
    throw UsageError("quantile vectors must be nonempty and equal length");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < qf_a.size(); ++i) {
    const double diff = qf_a[i] - qf_b[i];
    sum += diff * diff;
  }
  return (qmax - qmin) * sum / static_cast<double>(qf_a.size());
}

inline SyntheticPaths build_paths(const CellTable& table,
                                  const Eigen::VectorXd& weights,
                                  const DiscoConfig& config,
                                  const Grids& grids) {
  const auto g = static_cast<Eigen::Index>(grids.q_eval.size());
  const auto periods = static_cast<Eigen::Index>(table.num_periods());
  SyntheticPaths paths;
  paths.quantile_t.resize(g, periods);
  paths.quantile_synth.resize(g, periods);
  paths.cdf_t.resize(g, periods);
  paths.cdf_synth.resize(g, periods);
  for (Eigen::Index t = 0; t < periods; ++t) {
    const auto tt = static_cast<std::size_t>(t);
    paths.quantile_t.col(t) = detail::quantiles_on(table.at(0, tt), grids.q_eval);
    paths.cdf_t.col(t) = detail::cdf_on(table.at(0, tt), grids.y_eval);
    if (config.mixture) {
      const Eigen::VectorXd cdf =
          detail::mixture_cdf_on(table, tt, weights, grids.y_eval);
      paths.cdf_synth.col(t) = cdf;
      paths.quantile_synth.col(t) =
          detail::invert_cdf(cdf, grids.y_eval, grids.q_eval);
    } else {
      paths.quantile_synth.col(t) = detail::synthetic_quantiles(
          table, tt, weights, false, grids, grids.q_eval);
      paths.cdf_synth.col(t) = detail::cdf_from_quantiles(
          detail::synthetic_quantiles(table, tt, weights, false, grids,
                                      grids.q_fit),
          grids);
    }
  }
  return paths;
}

// Per-period weights on the first `num_pre` periods of the table and their
// average.
struct WeightFit {
  Eigen::MatrixXd period_weights;
  Eigen::VectorXd weights;
  std::vector<double> objectives;
};

inline WeightFit fit_weights(const CellTable& table, std::size_t num_pre,
                             const DiscoConfig& config, const Grids& grids) {
  WeightFit fit;
  fit.period_weights.resize(static_cast<Eigen::Index>(num_pre),
                            static_cast<Eigen::Index>(table.num_donors()));
  for (std::size_t t = 0; t < num_pre; ++t) {
    WeightVector w = detail::solve_period(table, t, config, grids);
    fit.period_weights.row(static_cast<Eigen::Index>(t)) = w.weights.transpose();
    fit.objectives.push_back(w.objective);
  }
  fit.weights = average_weights(fit.period_weights);
  return fit;
}

struct DiscoResult {
  UnitId target_id = 0;
  std::vector<UnitId> control_ids;
  std::vector<Period> periods;
  std::vector<Period> pre_periods;
  std::vector<Period> post_periods;
  Eigen::MatrixXd period_weights;
  Eigen::VectorXd weights;
  std::vector<double> period_objectives;
  std::vector<double> q_points;
  std::vector<double> y_points;
  Eigen::MatrixXd quantile_t;
  Eigen::MatrixXd quantile_synth;
  Eigen::MatrixXd cdf_t;
  Eigen::MatrixXd cdf_synth;
  Eigen::MatrixXd quantile_diff;
  Eigen::MatrixXd cdf_diff;
  double amin = 0.0;
  double amax = 0.0;
  // Treated-unit observation count per period.
  std::vector<std::size_t> treated_counts;

  std::size_t num_pre() const noexcept { return pre_periods.size(); }
};

namespace detail {

struct Layout {
  std::vector<UnitId> units;  // treated first
  std::vector<Period> periods;
  std::size_t num_pre = 0;
};

inline Layout layout_for(const MicroPanel& panel, UnitId treated,
                         const DiscoConfig& config) {
  if (!panel.has_unit(treated)) {
    throw InputError("target unit " + std::to_string(treated) +
                     " is not in the panel");
  }
  Layout layout;
  layout.units.push_back(treated);
  for (UnitId id : panel.unit_ids()) {
    if (id != treated) layout.units.push_back(id);
  }
  if (layout.units.size() < 2) throw InputError("panel has no control units");
  layout.periods = panel.periods();
  for (Period p : layout.periods) layout.num_pre += (p < config.t0) ? 1 : 0;
  if (layout.num_pre == 0) {
    throw InputError("t0 = " + std::to_string(config.t0) +
                     " leaves no pre-treatment period");
  }
  if (layout.num_pre == layout.periods.size()) {
    throw InputError("all periods are pre-treatment (t0 = " +
                     std::to_string(config.t0) + ")");
  }
  return layout;
}

inline DiscoResult assemble(const Layout& layout, const CellTable& table,
                            const WeightFit& fit, SyntheticPaths paths,
                            const Grids& grids, double amin, double amax) {
  DiscoResult result;
  result.target_id = layout.units.front();
  result.control_ids.assign(layout.units.begin() + 1, layout.units.end());
  result.periods = layout.periods;
  result.pre_periods.assign(layout.periods.begin(),
                            layout.periods.begin() + static_cast<std::ptrdiff_t>(layout.num_pre));
  result.post_periods.assign(layout.periods.begin() + static_cast<std::ptrdiff_t>(layout.num_pre),
                             layout.periods.end());
  result.period_weights = fit.period_weights;
  result.weights = fit.weights;
  result.period_objectives = fit.objectives;
  result.q_points = grids.q_eval;
  result.y_points = grids.y_eval;
  result.quantile_diff = paths.quantile_t - paths.quantile_synth;
  result.cdf_diff = paths.cdf_t - paths.cdf_synth;
  result.quantile_t = std::move(paths.quantile_t);
  result.quantile_synth = std::move(paths.quantile_synth);
  result.cdf_t = std::move(paths.cdf_t);
  result.cdf_synth = std::move(paths.cdf_synth);
  result.amin = amin;
  result.amax = amax;
  for (std::size_t t = 0; t < table.num_periods(); ++t) {
    result.treated_counts.push_back(table.at(0, t).size());
  }
  return result;
}

// Full estimator with `treated` cast as the treated unit and every other
// unit as a donor.
inline DiscoResult run_for_unit(const MicroPanel& panel, UnitId treated,
                                const DiscoConfig& config) {
  config.validate();
  const Layout layout = layout_for(panel, treated, config);
  const CellTable table = CellTable::from_panel(panel, layout.units, layout.periods);
  const auto [amin, amax] = panel.support();
  const Grids grids = make_grids(config, amin, amax);
  const WeightFit fit = fit_weights(table, layout.num_pre, config, grids);
  return assemble(layout, table, fit, build_paths(table, fit.weights, config, grids),
                  grids, amin, amax);
}

}  // namespace detail

// Optimal weights for a single pre-treatment period.
inline WeightVector period_weights(const MicroPanel& panel,
                                   const DiscoConfig& config, Period period) {
  config.validate();
  if (period >= config.t0) {
    throw UsageError("period " + std::to_string(period) +
                     " is not before t0 = " + std::to_string(config.t0));
  }
  const detail::Layout layout = detail::layout_for(panel, config.target_id, config);
  const Period only[] = {period};
  const CellTable table = CellTable::from_panel(panel, layout.units, only);
  const auto [amin, amax] = panel.support();
  return detail::solve_period(table, 0, config, make_grids(config, amin, amax));
}

// Treated and synthetic paths for every period under fixed donor weights.
inline SyntheticPaths synthetic_paths(const MicroPanel& panel,
                                      const Eigen::VectorXd& weights,
                                      const DiscoConfig& config) {
  config.validate();
  const detail::Layout layout = detail::layout_for(panel, config.target_id, config);
  if (weights.size() != static_cast<Eigen::Index>(layout.units.size() - 1)) {
    throw UsageError("weight vector length does not match the donor count");
  }
  const CellTable table = CellTable::from_panel(panel, layout.units, layout.periods);
  const auto [amin, amax] = panel.support();
  return build_paths(table, weights, config, make_grids(config, amin, amax));
}

inline DiscoResult run_disco(const MicroPanel& panel, const DiscoConfig& config) {
  return detail::run_for_unit(panel, config.target_id, config);
}

// The synthetic quantile function of a period evaluated exactly at q, as the
// weighted average of donor empirical quantile functions.
inline double barycenter_quantile(const MicroPanel& panel,
                                  const DiscoResult& result, Period period,
                                  double q) {
  double value = 0.0;
  for (std::size_t j = 0; j < result.control_ids.size(); ++j) {
    const double w = result.weights(static_cast<Eigen::Index>(j));
    if (w != 0.0) value += w * sorted_quantile(panel.cell(result.control_ids[j], period), q);
  }
  return value;
}

// The mixture of donor empirical CDFs of a period evaluated at y.
inline double mixture_cdf(const MicroPanel& panel, const DiscoResult& result,
                          Period period, double y) {
  double value = 0.0;
  for (std::size_t j = 0; j < result.control_ids.size(); ++j) {
    const double w = result.weights(static_cast<Eigen::Index>(j));
    if (w != 0.0) value += w * sorted_cdf(panel.cell(result.control_ids[j], period), y);
  }
  return value;
}

// Pseudo-inverse of mixture_cdf: the smallest donor observation at which the
// mixture reaches q.
inline double mixture_quantile(const MicroPanel& panel,
                               const DiscoResult& result, Period period,
                               double q) {
  std::vector<double> atoms;
  for (std::size_t j = 0; j < result.control_ids.size(); ++j) {
    if (result.weights(static_cast<Eigen::Index>(j)) == 0.0) continue;
    const auto& cell = panel.cell(result.control_ids[j], period);
    atoms.insert(atoms.end(), cell.begin(), cell.end());
  }
  if (atoms.empty()) throw UsageError("all mixture weights are zero");
  std::sort(atoms.begin(), atoms.end());
  atoms.erase(std::unique(atoms.begin(), atoms.end()), atoms.end());
  auto it = std::partition_point(atoms.begin(), atoms.end(), [&](double y) {
    return mixture_cdf(panel, result, period, y) + 1e-12 < q;
  });
  return it == atoms.end() ? atoms.back() : *it;
}

}  // namespace disco
