#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "disco/aggregation.hpp"
#include "disco/config.hpp"
#include "disco/estimator.hpp"
#include "disco/inference.hpp"
#include "disco/json_writer.hpp"
#include "disco/panel.hpp"
#include "disco/plot.hpp"

namespace disco {

inline constexpr const char* kVersion = "1.0.0";

struct RunManifest {
  std::string version = kVersion;
  std::size_t rows = 0;
  std::vector<UnitId> units;
  std::vector<Period> periods;
  std::vector<std::pair<MicroPanel::CellKey, std::size_t>> cell_counts;
  std::optional<double> seconds;
  std::vector<std::string> outputs;

  static RunManifest digest(const MicroPanel& panel, std::size_t rows) {
    RunManifest manifest;
    manifest.rows = rows;
    manifest.units = panel.unit_ids();
    manifest.periods = panel.periods();
    for (const auto& [key, values] : panel.cells()) {
      manifest.cell_counts.emplace_back(key, values.size());
    }
    return manifest;
  }
};

struct EmitOptions {
  std::size_t top = 5;
  double round = 1e-4;
  bool plots = false;
  bool categorical = false;
  std::optional<double> hline;
  std::optional<double> vline;
};

// Everything produced by one run.
struct RunOutputs {
  const DiscoConfig* config = nullptr;
  const DiscoResult* result = nullptr;
  const PermutationResult* permutation = nullptr;
  const BootstrapDraws* draws = nullptr;
  const BootstrapBands* bands = nullptr;
  const SummaryTable* summary = nullptr;
  const std::map<UnitId, std::string>* names = nullptr;
  std::size_t num_observations = 0;
};

inline std::string result_json(const RunOutputs& run) {
  const DiscoConfig& config = *run.config;
  const DiscoResult& result = *run.result;
  JsonWriter json;
  json.begin_object();
  json.field("cmd", "disco");
  json.field("version", kVersion);
  json.field("target_id", result.target_id);
  json.field("t0", config.t0);
  json.field("t_max", result.periods.back());
  json.field("N", run.num_observations);
  json.field("m", config.m);
  json.field("g", config.g);
  json.field("mixture", config.mixture);
  json.field("simplex", config.simplex);
  json.field("qmin", config.qmin);
  json.field("qmax", config.qmax);
  json.field("agg", to_string(config.agg));
  json.field("seed", static_cast<std::size_t>(config.seed));
  json.field("amin", result.amin);
  json.field("amax", result.amax);
  json.field("cids", result.control_ids);
  json.field("periods", result.periods);
  json.field("pre_periods", result.pre_periods);
  json.field("post_periods", result.post_periods);
  json.field("q_points", result.q_points);
  json.field("y_points", result.y_points);
  json.field("weights", result.weights);
  json.field("period_weights", result.period_weights);
  json.field("period_objectives", result.period_objectives);
  json.field("quantile_t", result.quantile_t);
  json.field("quantile_synth", result.quantile_synth);
  json.field("quantile_diff", result.quantile_diff);
  json.field("cdf_t", result.cdf_t);
  json.field("cdf_synth", result.cdf_synth);
  json.field("cdf_diff", result.cdf_diff);
  if (run.permutation != nullptr) {
    const auto& perm = *run.permutation;
    json.field("pval", perm.p_value);
    json.key("permutation");
    json.begin_object();
    json.field("unit_ids", perm.unit_ids);
    json.field("ratios", perm.ratios);
    json.field("pre_rmse", perm.pre_rmse);
    json.field("post_rmse", perm.post_rmse);
    json.end_object();
  }
  json.field("doci", run.bands != nullptr);
  if (run.bands != nullptr && run.draws != nullptr) {
    const auto& bands = *run.bands;
    json.field("cl", bands.cl);
    json.field("boots", run.draws->requested);
    json.field("boots_effective", run.draws->effective());
    json.field("boots_dropped", run.draws->dropped);
    json.key("bands");
    json.begin_object();
    json.field("kind", to_string(bands.kind));
    json.field("band_kind", bands.uniform ? "uniform" : "pointwise");
    json.field("lower", bands.lower);
    json.field("upper", bands.upper);
    json.field("se", bands.se);
    json.end_object();
  }
  json.end_object();
  return json.str();
}

namespace detail {

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline std::string fixed(double v, int digits) {
  char buffer[64];
  std::snprintf(buffer, sizeof buffer, "%.*f", digits, v);
  return buffer;
}

}  // namespace detail

// Top weights, largest first; ties keep control order.
inline std::string weights_csv(const DiscoResult& result,
                               const std::map<UnitId, std::string>* names,
                               std::size_t top, double round) {
  std::vector<std::size_t> order(result.control_ids.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return result.weights(static_cast<Eigen::Index>(a)) >
           result.weights(static_cast<Eigen::Index>(b));
  });
  const int digits = round > 0.0 ? std::max(0, static_cast<int>(std::ceil(-std::log10(round) - 1e-9))) : 17;
  std::string csv = "rank,id,name,weight\n";
  for (std::size_t r = 0; r < std::min(top, order.size()); ++r) {
    const std::size_t j = order[r];
    const UnitId id = result.control_ids[j];
    double w = result.weights(static_cast<Eigen::Index>(j));
    if (round > 0.0) w = std::round(w / round) * round;
    std::string name;
    if (names != nullptr) {
      auto it = names->find(id);
      if (it != names->end()) name = it->second;
    }
    csv += std::to_string(r + 1) + "," + std::to_string(id) + "," +
           detail::csv_field(name) + "," +
           (round > 0.0 ? detail::fixed(w, digits) : format_double(w)) + "\n";
  }
  return csv;
}

inline std::string summary_csv(const SummaryTable& table) {
  const bool ci = table.cl.has_value();
  std::string csv = "period,post,range_lo,range_hi,count,effect";
  if (ci) csv += ",se,ci_lo,ci_hi,significant";
  csv += "\n";
  for (const auto& row : table.rows) {
    csv += std::to_string(row.period) + "," + (row.post ? "1" : "0") + "," +
           format_double(row.range_lo) + "," + format_double(row.range_hi) + "," +
           std::to_string(row.count) + "," + format_double(row.effect);
    if (ci) {
      csv += "," + format_double(row.se.value_or(NAN)) + "," +
             format_double(row.ci_lo.value_or(NAN)) + "," +
             format_double(row.ci_hi.value_or(NAN)) + "," +
             (row.significant ? "1" : "0");
    }
    csv += "\n";
  }
  return csv;
}

// Long-format grid values of one period (one row per grid index).
inline std::string plot_data_csv(const DiscoResult& result, std::size_t t,
                                 const BootstrapBands* bands) {
  std::string csv =
      "period,grid_index,q,quantile_t,quantile_synth,quantile_diff,y,cdf_t,"
      "cdf_synth,cdf_diff";
  if (bands != nullptr) csv += ",band_kind,lower,upper,se";
  csv += "\n";
  const auto col = static_cast<Eigen::Index>(t);
  for (std::size_t k = 0; k < result.q_points.size(); ++k) {
    const auto row = static_cast<Eigen::Index>(k);
    csv += std::to_string(result.periods[t]) + "," + std::to_string(k) + "," +
           format_double(result.q_points[k]) + "," +
           format_double(result.quantile_t(row, col)) + "," +
           format_double(result.quantile_synth(row, col)) + "," +
           format_double(result.quantile_diff(row, col)) + "," +
           format_double(result.y_points[k]) + "," +
           format_double(result.cdf_t(row, col)) + "," +
           format_double(result.cdf_synth(row, col)) + "," +
           format_double(result.cdf_diff(row, col));
    if (bands != nullptr) {
      csv += "," + std::string(to_string(bands->kind)) + "," +
             format_double(bands->lower(row, col)) + "," +
             format_double(bands->upper(row, col)) + "," +
             format_double(bands->se(row, col));
    }
    csv += "\n";
  }
  return csv;
}

inline std::string period_svg(const DiscoResult& result, std::size_t t,
                              AggKind kind, const BootstrapBands* bands,
                              const EmitOptions& options) {
  const auto col = static_cast<Eigen::Index>(t);
  const bool quantile = is_quantile_kind(kind);
  PlotSpec spec;
  spec.title = "Period " + std::to_string(result.periods[t]) +
               (t >= result.num_pre() ? " (post)" : " (pre)");
  spec.x = quantile ? result.q_points : result.y_points;
  spec.x_title = quantile ? "Quantile" : "Outcome";
  spec.bars = options.categorical && !quantile;
  spec.hline = options.hline;
  spec.vline = options.vline;
  auto column = [&](const Eigen::MatrixXd& m) {
    std::vector<double> out(static_cast<std::size_t>(m.rows()));
    for (Eigen::Index k = 0; k < m.rows(); ++k) out[static_cast<std::size_t>(k)] = m(k, col);
    return out;
  };
  if (is_diff_kind(kind)) {
    spec.y_title = quantile ? "Quantile difference" : "CDF difference";
    spec.series.push_back({"treated - synthetic", "#1f4e9c",
                           column(quantile ? result.quantile_diff : result.cdf_diff), false});
  } else {
    spec.y_title = quantile ? "Quantile" : "CDF";
    spec.series.push_back({"treated", "#1f4e9c",
                           column(quantile ? result.quantile_t : result.cdf_t), false});
    spec.series.push_back({"synthetic", "#c0392b",
                           column(quantile ? result.quantile_synth : result.cdf_synth), true});
  }
  if (bands != nullptr && bands->kind == kind) {
    spec.band_lower = column(bands->lower);
    spec.band_upper = column(bands->upper);
  }
  return render_svg(spec);
}

inline std::string manifest_json(const RunManifest& manifest,
                                 const DiscoConfig& config) {
  JsonWriter json;
  json.begin_object();
  json.field("version", manifest.version);
  json.key("config");
  json.begin_object();
  json.field("target_id", config.target_id);
  json.field("t0", config.t0);
  json.field("m", config.m);
  json.field("g", config.g);
  json.field("mixture", config.mixture);
  json.field("simplex", config.simplex);
  json.field("qmin", config.qmin);
  json.field("qmax", config.qmax);
  json.field("ci", config.inference.ci);
  json.field("boots", config.inference.boots);
  json.field("cl", config.inference.cl);
  json.field("uniform", config.inference.uniform);
  json.field("permutation", config.inference.permutation);
  json.field("agg", to_string(config.agg));
  json.field("samples", config.samples);
  json.end_object();
  json.field("seed", static_cast<std::size_t>(config.seed));
  json.key("panel");
  json.begin_object();
  json.field("rows", manifest.rows);
  json.field("units", manifest.units);
  json.field("periods", manifest.periods);
  json.key("cell_counts");
  json.begin_array();
  for (const auto& [key, count] : manifest.cell_counts) {
    json.begin_array();
    json.value(key.first);
    json.value(key.second);
    json.value(count);
    json.end_array();
  }
  json.end_array();
  json.end_object();
  if (manifest.seconds) json.field("seconds", *manifest.seconds);
  json.field("outputs", manifest.outputs);
  json.end_object();
  return json.str();
}

// Writes every output file into out_dir and returns their names in order.
inline std::vector<std::string> emit_results(const RunOutputs& run,
                                             RunManifest manifest,
                                             const EmitOptions& options,
                                             const std::filesystem::path& out_dir) {
  const DiscoResult& result = *run.result;
  std::vector<std::pair<std::string, std::string>> files;
  files.emplace_back("result.json", result_json(run));
  files.emplace_back("weights.csv", weights_csv(result, run.names, options.top, options.round));
  if (run.summary != nullptr) files.emplace_back("summary.csv", summary_csv(*run.summary));
  for (std::size_t t = 0; t < result.periods.size(); ++t) {
    const std::string stem = "period_" + std::to_string(result.periods[t]);
    files.emplace_back("plot_data_" + stem + ".csv", plot_data_csv(result, t, run.bands));
    if (options.plots) {
      files.emplace_back("plot_" + stem + ".svg",
                         period_svg(result, t, run.config->agg, run.bands, options));
    }
  }
  for (const auto& file : files) manifest.outputs.push_back(file.first);
  manifest.outputs.push_back("manifest.json");
  files.emplace_back("manifest.json", manifest_json(manifest, *run.config));

  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw Error("cannot create output directory '" + out_dir.string() + "': " + ec.message());
  for (const auto& [name, content] : files) {
    const auto path = out_dir / name;
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << content;
    if (!out) throw Error("cannot write '" + path.string() + "'");
  }
  return manifest.outputs;
}

}  // namespace disco
