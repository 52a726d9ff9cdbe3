#pragma once

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "disco/aggregation.hpp"
#include "disco/config.hpp"
#include "disco/csv.hpp"
#include "disco/error.hpp"
#include "disco/estimator.hpp"
#include "disco/inference.hpp"
#include "disco/output.hpp"

namespace disco {

namespace detail {

inline std::vector<double> parse_samples(const std::string& text) {
  std::vector<double> points;
  std::stringstream stream(text);
  std::string item;
  while (std::getline(stream, item, ',')) {
    const auto value = parse_real(item);
    if (!value) throw UsageError("cannot parse --samples entry '" + item + "'");
    points.push_back(*value);
  }
  if (points.size() < 2) throw UsageError("--samples needs at least two points");
  for (std::size_t i = 1; i < points.size(); ++i) {
    if (!(points[i] > points[i - 1])) {
      throw UsageError("--samples must be strictly increasing");
    }
  }
  return points;
}

}  // namespace detail

// Command-line entry point. Returns 0 on success, 2 on usage errors and 1 on
// runtime errors. No output file is written unless the run succeeds.
inline int cli_main(int argc, const char* const* argv, std::ostream& out = std::cout,
                    std::ostream& err = std::cerr) {
  CLI::App app{"Distributional synthetic controls"};
  app.set_version_flag("--version", std::string(kVersion));

  std::string input;
  PanelColumns columns;
  std::string name_col;
  DiscoConfig config;
  bool no_simplex = false;
  bool no_uniform = false;
  std::string agg = "quantileDiff";
  std::string samples;
  std::string out_dir = "disco_out";
  EmitOptions emit;
  std::optional<double> hline, vline;
  bool record_timing = false;
  std::size_t threads = 0;

  app.add_option("--input", input, "Long-format CSV panel")->required()->check(CLI::ExistingFile);
  app.add_option("--id-col", columns.id, "Unit id column")->capture_default_str();
  app.add_option("--time-col", columns.time, "Period column")->capture_default_str();
  app.add_option("--y-col", columns.y, "Outcome column")->capture_default_str();
  app.add_option("--name-col", name_col, "Optional unit name column");
  app.add_option("--target-id", config.target_id, "Id of the treated unit")->required();
  app.add_option("--t0", config.t0, "First treated period")->required();
  app.add_option("--m", config.m, "Integration grid size")->capture_default_str();
  app.add_option("--g", config.g, "Evaluation grid size")->capture_default_str();
  app.add_flag("--mixture", config.mixture, "Match CDFs (1-Wasserstein) instead of quantiles");
  app.add_flag("--no-simplex", no_simplex, "Allow negative weights summing to one");
  app.add_option("--qmin", config.qmin, "Lower quantile of the fitting range")->capture_default_str();
  app.add_option("--qmax", config.qmax, "Upper quantile of the fitting range")->capture_default_str();
  app.add_flag("--ci", config.inference.ci, "Bootstrap confidence bands");
  app.add_option("--boots", config.inference.boots, "Bootstrap replications")->capture_default_str();
  app.add_option("--cl", config.inference.cl, "Confidence level in (0,1)")->capture_default_str();
  app.add_flag("--no-uniform", no_uniform, "Pointwise instead of uniform bands");
  app.add_flag("--permutation", config.inference.permutation, "Placebo permutation test");
  app.add_option("--seed", config.seed, "Random seed")->capture_default_str();
  app.add_option("--agg", agg, "quantile, cdf, quantileDiff or cdfDiff")->capture_default_str();
  app.add_option("--samples", samples, "Comma-separated partition points");
  app.add_option("--out", out_dir, "Output directory")->capture_default_str();
  app.add_flag("--plots", emit.plots, "Write SVG panels");
  app.add_flag("--categorical", emit.categorical, "Bar panels for CDF plots");
  app.add_option("--hline", hline, "Horizontal reference line");
  app.add_option("--vline", vline, "Vertical reference line");
  app.add_option("--top", emit.top, "Number of top weights in weights.csv")->capture_default_str();
  app.add_option("--round", emit.round, "Rounding unit for weights.csv")->capture_default_str();
  app.add_option("--threads", threads, "Worker threads (0 = DISCO_THREADS or all cores)");
  app.add_flag("--record-timing", record_timing, "Add wall time to manifest.json");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      app.exit(e, out, err);
      return 0;
    }
    err << "error: " << e.what() << "\n" << "run with --help for usage\n";
    return 2;
  }

  std::vector<double> partition;
  try {
    config.simplex = !no_simplex;
    config.inference.uniform = !no_uniform;
    config.agg = parse_agg_kind(agg);
    config.threads = threads;
    if (!samples.empty()) config.samples = detail::parse_samples(samples);
    config.validate();
    if (!name_col.empty()) columns.name = name_col;
    emit.hline = hline;
    emit.vline = vline;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    const auto start = std::chrono::steady_clock::now();
    const PanelFile file = read_panel_csv(input, columns);
    const DiscoResult result = run_disco(file.panel, config);

    std::optional<PermutationResult> permutation;
    if (config.inference.permutation) permutation = permutation_test(file.panel, config);

    std::optional<BootstrapDraws> draws;
    std::optional<BootstrapBands> bands;
    if (config.inference.ci) {
      draws = bootstrap_gaps(file.panel, config, result);
      bands = bands_for(*draws, result, config.agg, config.inference.cl,
                        config.inference.uniform);
    }

    partition = config.samples.empty()
                    ? default_partition(config.agg, result.amin, result.amax)
                    : config.samples;
    const SummaryTable summary =
        aggregate(result, bands ? &*bands : nullptr, config.agg, partition);

    RunOutputs run;
    run.config = &config;
    run.result = &result;
    run.permutation = permutation ? &*permutation : nullptr;
    run.draws = draws ? &*draws : nullptr;
    run.bands = bands ? &*bands : nullptr;
    run.summary = &summary;
    run.names = &file.names;
    run.num_observations = file.rows;

    RunManifest manifest = RunManifest::digest(file.panel, file.rows);
    if (record_timing) {
      manifest.seconds = std::chrono::duration<double>(
                             std::chrono::steady_clock::now() - start)
                             .count();
    }
    const auto outputs = emit_results(run, std::move(manifest), emit, out_dir);

    out << "disco: " << result.control_ids.size() << " controls, "
        << result.pre_periods.size() << " pre-periods, "
        << result.post_periods.size() << " post-periods\n";
    if (permutation) out << "permutation p-value: " << permutation->p_value << "\n";
    if (draws && draws->dropped > 0) {
      out << "bootstrap: " << draws->dropped << " of " << draws->requested
          << " replicates dropped\n";
    }
    out << "wrote " << outputs.size() << " files to " << out_dir << "\n";
    return 0;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace disco
