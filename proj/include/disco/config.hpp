#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "disco/error.hpp"
#include "disco/panel.hpp"

namespace disco {

// Which function a summary or band describes.
enum class AggKind { kQuantile, kCdf, kQuantileDiff, kCdfDiff };

inline bool is_diff_kind(AggKind kind) {
  return kind == AggKind::kQuantileDiff || kind == AggKind::kCdfDiff;
}

inline bool is_quantile_kind(AggKind kind) {
  return kind == AggKind::kQuantile || kind == AggKind::kQuantileDiff;
}

inline std::string_view to_string(AggKind kind) {
  switch (kind) {
    case AggKind::kQuantile: return "quantile";
    case AggKind::kCdf: return "cdf";
    case AggKind::kQuantileDiff: return "quantileDiff";
    case AggKind::kCdfDiff: return "cdfDiff";
  }
  return "quantileDiff";
}

inline AggKind parse_agg_kind(std::string_view name) {
  if (name == "quantile") return AggKind::kQuantile;
  if (name == "cdf") return AggKind::kCdf;
  if (name == "quantileDiff") return AggKind::kQuantileDiff;
  if (name == "cdfDiff") return AggKind::kCdfDiff;
  throw UsageError("unknown aggregation kind '" + std::string(name) +
                   "' (expected quantile, cdf, quantileDiff or cdfDiff)");
}

struct InferenceConfig {
  bool ci = false;
  std::size_t boots = 300;
  double cl = 0.95;
  bool uniform = true;
  bool permutation = false;

  void validate() const {
    if (!(cl > 0.0 && cl < 1.0)) throw UsageError("cl must lie in (0, 1)");
    if (boots < 1) throw UsageError("boots must be at least 1");
  }
};

struct DiscoConfig {
  UnitId target_id = 0;
  Period t0 = 0;
  std::size_t m = 1000;
  std::size_t g = 100;
  bool mixture = false;
  bool simplex = true;
  double qmin = 0.0;
  double qmax = 1.0;
  std::uint64_t seed = 0;
  InferenceConfig inference;
  AggKind agg = AggKind::kQuantileDiff;
  // Partition points for summaries; empty selects the default quartile
  // partition of [0,1] or [amin, amax].
  std::vector<double> samples;
  // Worker threads for bootstrap and permutation; 0 picks DISCO_THREADS or
  // the hardware concurrency.
  std::size_t threads = 0;

  void validate() const {
    if (m < 2) throw UsageError("m must be at least 2");
    if (g < 2) throw UsageError("g must be at least 2");
    if (!(qmin >= 0.0 && qmin < qmax && qmax <= 1.0)) {
      throw UsageError("need 0 <= qmin < qmax <= 1");
    }
    if (mixture && !simplex) {
      throw UsageError("mixture weights must lie in the simplex; "
                       "--mixture cannot be combined with --no-simplex");
    }
    inference.validate();
  }
};

}  // namespace disco
