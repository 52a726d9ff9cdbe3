#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "disco/error.hpp"

namespace disco {

using UnitId = std::int64_t;
using Period = std::int64_t;

struct Observation {
  UnitId unit = 0;
  Period period = 0;
  double value = 0.0;
};

// Long-format micro data grouped into (unit, period) cells. Cells may hold
// different numbers of observations (repeated cross-sections). Each cell's
// values are kept sorted ascending.
class MicroPanel {
 public:
  using CellKey = std::pair<UnitId, Period>;

  MicroPanel() = default;

  const std::vector<UnitId>& unit_ids() const noexcept { return unit_ids_; }
  const std::vector<Period>& periods() const noexcept { return periods_; }
  std::size_t num_observations() const noexcept { return num_observations_; }

  bool has_cell(UnitId unit, Period period) const {
    return cells_.count({unit, period}) != 0;
  }

  bool has_unit(UnitId unit) const {
    return std::binary_search(unit_ids_.begin(), unit_ids_.end(), unit);
  }

  // Sorted outcome values of one cell. Throws InputError when absent.
  const std::vector<double>& cell(UnitId unit, Period period) const {
    auto it = cells_.find({unit, period});
    if (it == cells_.end()) {
      throw InputError("no observations for unit " + std::to_string(unit) +
                       " in period " + std::to_string(period));
    }
    return it->second;
  }

  std::size_t cell_count(UnitId unit, Period period) const {
    auto it = cells_.find({unit, period});
    return it == cells_.end() ? 0 : it->second.size();
  }

  const std::map<CellKey, std::vector<double>>& cells() const noexcept {
    return cells_;
  }

  // Smallest and largest outcome over all units and periods.
  std::pair<double, double> support() const noexcept { return {min_, max_}; }

  // Builds a panel from already-grouped cells. Values need not be sorted.
  static MicroPanel from_cells(std::map<CellKey, std::vector<double>> cells) {
    MicroPanel panel;
    for (auto& [key, values] : cells) {
      if (values.empty()) continue;
      std::sort(values.begin(), values.end());
      panel.add_cell_keys(key, values);
    }
    for (auto& [key, values] : cells) {
      if (!values.empty()) panel.cells_.emplace(key, std::move(values));
    }
    if (panel.cells_.empty()) throw InputError("empty input");
    panel.finalize();
    return panel;
  }

 private:
  void add_cell_keys(const CellKey& key, const std::vector<double>& sorted) {
    unit_ids_.push_back(key.first);
    periods_.push_back(key.second);
    num_observations_ += sorted.size();
    min_ = std::min(min_, sorted.front());
    max_ = std::max(max_, sorted.back());
  }

  void finalize() {
    std::sort(unit_ids_.begin(), unit_ids_.end());
    unit_ids_.erase(std::unique(unit_ids_.begin(), unit_ids_.end()),
                    unit_ids_.end());
    std::sort(periods_.begin(), periods_.end());
    periods_.erase(std::unique(periods_.begin(), periods_.end()),
                   periods_.end());
  }

  std::map<CellKey, std::vector<double>> cells_;
  std::vector<UnitId> unit_ids_;
  std::vector<Period> periods_;
  std::size_t num_observations_ = 0;
  double min_ = INFINITY;
  double max_ = -INFINITY;
};

// Validates raw records and groups them into a panel. Row numbers in error
// messages are 1-based positions in `records`.
inline MicroPanel build_panel(std::span<const Observation> records) {
  if (records.empty()) throw InputError("empty input");
  std::map<MicroPanel::CellKey, std::vector<double>> cells;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    if (!std::isfinite(r.value)) {
      throw InputError("non-finite outcome value in row " +
                       std::to_string(i + 1));
    }
    cells[{r.unit, r.period}].push_back(r.value);
  }
  return MicroPanel::from_cells(std::move(cells));
}

}  // namespace disco
