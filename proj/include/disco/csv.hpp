#pragma once

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "disco/error.hpp"
#include "disco/panel.hpp"

namespace disco {

// Splits one CSV record. Fields may be double-quoted; "" inside quotes is a
// literal quote.
inline std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else {
      field += c;
    }
  }
  fields.push_back(std::move(field));
  return fields;
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

inline std::optional<double> parse_real(std::string_view text) {
  text = trim(text);
  if (text.empty()) return std::nullopt;
  if (text.front() == '+') text.remove_prefix(1);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(value)) {
    return std::nullopt;
  }
  return value;
}

// Integers, also accepting integral decimals such as "3.0".
inline std::optional<std::int64_t> parse_integer(std::string_view text) {
  text = trim(text);
  std::int64_t value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec == std::errc() && ptr == text.data() + text.size()) return value;
  const auto real = parse_real(text);
  if (real && std::floor(*real) == *real && std::abs(*real) < 9e15) {
    return static_cast<std::int64_t>(*real);
  }
  return std::nullopt;
}

}  // namespace detail

struct PanelColumns {
  std::string id = "id_col";
  std::string time = "time_col";
  std::string y = "y_col";
  std::optional<std::string> name;
};

struct PanelFile {
  MicroPanel panel;
  // Display names from the optional name column (first name seen per unit).
  std::map<UnitId, std::string> names;
  std::size_t rows = 0;
};

inline PanelFile parse_panel_csv(std::istream& in, const PanelColumns& columns) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (!detail::trim(line).empty()) {
      header = split_csv_line(line);
      break;
    }
  }
  if (header.empty()) throw InputError("empty input");

  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < header.size(); ++i) {
    const std::string name(detail::trim(header[i]));
    if (!index.emplace(name, i).second) {
      throw InputError("duplicate header column '" + name + "'");
    }
  }
  auto column = [&](const std::string& name) {
    auto it = index.find(name);
    if (it == index.end()) throw InputError("missing column '" + name + "'");
    return it->second;
  };
  const std::size_t id_at = column(columns.id);
  const std::size_t time_at = column(columns.time);
  const std::size_t y_at = column(columns.y);
  const std::optional<std::size_t> name_at =
      columns.name ? std::optional<std::size_t>(column(*columns.name)) : std::nullopt;

  PanelFile file;
  std::map<MicroPanel::CellKey, std::vector<double>> cells;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != header.size()) {
      throw InputError("line " + std::to_string(line_no) + ": expected " +
                       std::to_string(header.size()) + " fields, found " +
                       std::to_string(fields.size()));
    }
    const auto id = detail::parse_integer(fields[id_at]);
    const auto period = detail::parse_integer(fields[time_at]);
    const auto value = detail::parse_real(fields[y_at]);
    if (!id || !period || !value) {
      const char* which = !id ? "unit id" : (!period ? "period" : "outcome");
      throw InputError("line " + std::to_string(line_no) + ": cannot parse " + which);
    }
    cells[{*id, *period}].push_back(*value);
    if (name_at) {
      file.names.emplace(*id, std::string(detail::trim(fields[*name_at])));
    }
    ++file.rows;
  }
  if (file.rows == 0) throw InputError("empty input");
  file.panel = MicroPanel::from_cells(std::move(cells));
  return file;
}

inline PanelFile read_panel_csv(const std::filesystem::path& path,
                                const PanelColumns& columns) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path.string() + "'");
  return parse_panel_csv(in, columns);
}

}  // namespace disco
