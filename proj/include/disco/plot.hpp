#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>
#include <string>
#include <vector>

namespace disco {

struct PlotSeries {
  std::string label;
  std::string color;
  std::vector<double> y;
  bool dashed = false;
};

struct PlotSpec {
  std::string title;
  std::string x_title;
  std::string y_title;
  std::vector<double> x;
  std::vector<PlotSeries> series;
  // Optional shaded band.
  std::vector<double> band_lower;
  std::vector<double> band_upper;
  std::string band_color = "#d0d0d0";
  bool bars = false;
  std::optional<double> hline;
  std::optional<double> vline;
};

namespace detail {

inline std::string svg_number(double v) {
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, "%.2f", v);
  return buffer;
}

inline std::string tick_label(double v) {
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, "%.4g", v);
  return buffer;
}

inline std::string escape_xml(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace detail

// Renders one static panel: lines (or bars) with an optional band and
// reference lines.
inline std::string render_svg(const PlotSpec& spec) {
  constexpr double kWidth = 640, kHeight = 420;
  constexpr double kLeft = 70, kRight = 20, kTop = 40, kBottom = 60;
  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;

  double x_lo = spec.x.empty() ? 0.0 : *std::min_element(spec.x.begin(), spec.x.end());
  double x_hi = spec.x.empty() ? 1.0 : *std::max_element(spec.x.begin(), spec.x.end());
  double y_lo = INFINITY, y_hi = -INFINITY;
  auto include = [&](double v) {
    if (std::isfinite(v)) {
      y_lo = std::min(y_lo, v);
      y_hi = std::max(y_hi, v);
    }
  };
  for (const auto& s : spec.series) for (double v : s.y) include(v);
  for (double v : spec.band_lower) include(v);
  for (double v : spec.band_upper) include(v);
  if (spec.hline) include(*spec.hline);
  if (spec.bars) include(0.0);
  if (!std::isfinite(y_lo)) y_lo = 0.0, y_hi = 1.0;
  if (y_hi - y_lo < 1e-12) y_lo -= 0.5, y_hi += 0.5;
  const double pad = 0.05 * (y_hi - y_lo);
  y_lo -= pad;
  y_hi += pad;
  double bar_half = 0.0;
  if (spec.bars && spec.x.size() > 1) {
    bar_half = 0.35 * (x_hi - x_lo) / static_cast<double>(spec.x.size() - 1);
    x_lo -= bar_half / 0.7;
    x_hi += bar_half / 0.7;
  }
  if (x_hi - x_lo < 1e-12) x_lo -= 0.5, x_hi += 0.5;

  auto px = [&](double x) { return kLeft + (x - x_lo) / (x_hi - x_lo) * plot_w; };
  auto py = [&](double y) { return kTop + (y_hi - y) / (y_hi - y_lo) * plot_h; };
  using detail::svg_number;

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"420\" "
         "viewBox=\"0 0 640 420\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg += "<rect width=\"640\" height=\"420\" fill=\"white\"/>\n";
  svg += "<text x=\"320\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" +
         detail::escape_xml(spec.title) + "</text>\n";

  for (int i = 0; i <= 4; ++i) {
    const double yv = y_lo + (y_hi - y_lo) * i / 4.0;
    const double xv = x_lo + (x_hi - x_lo) * i / 4.0;
    svg += "<line x1=\"" + svg_number(kLeft) + "\" x2=\"" + svg_number(kLeft + plot_w) +
           "\" y1=\"" + svg_number(py(yv)) + "\" y2=\"" + svg_number(py(yv)) +
           "\" stroke=\"#eeeeee\"/>\n";
    svg += "<text x=\"" + svg_number(kLeft - 6) + "\" y=\"" + svg_number(py(yv) + 4) +
           "\" text-anchor=\"end\">" + detail::tick_label(yv) + "</text>\n";
    svg += "<text x=\"" + svg_number(px(xv)) + "\" y=\"" +
           svg_number(kTop + plot_h + 18) + "\" text-anchor=\"middle\">" +
           detail::tick_label(xv) + "</text>\n";
  }
  svg += "<rect x=\"" + svg_number(kLeft) + "\" y=\"" + svg_number(kTop) +
         "\" width=\"" + svg_number(plot_w) + "\" height=\"" + svg_number(plot_h) +
         "\" fill=\"none\" stroke=\"#444444\"/>\n";

  if (!spec.band_lower.empty() && spec.band_lower.size() == spec.x.size()) {
    if (spec.bars) {
      for (std::size_t i = 0; i < spec.x.size(); ++i) {
        svg += "<line x1=\"" + svg_number(px(spec.x[i])) + "\" x2=\"" +
               svg_number(px(spec.x[i])) + "\" y1=\"" + svg_number(py(spec.band_lower[i])) +
               "\" y2=\"" + svg_number(py(spec.band_upper[i])) +
               "\" stroke=\"#555555\" stroke-width=\"2\"/>\n";
      }
    } else {
      std::string points;
      for (std::size_t i = 0; i < spec.x.size(); ++i) {
        points += svg_number(px(spec.x[i])) + "," + svg_number(py(spec.band_upper[i])) + " ";
      }
      for (std::size_t i = spec.x.size(); i-- > 0;) {
        points += svg_number(px(spec.x[i])) + "," + svg_number(py(spec.band_lower[i])) + " ";
      }
      svg += "<polygon points=\"" + points + "\" fill=\"" + spec.band_color +
             "\" fill-opacity=\"0.6\" stroke=\"none\"/>\n";
    }
  }

  for (std::size_t s = 0; s < spec.series.size(); ++s) {
    const auto& series = spec.series[s];
    if (spec.bars) {
      const double width = 2.0 * bar_half / static_cast<double>(spec.series.size());
      for (std::size_t i = 0; i < spec.x.size() && i < series.y.size(); ++i) {
        const double left = spec.x[i] - bar_half + width * static_cast<double>(s);
        const double top = std::max(series.y[i], 0.0);
        const double bottom = std::min(series.y[i], 0.0);
        svg += "<rect x=\"" + svg_number(px(left)) + "\" y=\"" + svg_number(py(top)) +
               "\" width=\"" + svg_number(px(left + width) - px(left)) + "\" height=\"" +
               svg_number(py(bottom) - py(top)) + "\" fill=\"" + series.color + "\"/>\n";
      }
    } else {
      std::string points;
      for (std::size_t i = 0; i < spec.x.size() && i < series.y.size(); ++i) {
        points += svg_number(px(spec.x[i])) + "," + svg_number(py(series.y[i])) + " ";
      }
      svg += "<polyline points=\"" + points + "\" fill=\"none\" stroke=\"" + series.color +
             "\" stroke-width=\"2\"" +
             (series.dashed ? " stroke-dasharray=\"6,4\"" : "") + "/>\n";
    }
    svg += "<text x=\"" + svg_number(kLeft + 10) + "\" y=\"" +
           svg_number(kTop + 16 + 16 * static_cast<double>(s)) + "\" fill=\"" +
           series.color + "\">" + detail::escape_xml(series.label) + "</text>\n";
  }

  if (spec.hline) {
    svg += "<line x1=\"" + svg_number(kLeft) + "\" x2=\"" + svg_number(kLeft + plot_w) +
           "\" y1=\"" + svg_number(py(*spec.hline)) + "\" y2=\"" +
           svg_number(py(*spec.hline)) +
           "\" stroke=\"grey\" stroke-dasharray=\"4,3\"/>\n";
  }
  if (spec.vline && *spec.vline >= x_lo && *spec.vline <= x_hi) {
    svg += "<line x1=\"" + svg_number(px(*spec.vline)) + "\" x2=\"" +
           svg_number(px(*spec.vline)) + "\" y1=\"" + svg_number(kTop) + "\" y2=\"" +
           svg_number(kTop + plot_h) + "\" stroke=\"grey\" stroke-dasharray=\"4,3\"/>\n";
  }

  svg += "<text x=\"" + svg_number(kLeft + plot_w / 2) + "\" y=\"" +
         svg_number(kHeight - 15) + "\" text-anchor=\"middle\">" +
         detail::escape_xml(spec.x_title) + "</text>\n";
  svg += "<text transform=\"translate(16," + svg_number(kTop + plot_h / 2) +
         ") rotate(-90)\" text-anchor=\"middle\">" + detail::escape_xml(spec.y_title) +
         "</text>\n";
  svg += "</svg>\n";
  return svg;
}

}  // namespace disco
