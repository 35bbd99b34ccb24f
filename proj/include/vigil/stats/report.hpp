#pragma once

// Report emission: delimited tables (CSV, UTF-8, LF), vector plots (SVG), and
// one structured summary document (JSON) per run. Everything is rendered to
// memory first and written only after the output directory checks out, so an
// unusable directory fails before any partial output exists. Re-emitting the
// same report produces byte-identical files.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <unistd.h>

#include <nlohmann/json.hpp>

#include "vigil/errors.hpp"
#include "vigil/util/csv.hpp"
#include "vigil/util/format.hpp"
#include "vigil/util/io.hpp"

namespace vigil {

struct Table {
  std::string name;  // file stem
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

struct BarSeries {
  std::string label;
  std::vector<double> values;  // one per group
};

struct BarChart {
  std::string name;  // file stem
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<std::string> groups;
  std::vector<BarSeries> series;
};

struct ScatterSeries {
  std::string label;
  std::vector<std::pair<double, double>> points;
};

struct ScatterPlot {
  std::string name;  // file stem
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<ScatterSeries> series;
  bool identity_line = false;
};

struct Report {
  std::vector<Table> tables;
  std::vector<BarChart> bar_charts;
  std::vector<ScatterPlot> scatter_plots;
  nlohmann::json summary;  // keyed by condition
};

namespace detail {

inline std::string safe_stem(const std::string& name) {
  if (name.empty()) throw InputError("[stats-report] artifact name must be non-empty");
  std::string out;
  for (char c : name)
    out.push_back((std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_')
                      ? c
                      : '_');
  return out;
}

inline std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

inline const std::vector<std::string>& palette() {
  static const std::vector<std::string> kColors = {"#4c72b0", "#dd8452", "#55a868",
                                                   "#c44e52", "#8172b3", "#937860"};
  return kColors;
}

// Round an axis range outward to a tick step of the form 10^k * {1, 2, 5}.
struct AxisTicks {
  double lo = 0.0;
  double hi = 1.0;
  double step = 0.25;
};

inline AxisTicks nice_axis(double lo, double hi) {
  if (lo > hi) std::swap(lo, hi);
  if (lo == hi) {
    lo -= 0.5;
    hi += 0.5;
  }
  const double span = hi - lo;
  double step = std::pow(10.0, std::floor(std::log10(span / 5.0)));
  for (double mult : {1.0, 2.0, 5.0, 10.0}) {
    if (span / (step * mult) <= 6.0) {
      step *= mult;
      break;
    }
  }
  AxisTicks t;
  t.step = step;
  t.lo = std::floor(lo / step) * step;
  t.hi = std::ceil(hi / step) * step;
  return t;
}

inline std::string svg_header(int w, int h, const std::string& title) {
  std::string s = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(w) +
       "\" height=\"" + std::to_string(h) + "\" viewBox=\"0 0 " + std::to_string(w) + " " +
       std::to_string(h) + "\" font-family=\"Helvetica, Arial, sans-serif\">\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s += "<text x=\"" + std::to_string(w / 2) +
       "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" + xml_escape(title) +
       "</text>\n";
  return s;
}

struct PlotFrame {
  int width = 640;
  int height = 420;
  int left = 70;
  int right = 24;
  int top = 40;
  int bottom = 56;
  double plot_w() const { return width - left - right; }
  double plot_h() const { return height - top - bottom; }
};

inline std::string axis_labels(const PlotFrame& f, const std::string& x_label,
                               const std::string& y_label) {
  std::string s;
  s += "<text x=\"" + std::to_string(f.left + static_cast<int>(f.plot_w() / 2)) + "\" y=\"" +
       std::to_string(f.height - 10) + "\" text-anchor=\"middle\" font-size=\"12\">" +
       xml_escape(x_label) + "</text>\n";
  s += "<text x=\"16\" y=\"" + std::to_string(f.top + static_cast<int>(f.plot_h() / 2)) +
       "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 16 " +
       std::to_string(f.top + static_cast<int>(f.plot_h() / 2)) + ")\">" +
       xml_escape(y_label) + "</text>\n";
  return s;
}

inline std::string y_axis(const PlotFrame& f, const AxisTicks& ax) {
  std::string s;
  const double x0 = f.left;
  const double y0 = f.top + f.plot_h();
  s += "<line x1=\"" + fmt_fixed(x0, 2) + "\" y1=\"" + fmt_fixed(f.top, 2) + "\" x2=\"" +
       fmt_fixed(x0, 2) + "\" y2=\"" + fmt_fixed(y0, 2) + "\" stroke=\"black\"/>\n";
  const int n_ticks = static_cast<int>(std::round((ax.hi - ax.lo) / ax.step));
  for (int i = 0; i <= n_ticks; ++i) {
    const double v = ax.lo + i * ax.step;
    const double frac = (v - ax.lo) / (ax.hi - ax.lo);
    const double y = y0 - frac * f.plot_h();
    s += "<line x1=\"" + fmt_fixed(x0 - 4, 2) + "\" y1=\"" + fmt_fixed(y, 2) + "\" x2=\"" +
         fmt_fixed(x0, 2) + "\" y2=\"" + fmt_fixed(y, 2) + "\" stroke=\"black\"/>\n";
    s += "<text x=\"" + fmt_fixed(x0 - 8, 2) + "\" y=\"" + fmt_fixed(y + 4, 2) +
         "\" text-anchor=\"end\" font-size=\"11\">" + fmt_double(v, 6) + "</text>\n";
  }
  return s;
}

inline std::string render_bar_chart(const BarChart& chart) {
  if (chart.series.empty() || chart.groups.empty())
    throw InputError("[stats-report] bar chart needs at least one group and one series");
  for (const auto& s : chart.series)
    if (s.values.size() != chart.groups.size())
      throw InputError("[stats-report] bar series '" + s.label +
                       "' does not cover every group");
  PlotFrame f;
  double lo = 0.0, hi = 0.0;
  for (const auto& s : chart.series)
    for (double v : s.values) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  const AxisTicks ax = nice_axis(lo, hi);
  std::string svg = svg_header(f.width, f.height, chart.title);
  svg += y_axis(f, ax);
  svg += axis_labels(f, chart.x_label, chart.y_label);
  const double y0 = f.top + f.plot_h();
  const double baseline = y0 - (0.0 - ax.lo) / (ax.hi - ax.lo) * f.plot_h();
  svg += "<line x1=\"" + fmt_fixed(f.left, 2) + "\" y1=\"" + fmt_fixed(baseline, 2) +
         "\" x2=\"" + fmt_fixed(f.left + f.plot_w(), 2) + "\" y2=\"" +
         fmt_fixed(baseline, 2) + "\" stroke=\"black\"/>\n";

  const std::size_t n_groups = chart.groups.size();
  const std::size_t n_series = chart.series.size();
  const double group_w = f.plot_w() / static_cast<double>(n_groups);
  const double bar_w = group_w * 0.8 / static_cast<double>(n_series);
  for (std::size_t g = 0; g < n_groups; ++g) {
    const double gx = f.left + g * group_w + group_w * 0.1;
    for (std::size_t s = 0; s < n_series; ++s) {
      const double v = chart.series[s].values[g];
      const double vy = y0 - (v - ax.lo) / (ax.hi - ax.lo) * f.plot_h();
      const double top = std::min(vy, baseline);
      const double h = std::fabs(vy - baseline);
      svg += "<rect class=\"bar\" x=\"" + fmt_fixed(gx + s * bar_w, 2) + "\" y=\"" +
             fmt_fixed(top, 2) + "\" width=\"" + fmt_fixed(bar_w, 2) + "\" height=\"" +
             fmt_fixed(h, 2) + "\" fill=\"" + palette()[s % palette().size()] + "\"/>\n";
    }
    svg += "<text x=\"" + fmt_fixed(f.left + g * group_w + group_w / 2, 2) + "\" y=\"" +
           fmt_fixed(y0 + 16, 2) + "\" text-anchor=\"middle\" font-size=\"11\">" +
           xml_escape(chart.groups[g]) + "</text>\n";
  }
  if (n_series > 1) {
    for (std::size_t s = 0; s < n_series; ++s) {
      const double ly = f.top + 4 + s * 16;
      svg += "<rect x=\"" + fmt_fixed(f.left + f.plot_w() - 120, 2) + "\" y=\"" +
             fmt_fixed(ly, 2) + "\" width=\"10\" height=\"10\" fill=\"" +
             palette()[s % palette().size()] + "\"/>\n";
      svg += "<text x=\"" + fmt_fixed(f.left + f.plot_w() - 106, 2) + "\" y=\"" +
             fmt_fixed(ly + 9, 2) + "\" font-size=\"11\">" + xml_escape(chart.series[s].label) +
             "</text>\n";
    }
  }
  svg += "</svg>\n";
  return svg;
}

inline std::string render_scatter(const ScatterPlot& plot) {
  if (plot.series.empty())
    throw InputError("[stats-report] scatter plot needs at least one series");
  PlotFrame f;
  double xlo = std::numeric_limits<double>::infinity(), xhi = -xlo;
  double ylo = xlo, yhi = -xlo;
  std::size_t n_pts = 0;
  for (const auto& s : plot.series)
    for (const auto& [x, y] : s.points) {
      xlo = std::min(xlo, x);
      xhi = std::max(xhi, x);
      ylo = std::min(ylo, y);
      yhi = std::max(yhi, y);
      ++n_pts;
    }
  if (n_pts == 0) throw InputError("[stats-report] scatter plot has no points");
  const AxisTicks axx = nice_axis(xlo, xhi);
  const AxisTicks axy = nice_axis(ylo, yhi);
  const double y0 = f.top + f.plot_h();
  auto px = [&](double x) {
    return f.left + (x - axx.lo) / (axx.hi - axx.lo) * f.plot_w();
  };
  auto py = [&](double y) {
    return y0 - (y - axy.lo) / (axy.hi - axy.lo) * f.plot_h();
  };

  std::string svg = svg_header(f.width, f.height, plot.title);
  svg += y_axis(f, axy);
  svg += "<line x1=\"" + fmt_fixed(f.left, 2) + "\" y1=\"" + fmt_fixed(y0, 2) + "\" x2=\"" +
         fmt_fixed(f.left + f.plot_w(), 2) + "\" y2=\"" + fmt_fixed(y0, 2) +
         "\" stroke=\"black\"/>\n";
  const int nx = static_cast<int>(std::round((axx.hi - axx.lo) / axx.step));
  for (int i = 0; i <= nx; ++i) {
    const double v = axx.lo + i * axx.step;
    svg += "<line x1=\"" + fmt_fixed(px(v), 2) + "\" y1=\"" + fmt_fixed(y0, 2) + "\" x2=\"" +
           fmt_fixed(px(v), 2) + "\" y2=\"" + fmt_fixed(y0 + 4, 2) + "\" stroke=\"black\"/>\n";
    svg += "<text x=\"" + fmt_fixed(px(v), 2) + "\" y=\"" + fmt_fixed(y0 + 16, 2) +
           "\" text-anchor=\"middle\" font-size=\"11\">" + fmt_double(v, 6) + "</text>\n";
  }
  svg += axis_labels(f, plot.x_label, plot.y_label);
  if (plot.identity_line) {
    const double lo = std::max(axx.lo, axy.lo);
    const double hi = std::min(axx.hi, axy.hi);
    if (lo < hi)
      svg += "<line x1=\"" + fmt_fixed(px(lo), 2) + "\" y1=\"" + fmt_fixed(py(lo), 2) +
             "\" x2=\"" + fmt_fixed(px(hi), 2) + "\" y2=\"" + fmt_fixed(py(hi), 2) +
             "\" stroke=\"#999999\" stroke-dasharray=\"4 3\"/>\n";
  }
  for (std::size_t s = 0; s < plot.series.size(); ++s) {
    for (const auto& [x, y] : plot.series[s].points)
      svg += "<circle class=\"pt\" cx=\"" + fmt_fixed(px(x), 2) + "\" cy=\"" +
             fmt_fixed(py(y), 2) + "\" r=\"3.5\" fill=\"" + palette()[s % palette().size()] +
             "\" fill-opacity=\"0.8\"/>\n";
    if (plot.series.size() > 1) {
      const double ly = f.top + 4 + s * 16;
      svg += "<circle cx=\"" + fmt_fixed(f.left + f.plot_w() - 114, 2) + "\" cy=\"" +
             fmt_fixed(ly + 5, 2) + "\" r=\"4\" fill=\"" + palette()[s % palette().size()] +
             "\"/>\n";
      svg += "<text x=\"" + fmt_fixed(f.left + f.plot_w() - 104, 2) + "\" y=\"" +
             fmt_fixed(ly + 9, 2) + "\" font-size=\"11\">" + xml_escape(plot.series[s].label) +
             "</text>\n";
    }
  }
  svg += "</svg>\n";
  return svg;
}

inline std::string render_table_csv(const Table& t) {
  if (t.header.empty()) throw InputError("[stats-report] table '" + t.name + "' has no header");
  std::string out = csv_row(t.header);
  for (const auto& row : t.rows) {
    if (row.size() != t.header.size())
      throw InputError("[stats-report] table '" + t.name + "' row width mismatch");
    out += csv_row(row);
  }
  return out;
}

}  // namespace detail

// Renders every artifact in memory, validates the output directory, then
// writes: summary.json, one CSV per table, one SVG per plot. Returns the
// written paths in emission order.
inline std::vector<std::filesystem::path> emit_report(const Report& report,
                                                      const std::filesystem::path& out_dir) {
  std::vector<std::pair<std::string, std::string>> files;  // (name, content)
  files.emplace_back("summary.json", report.summary.dump(2) + "\n");
  for (const auto& t : report.tables)
    files.emplace_back(detail::safe_stem(t.name) + ".csv", detail::render_table_csv(t));
  for (const auto& c : report.bar_charts)
    files.emplace_back(detail::safe_stem(c.name) + ".svg", detail::render_bar_chart(c));
  for (const auto& p : report.scatter_plots)
    files.emplace_back(detail::safe_stem(p.name) + ".svg", detail::render_scatter(p));

  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec)
    throw IoError("[stats-report] cannot create output directory '" + out_dir.string() +
                  "': " + ec.message());
  if (::access(out_dir.c_str(), W_OK | X_OK) != 0)
    throw IoError("[stats-report] output directory '" + out_dir.string() + "' is not writable");

  std::vector<std::filesystem::path> written;
  for (const auto& [name, content] : files) {
    const std::filesystem::path p = out_dir / name;
    write_file_atomic(p, content);
    written.push_back(p);
  }
  return written;
}

}  // namespace vigil
