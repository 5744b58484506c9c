#pragma once

// Deterministic SVG line charts for the reporting pipeline. Fixed 800x500
// viewBox, no external assets, every coordinate printed with fixed
// precision — identical inputs produce identical bytes.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "driftval/ingest.hpp"
#include "driftval/numeric.hpp"

namespace driftval {

struct ChartSeries {
  std::string label;
  std::vector<std::pair<double, double>> points;  // (x, y)
};

struct ChartSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_x = false;
  std::vector<ChartSeries> series;
  // optional categorical x tick labels (index -> label); when set, x values
  // are category indices
  std::vector<std::string> x_categories;
};

namespace detail {

inline const std::vector<std::string>& chart_palette() {
  static const std::vector<std::string> palette = {
      "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
      "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
  return palette;
}

inline std::string xml_escape(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

inline std::string tick_label(double v) {
  // shortest round-trip keeps labels exact and deterministic
  return format_double(v);
}

}  // namespace detail

inline constexpr int kChartWidth = 800;
inline constexpr int kChartHeight = 500;

/// Renders a line chart. Throws when there is nothing to draw.
inline std::string render_line_chart(const ChartSpec& spec) {
  std::size_t total_points = 0;
  for (const auto& s : spec.series) total_points += s.points.size();
  if (spec.series.empty() || total_points == 0) {
    throw std::invalid_argument("chart: no series to draw");
  }

  const double ml = 70, mr = 170, mt = 46, mb = 56;
  const double plot_w = kChartWidth - ml - mr;
  const double plot_h = kChartHeight - mt - mb;

  auto tx = [&](double x) { return spec.log_x ? std::log10(x) : x; };

  double x_min = std::numeric_limits<double>::infinity(), x_max = -x_min;
  double y_min = x_min, y_max = -x_min;
  for (const auto& s : spec.series) {
    for (const auto& [x, y] : s.points) {
      if (std::isnan(x) || std::isnan(y)) continue;
      x_min = std::min(x_min, tx(x));
      x_max = std::max(x_max, tx(x));
      y_min = std::min(y_min, y);
      y_max = std::max(y_max, y);
    }
  }
  if (!std::isfinite(x_min) || !std::isfinite(y_min)) {
    throw std::invalid_argument("chart: no finite points to draw");
  }
  if (x_max - x_min < 1e-12) { x_min -= 0.5; x_max += 0.5; }
  if (y_max - y_min < 1e-12) { y_min -= 0.5; y_max += 0.5; }
  const double y_pad = 0.05 * (y_max - y_min);
  y_min -= y_pad;
  y_max += y_pad;

  auto px = [&](double x) { return ml + (tx(x) - x_min) / (x_max - x_min) * plot_w; };
  auto py = [&](double y) { return mt + (y_max - y) / (y_max - y_min) * plot_h; };

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 800 500\" "
         "font-family=\"sans-serif\">\n";
  svg += "<rect x=\"0\" y=\"0\" width=\"800\" height=\"500\" fill=\"#ffffff\"/>\n";
  svg += "<text x=\"400\" y=\"24\" font-size=\"16\" text-anchor=\"middle\">" +
         detail::xml_escape(spec.title) + "</text>\n";

  // axes
  svg += "<line x1=\"" + format_fixed(ml, 1) + "\" y1=\"" + format_fixed(mt, 1) +
         "\" x2=\"" + format_fixed(ml, 1) + "\" y2=\"" + format_fixed(mt + plot_h, 1) +
         "\" stroke=\"#333333\" stroke-width=\"1\"/>\n";
  svg += "<line x1=\"" + format_fixed(ml, 1) + "\" y1=\"" + format_fixed(mt + plot_h, 1) +
         "\" x2=\"" + format_fixed(ml + plot_w, 1) + "\" y2=\"" +
         format_fixed(mt + plot_h, 1) + "\" stroke=\"#333333\" stroke-width=\"1\"/>\n";

  // y ticks
  for (int i = 0; i <= 4; ++i) {
    const double v = y_min + (y_max - y_min) * i / 4.0;
    const double y = py(v);
    svg += "<line x1=\"" + format_fixed(ml - 4, 1) + "\" y1=\"" + format_fixed(y, 1) +
           "\" x2=\"" + format_fixed(ml, 1) + "\" y2=\"" + format_fixed(y, 1) +
           "\" stroke=\"#333333\" stroke-width=\"1\"/>\n";
    svg += "<text x=\"" + format_fixed(ml - 8, 1) + "\" y=\"" + format_fixed(y + 4, 1) +
           "\" font-size=\"11\" text-anchor=\"end\">" +
           detail::xml_escape(format_fixed(v, 3)) + "</text>\n";
  }

  // x ticks: categories when provided, otherwise 5 evenly spaced values
  if (!spec.x_categories.empty()) {
    for (std::size_t i = 0; i < spec.x_categories.size(); ++i) {
      const double x = px(static_cast<double>(i));
      svg += "<line x1=\"" + format_fixed(x, 1) + "\" y1=\"" +
             format_fixed(mt + plot_h, 1) + "\" x2=\"" + format_fixed(x, 1) +
             "\" y2=\"" + format_fixed(mt + plot_h + 4, 1) +
             "\" stroke=\"#333333\" stroke-width=\"1\"/>\n";
      svg += "<text x=\"" + format_fixed(x, 1) + "\" y=\"" +
             format_fixed(mt + plot_h + 18, 1) +
             "\" font-size=\"11\" text-anchor=\"middle\">" +
             detail::xml_escape(spec.x_categories[i]) + "</text>\n";
    }
  } else {
    for (int i = 0; i <= 4; ++i) {
      const double vt = x_min + (x_max - x_min) * i / 4.0;
      const double v = spec.log_x ? std::pow(10.0, vt) : vt;
      const double x = ml + (vt - x_min) / (x_max - x_min) * plot_w;
      svg += "<line x1=\"" + format_fixed(x, 1) + "\" y1=\"" +
             format_fixed(mt + plot_h, 1) + "\" x2=\"" + format_fixed(x, 1) +
             "\" y2=\"" + format_fixed(mt + plot_h + 4, 1) +
             "\" stroke=\"#333333\" stroke-width=\"1\"/>\n";
      svg += "<text x=\"" + format_fixed(x, 1) + "\" y=\"" +
             format_fixed(mt + plot_h + 18, 1) +
             "\" font-size=\"11\" text-anchor=\"middle\">" +
             detail::xml_escape(format_fixed(v, spec.log_x ? 0 : 2)) + "</text>\n";
    }
  }

  // axis labels
  svg += "<text x=\"" + format_fixed(ml + plot_w / 2, 1) + "\" y=\"" +
         format_fixed(kChartHeight - 14, 1) +
         "\" font-size=\"12\" text-anchor=\"middle\">" +
         detail::xml_escape(spec.x_label) + "</text>\n";
  svg += "<text x=\"18\" y=\"" + format_fixed(mt + plot_h / 2, 1) +
         "\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 18 " +
         format_fixed(mt + plot_h / 2, 1) + ")\">" +
         detail::xml_escape(spec.y_label) + "</text>\n";

  // series + legend
  const auto& palette = detail::chart_palette();
  for (std::size_t si = 0; si < spec.series.size(); ++si) {
    const auto& s = spec.series[si];
    const std::string& color = palette[si % palette.size()];
    std::string pts;
    for (const auto& [x, y] : s.points) {
      if (std::isnan(x) || std::isnan(y)) continue;
      if (!pts.empty()) pts += ' ';
      pts += format_fixed(px(x), 2) + ',' + format_fixed(py(y), 2);
    }
    if (!pts.empty()) {
      svg += "<polyline fill=\"none\" stroke=\"" + color +
             "\" stroke-width=\"1.5\" points=\"" + pts + "\"/>\n";
      for (const auto& [x, y] : s.points) {
        if (std::isnan(x) || std::isnan(y)) continue;
        svg += "<circle cx=\"" + format_fixed(px(x), 2) + "\" cy=\"" +
               format_fixed(py(y), 2) + "\" r=\"2.5\" fill=\"" + color + "\"/>\n";
      }
    }
    const double ly = mt + 16.0 * si;
    svg += "<rect x=\"" + format_fixed(kChartWidth - mr + 12, 1) + "\" y=\"" +
           format_fixed(ly - 8, 1) + "\" width=\"10\" height=\"10\" fill=\"" +
           color + "\"/>\n";
    svg += "<text x=\"" + format_fixed(kChartWidth - mr + 28, 1) + "\" y=\"" +
           format_fixed(ly + 1, 1) + "\" font-size=\"11\">" +
           detail::xml_escape(s.label) + "</text>\n";
  }
  svg += "</svg>\n";
  return svg;
}

namespace detail {

/// Picks, per (train, test) pair, the row with the largest train size —
/// the paper-style fixed-budget view used by the cross-period charts.
inline const ReportRow* largest_size_row(const PeriodReport& rep,
                                         const std::string& train_period) {
  const ReportRow* best = nullptr;
  for (const auto& row : rep.rows) {
    if (row.train_period != train_period) continue;
    if (!best || row.train_size > best->train_size) best = &row;
  }
  return best;
}

}  // namespace detail

struct ChartFile {
  std::string name;
  std::string svg;
};

/// Builds the four report charts:
///   fig4 — same-period loss vs training size (one series per period)
///   fig5 — cross loss vs test period (one series per training period)
///   fig6 — equivalent size vs test period
///   fig7 — effectiveness vs elapsed periods
inline std::vector<ChartFile> render_charts(const std::vector<PeriodReport>& reports,
                                            const std::vector<std::string>& periods) {
  if (reports.empty()) throw std::invalid_argument("charts: no reports");

  std::vector<ChartFile> files;

  // fig4: diagonal learning curves
  {
    ChartSpec spec;
    spec.title = "Same-period loss vs training size";
    spec.x_label = "training size (log scale)";
    spec.y_label = "loss (nats)";
    spec.log_x = true;
    for (const auto& rep : reports) {
      ChartSeries s;
      s.label = rep.test_period;
      for (const auto& row : rep.rows) {
        if (row.train_period == rep.test_period) {
          s.points.push_back({row.train_size, row.mean_loss});
        }
      }
      std::sort(s.points.begin(), s.points.end());
      if (!s.points.empty()) spec.series.push_back(std::move(s));
    }
    files.push_back({"fig4.svg", render_line_chart(spec)});
  }

  // fig5/fig6: cross loss and equivalent size across test periods
  auto cross_chart = [&](bool equivalent) {
    ChartSpec spec;
    spec.title = equivalent ? "Equivalent size across test periods"
                            : "Cross loss across test periods";
    spec.x_label = "test period";
    spec.y_label = equivalent ? "equivalent size" : "loss (nats)";
    spec.x_categories = periods;
    for (const auto& train : periods) {
      ChartSeries s;
      s.label = "trained " + train;
      for (std::size_t ti = 0; ti < periods.size(); ++ti) {
        for (const auto& rep : reports) {
          if (rep.test_period != periods[ti]) continue;
          const ReportRow* row = detail::largest_size_row(rep, train);
          if (row) {
            s.points.push_back({static_cast<double>(ti),
                                equivalent ? row->equiv_size : row->mean_loss});
          }
        }
      }
      if (!s.points.empty()) spec.series.push_back(std::move(s));
    }
    return render_line_chart(spec);
  };
  files.push_back({"fig5.svg", cross_chart(false)});
  files.push_back({"fig6.svg", cross_chart(true)});

  // fig7: effectiveness vs elapsed periods
  {
    ChartSpec spec;
    spec.title = "Effectiveness vs elapsed periods";
    spec.x_label = "elapsed periods since training";
    spec.y_label = "effectiveness";
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < periods.size(); ++i) index[periods[i]] = i;
    for (const auto& train : periods) {
      ChartSeries s;
      s.label = "trained " + train;
      for (const auto& rep : reports) {
        const std::size_t ti = index.at(rep.test_period);
        const std::size_t si = index.at(train);
        if (ti < si) continue;  // forward elapsed time only
        const ReportRow* row = detail::largest_size_row(rep, train);
        if (row) {
          s.points.push_back({static_cast<double>(ti - si), row->effectiveness});
        }
      }
      std::sort(s.points.begin(), s.points.end());
      if (!s.points.empty()) spec.series.push_back(std::move(s));
    }
    files.push_back({"fig7.svg", render_line_chart(spec)});
  }

  return files;
}

}  // namespace driftval
