#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "memprobe/report.hpp"

namespace memprobe {
namespace {

constexpr double kWidth = 760;
constexpr double kHeight = 440;
constexpr double kLeft = 72;
constexpr double kRight = 72;
constexpr double kTop = 56;
constexpr double kBottom = 84;

constexpr const char* kPalette[] = {"#d62728", "#1f77b4", "#2ca02c", "#ff7f0e", "#9467bd",
                                    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

const char* color(std::size_t i) { return kPalette[i % std::size(kPalette)]; }

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick_label(double v) {
  char buf[32];
  if (std::abs(v - std::round(v)) < 1e-9) {
    std::snprintf(buf, sizeof buf, "%.0f", v);
  } else {
    std::snprintf(buf, sizeof buf, "%.2f", v);
  }
  return buf;
}

std::string escape(std::string_view s) {
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

// Upper axis bound rounded to 1, 2, 2.5 or 5 times a power of ten.
double nice_ceiling(double v) {
  if (v <= 0) return 1.0;
  const double mag = std::pow(10.0, std::floor(std::log10(v)));
  for (double m : {1.0, 2.0, 2.5, 5.0, 10.0}) {
    if (m * mag >= v - 1e-12) return m * mag;
  }
  return 10.0 * mag;
}

struct Plot {
  double x0 = kLeft, x1 = kWidth - kRight, y0 = kHeight - kBottom, y1 = kTop;
  double width() const { return x1 - x0; }
  double height() const { return y0 - y1; }
};

void text(std::string& svg, double x, double y, std::string_view s, std::string_view anchor = "middle",
          std::string_view extra = {}) {
  svg += "<text x=\"" + num(x) + "\" y=\"" + num(y) + "\" text-anchor=\"" + std::string(anchor) + "\"";
  if (!extra.empty()) svg += " " + std::string(extra);
  svg += ">" + escape(s) + "</text>\n";
}

void line(std::string& svg, double xa, double ya, double xb, double yb, std::string_view stroke = "#333") {
  svg += "<line x1=\"" + num(xa) + "\" y1=\"" + num(ya) + "\" x2=\"" + num(xb) + "\" y2=\"" + num(yb) +
         "\" stroke=\"" + std::string(stroke) + "\" stroke-width=\"1\"/>\n";
}

void y_axis(std::string& svg, const Plot& p, double top, bool right, std::string_view label) {
  const double x = right ? p.x1 : p.x0;
  line(svg, x, p.y0, x, p.y1);
  for (int i = 0; i <= 5; ++i) {
    const double v = top * i / 5.0;
    const double y = p.y0 - p.height() * i / 5.0;
    line(svg, x, y, x + (right ? 4 : -4), y);
    text(svg, x + (right ? 8 : -8), y + 4, tick_label(v), right ? "start" : "end");
  }
  const double lx = right ? kWidth - 16 : 18;
  const double ly = (p.y0 + p.y1) / 2;
  text(svg, lx, ly, label, "middle", "transform=\"rotate(-90 " + num(lx) + " " + num(ly) + ")\"");
}

void x_axis(std::string& svg, const Plot& p, const std::vector<std::string>& cats, std::string_view label) {
  line(svg, p.x0, p.y0, p.x1, p.y0);
  const double step = p.width() / static_cast<double>(cats.size());
  for (std::size_t i = 0; i < cats.size(); ++i) {
    text(svg, p.x0 + step * (static_cast<double>(i) + 0.5), p.y0 + 18, cats[i]);
  }
  text(svg, (p.x0 + p.x1) / 2, p.y0 + 42, label);
}

void legend(std::string& svg, const std::vector<Series>& series) {
  double x = kLeft;
  const double y = kHeight - 16;
  for (std::size_t i = 0; i < series.size(); ++i) {
    svg += "<circle cx=\"" + num(x + 5) + "\" cy=\"" + num(y - 4) + "\" r=\"5\" fill=\"" + color(i) + "\"/>\n";
    text(svg, x + 14, y, series[i].label, "start");
    x += 24 + 7.0 * static_cast<double>(series[i].label.size());
  }
}

double series_max(const std::vector<Series>& series, bool secondary) {
  double m = 0;
  for (const auto& s : series) {
    if (s.secondary_axis != secondary) continue;
    for (double v : s.values) m = std::max(m, v);
  }
  return m;
}

void render_bars(std::string& svg, const ChartSpec& c, const Plot& p) {
  const double top = nice_ceiling(series_max(c.series, false));
  y_axis(svg, p, top, false, c.y_label);
  const double step = p.width() / static_cast<double>(c.categories.size());
  const double group_w = step * 0.7;
  const double bar_w = group_w / static_cast<double>(c.series.size());
  for (std::size_t s = 0; s < c.series.size(); ++s) {
    for (std::size_t i = 0; i < c.categories.size(); ++i) {
      const double v = c.series[s].values[i];
      const double h = p.height() * v / top;
      const double x = p.x0 + step * static_cast<double>(i) + (step - group_w) / 2 + bar_w * static_cast<double>(s);
      svg += "<rect x=\"" + num(x) + "\" y=\"" + num(p.y0 - h) + "\" width=\"" + num(bar_w) + "\" height=\"" +
             num(h) + "\" fill=\"" + color(s) + "\"><title>" + escape(c.series[s].label) + " " +
             escape(c.categories[i]) + ": " + escape(format_3dp(v)) + "</title></rect>\n";
    }
  }
  x_axis(svg, p, c.categories, c.x_label);
  legend(svg, c.series);
}

void render_lines(std::string& svg, const ChartSpec& c, const Plot& p) {
  const double top1 = nice_ceiling(series_max(c.series, false));
  const bool has_secondary =
      std::any_of(c.series.begin(), c.series.end(), [](const Series& s) { return s.secondary_axis; });
  const double top2 = has_secondary ? nice_ceiling(series_max(c.series, true)) : 1.0;
  y_axis(svg, p, top1, false, c.y_label);
  if (has_secondary) y_axis(svg, p, top2, true, c.y2_label);
  const double step = p.width() / static_cast<double>(c.categories.size());
  for (std::size_t s = 0; s < c.series.size(); ++s) {
    const double top = c.series[s].secondary_axis ? top2 : top1;
    std::string d;
    std::string dots;
    for (std::size_t i = 0; i < c.categories.size(); ++i) {
      const double x = p.x0 + step * (static_cast<double>(i) + 0.5);
      const double y = p.y0 - p.height() * c.series[s].values[i] / top;
      d += (i ? " L " : "M ") + num(x) + " " + num(y);
      dots += "<circle cx=\"" + num(x) + "\" cy=\"" + num(y) + "\" r=\"3\" fill=\"" + color(s) + "\"/>\n";
    }
    svg += "<path d=\"" + d + "\" fill=\"none\" stroke=\"" + color(s) + "\" stroke-width=\"2\"/>\n" + dots;
  }
  x_axis(svg, p, c.categories, c.x_label);
  legend(svg, c.series);
}

std::string heat_color(double t) {
  t = std::clamp(t, 0.0, 1.0);
  const int r = static_cast<int>(std::lround(49 + t * (215 - 49)));
  const int g = static_cast<int>(std::lround(54 + t * (48 - 54)));
  const int b = static_cast<int>(std::lround(149 + t * (39 - 149)));
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", r, g, b);
  return buf;
}

void render_heatmap(std::string& svg, const ChartSpec& c, const Plot& p) {
  double lo = INFINITY, hi = -INFINITY;
  for (const auto& s : c.series) {
    for (double v : s.values) lo = std::min(lo, v), hi = std::max(hi, v);
  }
  const double span = hi > lo ? hi - lo : 1.0;
  const double cw = p.width() / static_cast<double>(c.categories.size());
  const double ch = p.height() / static_cast<double>(c.series.size());
  for (std::size_t r = 0; r < c.series.size(); ++r) {
    const double y = p.y1 + ch * static_cast<double>(r);
    text(svg, p.x0 - 8, y + ch / 2 + 4, c.series[r].label, "end");
    for (std::size_t i = 0; i < c.categories.size(); ++i) {
      const double v = c.series[r].values[i];
      const double x = p.x0 + cw * static_cast<double>(i);
      svg += "<rect x=\"" + num(x) + "\" y=\"" + num(y) + "\" width=\"" + num(cw) + "\" height=\"" + num(ch) +
             "\" fill=\"" + heat_color((v - lo) / span) + "\" stroke=\"#fff\"/>\n";
      text(svg, x + cw / 2, y + ch / 2 + 4, format_3dp(v), "middle", "fill=\"#fff\"");
    }
  }
  const double step = cw;
  for (std::size_t i = 0; i < c.categories.size(); ++i) {
    text(svg, p.x0 + step * (static_cast<double>(i) + 0.5), p.y0 + 18, c.categories[i]);
  }
  text(svg, (p.x0 + p.x1) / 2, p.y0 + 42, c.x_label);
  const double lx = 18, ly = (p.y0 + p.y1) / 2;
  text(svg, lx, ly, c.y_label, "middle", "transform=\"rotate(-90 " + num(lx) + " " + num(ly) + ")\"");
}

void validate_chart(const ChartSpec& c) {
  if (c.series.empty()) throw Error("chart '" + c.title + "': no series");
  if (c.categories.empty()) throw Error("chart '" + c.title + "': no categories");
  for (const auto& s : c.series) {
    if (s.values.size() != c.categories.size()) {
      throw Error("chart '" + c.title + "': series '" + s.label + "' has " + std::to_string(s.values.size()) +
                  " values for " + std::to_string(c.categories.size()) + " categories");
    }
    for (double v : s.values) {
      if (!std::isfinite(v)) throw Error("chart '" + c.title + "': non-finite value in series '" + s.label + "'");
    }
  }
}

}  // namespace

std::string render_svg(const ChartSpec& chart) {
  validate_chart(chart);
  std::string svg =
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kWidth) + "\" height=\"" + num(kHeight) +
      "\" viewBox=\"0 0 " + num(kWidth) + " " + num(kHeight) +
      "\" font-family=\"sans-serif\" font-size=\"12\" style=\"background:#ffffff\">\n";
  text(svg, kWidth / 2, 28, chart.title, "middle", "font-size=\"16\" font-weight=\"bold\"");
  Plot p;
  switch (chart.kind) {
    case ChartKind::bar:
    case ChartKind::grouped_bar: render_bars(svg, chart, p); break;
    case ChartKind::line: render_lines(svg, chart, p); break;
    case ChartKind::heatmap: render_heatmap(svg, chart, p); break;
  }
  svg += "</svg>\n";
  return svg;
}

void emit_chart(const ChartSpec& chart, const std::filesystem::path& path) {
  const auto svg = render_svg(chart);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << svg;
}

}  // namespace memprobe
