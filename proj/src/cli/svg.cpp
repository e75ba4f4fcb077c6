#include "gnnx/cli/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "gnnx/error.hpp"

namespace gnnx {
namespace {

constexpr double kWidthPerBar = 90.0;
constexpr double kLeft = 70.0, kRight = 20.0, kTop = 40.0, kBottom = 60.0, kPlotHeight = 260.0;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

}  // namespace

std::string xml_escape(const std::string& text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string render_bar_chart(const BarChart& chart) {
  if (chart.bars.empty()) throw DomainError("bar chart '" + chart.title + "' has no bars");
  for (const Bar& b : chart.bars) {
    if (!std::isfinite(b.value)) throw DomainError("bar chart: non-finite value for '" + b.label + "'");
    if (chart.log_scale && b.value <= 0.0) throw DomainError("log-scale bar chart: non-positive value for '" + b.label + "'");
  }

  // Value range, including whiskers, and the tick positions.
  double lo = 0.0, hi = 0.0;
  std::vector<double> ticks;
  if (chart.log_scale) {
    double min_v = chart.bars.front().value, max_v = min_v;
    for (const Bar& b : chart.bars) {
      min_v = std::min(min_v, b.error ? std::max(b.value - *b.error, b.value / 10.0) : b.value);
      max_v = std::max(max_v, b.value + b.error.value_or(0.0));
    }
    lo = std::floor(std::log10(min_v));
    hi = std::max(std::ceil(std::log10(max_v)), lo + 1.0);
    for (double e = lo; e <= hi; e += 1.0) ticks.push_back(e);
  } else {
    for (const Bar& b : chart.bars) {
      lo = std::min(lo, b.value - b.error.value_or(0.0));
      hi = std::max(hi, b.value + b.error.value_or(0.0));
    }
    if (hi == lo) hi = lo + 1.0;
    const double pad = 0.05 * (hi - lo);
    if (lo < 0.0) lo -= pad;
    hi += pad;
    const double step = (hi - lo) / 5.0;
    for (int i = 0; i <= 5; ++i) ticks.push_back(lo + step * i);
  }
  auto y_of = [&](double v) {
    const double t = chart.log_scale ? std::log10(v) : v;
    return kTop + kPlotHeight * (1.0 - (t - lo) / (hi - lo));
  };
  auto y_of_axis = [&](double t) { return kTop + kPlotHeight * (1.0 - (t - lo) / (hi - lo)); };

  const double width = kLeft + kRight + kWidthPerBar * static_cast<double>(chart.bars.size());
  const double height = kTop + kPlotHeight + kBottom;
  const double base_y = chart.log_scale ? kTop + kPlotHeight : y_of(0.0);

  std::ostringstream s;
  s << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(width) << "\" height=\"" << num(height)
    << "\" viewBox=\"0 0 " << num(width) << ' ' << num(height) << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  s << "  <text x=\"" << num(width / 2) << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">"
    << xml_escape(chart.title) << "</text>\n";
  s << "  <text x=\"14\" y=\"" << num(kTop + kPlotHeight / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 14 "
    << num(kTop + kPlotHeight / 2) << ")\">" << xml_escape(chart.y_label + (chart.log_scale ? " (log scale)" : ""))
    << "</text>\n";
  for (double t : ticks) {
    const double y = y_of_axis(t);
    s << "  <line x1=\"" << num(kLeft - 4) << "\" y1=\"" << num(y) << "\" x2=\"" << num(width - kRight) << "\" y2=\""
      << num(y) << "\" stroke=\"#dddddd\"/>\n";
    s << "  <text x=\"" << num(kLeft - 6) << "\" y=\"" << num(y + 4) << "\" text-anchor=\"end\">"
      << (chart.log_scale ? "1e" + tick_label(t) : tick_label(t)) << "</text>\n";
  }
  s << "  <line x1=\"" << num(kLeft) << "\" y1=\"" << num(kTop) << "\" x2=\"" << num(kLeft) << "\" y2=\""
    << num(kTop + kPlotHeight) << "\" stroke=\"black\"/>\n";
  s << "  <line x1=\"" << num(kLeft) << "\" y1=\"" << num(base_y) << "\" x2=\"" << num(width - kRight) << "\" y2=\""
    << num(base_y) << "\" stroke=\"black\"/>\n";
  for (std::size_t i = 0; i < chart.bars.size(); ++i) {
    const Bar& b = chart.bars[i];
    const double x = kLeft + kWidthPerBar * static_cast<double>(i) + 15.0;
    const double bw = kWidthPerBar - 30.0;
    const double y = y_of(b.value);
    s << "  <rect x=\"" << num(x) << "\" y=\"" << num(std::min(y, base_y)) << "\" width=\"" << num(bw)
      << "\" height=\"" << num(std::abs(base_y - y)) << "\" fill=\"#4c72b0\"><title>" << xml_escape(b.label) << ": "
      << tick_label(b.value) << "</title></rect>\n";
    if (b.error && *b.error > 0.0) {
      const double cx = x + bw / 2;
      const double top = y_of(b.value + *b.error);
      const double low_v = b.value - *b.error;
      const double bottom = chart.log_scale ? y_of(std::max(low_v, std::pow(10.0, lo))) : y_of(low_v);
      s << "  <line x1=\"" << num(cx) << "\" y1=\"" << num(top) << "\" x2=\"" << num(cx) << "\" y2=\"" << num(bottom)
        << "\" stroke=\"black\"/>\n";
      for (double yy : {top, bottom}) {
        s << "  <line x1=\"" << num(cx - 6) << "\" y1=\"" << num(yy) << "\" x2=\"" << num(cx + 6) << "\" y2=\""
          << num(yy) << "\" stroke=\"black\"/>\n";
      }
    }
    s << "  <text x=\"" << num(x + bw / 2) << "\" y=\"" << num(kTop + kPlotHeight + 18) << "\" text-anchor=\"middle\">"
      << xml_escape(b.label) << "</text>\n";
  }
  s << "</svg>\n";
  return s.str();
}

}  // namespace gnnx
