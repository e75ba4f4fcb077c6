#pragma once

#include <optional>
#include <string>
#include <vector>

namespace gnnx {

struct Bar {
  std::string label;
  double value = 0.0;
  std::optional<double> error;  // half-length of the whisker
};

struct BarChart {
  std::string title;
  std::string y_label;
  std::vector<Bar> bars;
  bool log_scale = false;  // base 10; values must then be positive
};

// Standalone SVG document with one rectangle per bar, axis ticks and labels.
std::string render_bar_chart(const BarChart& chart);

std::string xml_escape(const std::string& text);

}  // namespace gnnx
