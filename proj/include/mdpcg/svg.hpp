#pragma once

// Minimal static SVG plotting for the report stage: multi-series line charts
// and grouped bar charts. No styling knobs beyond what the reports need.

#include <string>
#include <vector>

namespace mdpcg::io {

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

struct LineChart {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_y = false;  // nonpositive values are dropped when set
  std::vector<Series> series;
};

void write_line_chart(const std::string& path, const LineChart& chart);

struct BarGroup {
  std::string label;            // one group per x position
  std::vector<double> values;   // one bar per series
};

struct BarChart {
  std::string title;
  std::string y_label;
  std::vector<std::string> series_names;
  std::vector<BarGroup> groups;
};

void write_bar_chart(const std::string& path, const BarChart& chart);

}  // namespace mdpcg::io
