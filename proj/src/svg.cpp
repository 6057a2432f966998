#include "mdpcg/svg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace mdpcg::io {

namespace {

constexpr int kWidth = 720;
constexpr int kHeight = 420;
constexpr int kMarginLeft = 70, kMarginRight = 160, kMarginTop = 40, kMarginBottom = 50;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Frame {
  double x_min, x_max, y_min, y_max;
  double px(double x) const {
    const double span = x_max > x_min ? x_max - x_min : 1.0;
    return kMarginLeft + (x - x_min) / span * (kWidth - kMarginLeft - kMarginRight);
  }
  double py(double y) const {
    const double span = y_max > y_min ? y_max - y_min : 1.0;
    return kHeight - kMarginBottom - (y - y_min) / span * (kHeight - kMarginTop - kMarginBottom);
  }
};

void open_svg(std::ofstream& out, const std::string& title) {
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
      << kHeight << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" font-family=\"sans-serif\""
      << " font-size=\"15\">" << escape(title) << "</text>\n";
}

void draw_axes(std::ofstream& out, const Frame& f, const std::string& x_label,
               const std::string& y_label, bool log_y) {
  const double x0 = kMarginLeft, x1 = kWidth - kMarginRight;
  const double y0 = kHeight - kMarginBottom, y1 = kMarginTop;
  out << "<line x1=\"" << x0 << "\" y1=\"" << y0 << "\" x2=\"" << x1 << "\" y2=\"" << y0
      << "\" stroke=\"black\"/>\n"
      << "<line x1=\"" << x0 << "\" y1=\"" << y0 << "\" x2=\"" << x0 << "\" y2=\"" << y1
      << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double xv = f.x_min + (f.x_max - f.x_min) * i / 4.0;
    const double yv = f.y_min + (f.y_max - f.y_min) * i / 4.0;
    out << "<text x=\"" << f.px(xv) << "\" y=\"" << y0 + 18
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << fmt(xv)
        << "</text>\n";
    const std::string ylab = log_y ? ("1e" + fmt(yv)) : fmt(yv);
    out << "<text x=\"" << x0 - 8 << "\" y=\"" << f.py(yv) + 4
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << ylab
        << "</text>\n";
    out << "<line x1=\"" << x0 << "\" y1=\"" << f.py(yv) << "\" x2=\"" << x1 << "\" y2=\""
        << f.py(yv) << "\" stroke=\"#dddddd\"/>\n";
  }
  out << "<text x=\"" << (x0 + x1) / 2 << "\" y=\"" << kHeight - 12
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" << escape(x_label)
      << "</text>\n"
      << "<text x=\"18\" y=\"" << (y0 + y1) / 2
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\""
      << " transform=\"rotate(-90 18 " << (y0 + y1) / 2 << ")\">" << escape(y_label)
      << "</text>\n";
}

void draw_legend(std::ofstream& out, const std::vector<std::string>& names) {
  const double x = kWidth - kMarginRight + 14;
  double y = kMarginTop + 10;
  for (std::size_t i = 0; i < names.size(); ++i) {
    const char* color = kPalette[i % (sizeof(kPalette) / sizeof(kPalette[0]))];
    out << "<rect x=\"" << x << "\" y=\"" << y - 9 << "\" width=\"12\" height=\"12\" fill=\""
        << color << "\"/>\n"
        << "<text x=\"" << x + 18 << "\" y=\"" << y + 2
        << "\" font-family=\"sans-serif\" font-size=\"11\">" << escape(names[i]) << "</text>\n";
    y += 18;
  }
}

}  // namespace

void write_line_chart(const std::string& path, const LineChart& chart) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);

  // Collect drawable points (log charts drop nonpositive values).
  double x_min = std::numeric_limits<double>::infinity(), x_max = -x_min;
  double y_min = x_min, y_max = -x_min;
  std::vector<Series> drawn;
  for (const Series& s : chart.series) {
    Series d;
    d.name = s.name;
    for (std::size_t k = 0; k < s.x.size() && k < s.y.size(); ++k) {
      double yv = s.y[k];
      if (chart.log_y) {
        if (yv <= 0.0) continue;
        yv = std::log10(yv);
      }
      d.x.push_back(s.x[k]);
      d.y.push_back(yv);
      x_min = std::min(x_min, s.x[k]);
      x_max = std::max(x_max, s.x[k]);
      y_min = std::min(y_min, yv);
      y_max = std::max(y_max, yv);
    }
    drawn.push_back(std::move(d));
  }
  if (!(x_min <= x_max)) {  // nothing drawable
    x_min = 0;
    x_max = 1;
    y_min = 0;
    y_max = 1;
  }
  if (y_min == y_max) {
    y_min -= 0.5;
    y_max += 0.5;
  }

  open_svg(out, chart.title);
  const Frame f{x_min, x_max, y_min, y_max};
  draw_axes(out, f, chart.x_label, chart.y_label, chart.log_y);
  std::vector<std::string> names;
  for (std::size_t i = 0; i < drawn.size(); ++i) {
    const Series& s = drawn[i];
    names.push_back(s.name);
    if (s.x.empty()) continue;
    const char* color = kPalette[i % (sizeof(kPalette) / sizeof(kPalette[0]))];
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t k = 0; k < s.x.size(); ++k)
      out << fmt(f.px(s.x[k])) << ',' << fmt(f.py(s.y[k])) << ' ';
    out << "\"/>\n";
  }
  draw_legend(out, names);
  out << "</svg>\n";
  if (!out) throw std::runtime_error("write failed: " + path);
}

void write_bar_chart(const std::string& path, const BarChart& chart) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);

  double y_max = 0.0;
  for (const BarGroup& g : chart.groups)
    for (double v : g.values) y_max = std::max(y_max, v);
  if (y_max <= 0.0) y_max = 1.0;

  open_svg(out, chart.title);
  const Frame f{0.0, 1.0, 0.0, y_max};
  draw_axes(out, f, "", chart.y_label, false);

  const double plot_w = kWidth - kMarginLeft - kMarginRight;
  const double base_y = kHeight - kMarginBottom;
  const std::size_t n_groups = chart.groups.size();
  const std::size_t n_series = chart.series_names.size();
  if (n_groups > 0 && n_series > 0) {
    const double group_w = plot_w / static_cast<double>(n_groups);
    const double bar_w = group_w * 0.7 / static_cast<double>(n_series);
    for (std::size_t gi = 0; gi < n_groups; ++gi) {
      const BarGroup& g = chart.groups[gi];
      const double gx = kMarginLeft + group_w * (static_cast<double>(gi) + 0.15);
      for (std::size_t si = 0; si < n_series && si < g.values.size(); ++si) {
        const double h = g.values[si] / y_max * (kHeight - kMarginTop - kMarginBottom);
        const char* color = kPalette[si % (sizeof(kPalette) / sizeof(kPalette[0]))];
        out << "<rect x=\"" << fmt(gx + bar_w * si) << "\" y=\"" << fmt(base_y - h)
            << "\" width=\"" << fmt(bar_w * 0.9) << "\" height=\"" << fmt(h) << "\" fill=\""
            << color << "\"/>\n";
      }
      out << "<text x=\"" << fmt(gx + bar_w * n_series / 2.0) << "\" y=\"" << base_y + 18
          << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
          << escape(g.label) << "</text>\n";
    }
  }
  draw_legend(out, chart.series_names);
  out << "</svg>\n";
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace mdpcg::io
