#pragma once

// Minimal static SVG line plots for trace output (four-panel layout:
// torque function, currents, zoomed currents, speed). No external deps.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

namespace pmmctl {

struct PlotSeries {
  std::vector<double> x;
  std::vector<double> y;
  std::string color = "#1f77b4";
};

class SvgPanel {
 public:
  SvgPanel(std::string title, std::string xlabel, std::string ylabel)
      : title_(std::move(title)), xlabel_(std::move(xlabel)),
        ylabel_(std::move(ylabel)) {}

  void add(PlotSeries s) { series_.push_back(std::move(s)); }

  void render(std::ostringstream& out, double ox, double oy, double w,
              double h) const {
    double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
    double ymin = xmin, ymax = -xmin;
    for (const auto& s : series_)
      for (std::size_t i = 0; i < s.x.size(); ++i) {
        xmin = std::min(xmin, s.x[i]);
        xmax = std::max(xmax, s.x[i]);
        ymin = std::min(ymin, s.y[i]);
        ymax = std::max(ymax, s.y[i]);
      }
    if (!(xmax > xmin)) xmax = xmin + 1.0;
    if (!(ymax > ymin)) {
      ymin -= 1.0;
      ymax += 1.0;
    }
    const double pad = 0.05 * (ymax - ymin);
    ymin -= pad;
    ymax += pad;
    const double px = ox + 50, py = oy + 30, pw = w - 70, ph = h - 70;
    out << "<rect x='" << px << "' y='" << py << "' width='" << pw
        << "' height='" << ph << "' fill='white' stroke='black'/>\n";
    out << "<text x='" << ox + w / 2 << "' y='" << oy + 18
        << "' text-anchor='middle' font-size='14'>" << title_ << "</text>\n";
    out << "<text x='" << ox + w / 2 << "' y='" << oy + h - 8
        << "' text-anchor='middle' font-size='11'>" << xlabel_ << "</text>\n";
    out << "<text x='" << ox + 14 << "' y='" << oy + h / 2
        << "' text-anchor='middle' font-size='11' transform='rotate(-90 "
        << ox + 14 << ' ' << oy + h / 2 << ")'>" << ylabel_ << "</text>\n";
    auto fmt = [](double v) {
      std::ostringstream os;
      os.precision(3);
      os << v;
      return os.str();
    };
    out << "<text x='" << px << "' y='" << py + ph + 14 << "' font-size='10'>"
        << fmt(xmin) << "</text>\n";
    out << "<text x='" << px + pw << "' y='" << py + ph + 14
        << "' text-anchor='end' font-size='10'>" << fmt(xmax) << "</text>\n";
    out << "<text x='" << px - 4 << "' y='" << py + ph
        << "' text-anchor='end' font-size='10'>" << fmt(ymin) << "</text>\n";
    out << "<text x='" << px - 4 << "' y='" << py + 10
        << "' text-anchor='end' font-size='10'>" << fmt(ymax) << "</text>\n";
    for (const auto& s : series_) {
      out << "<polyline fill='none' stroke='" << s.color
          << "' stroke-width='1' points='";
      // Thin dense traces to keep files small.
      const std::size_t stride = std::max<std::size_t>(1, s.x.size() / 2000);
      for (std::size_t i = 0; i < s.x.size(); i += stride) {
        const double X = px + pw * (s.x[i] - xmin) / (xmax - xmin);
        const double Y = py + ph * (1.0 - (s.y[i] - ymin) / (ymax - ymin));
        out << X << ',' << Y << ' ';
      }
      out << "'/>\n";
    }
  }

 private:
  std::string title_, xlabel_, ylabel_;
  std::vector<PlotSeries> series_;
};

inline void write_svg_grid(const std::string& path,
                           const std::vector<SvgPanel>& panels, int cols = 2,
                           double panel_w = 420, double panel_h = 300) {
  const int rows = (static_cast<int>(panels.size()) + cols - 1) / cols;
  std::ostringstream out;
  out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << cols * panel_w
      << "' height='" << rows * panel_h << "'>\n"
      << "<rect width='100%' height='100%' fill='white'/>\n";
  for (std::size_t i = 0; i < panels.size(); ++i) {
    const int r = static_cast<int>(i) / cols, c = static_cast<int>(i) % cols;
    panels[i].render(out, c * panel_w, r * panel_h, panel_w, panel_h);
  }
  out << "</svg>\n";
  std::ofstream f(path);
  f << out.str();
}

inline std::string series_color(int idx) {
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c",
                                 "#9467bd", "#ff7f0e", "#8c564b"};
  return colors[idx % 6];
}

}  // namespace pmmctl
