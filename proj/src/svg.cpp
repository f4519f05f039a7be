#include "handsoff/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "handsoff/errors.hpp"

namespace handsoff {
namespace {

constexpr double kMarginLeft = 70.0;
constexpr double kMarginRight = 20.0;
constexpr double kMarginTop = 30.0;
constexpr double kMarginBottom = 30.0;
constexpr const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string render_svg(const std::vector<Panel>& panels, double width, double panel_height) {
  const double height = panel_height * static_cast<double>(std::max<std::size_t>(1, panels.size()));
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(width) << "\" height=\""
     << num(height) << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  for (std::size_t p = 0; p < panels.size(); ++p) {
    const Panel& panel = panels[p];
    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
    for (const auto& s : panel.series) {
      for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
        if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
        x0 = std::min(x0, s.x[i]);
        x1 = std::max(x1, s.x[i]);
        y0 = std::min(y0, s.y[i]);
        y1 = std::max(y1, s.y[i]);
      }
    }
    if (!std::isfinite(x0)) x0 = 0.0, x1 = 1.0, y0 = 0.0, y1 = 1.0;
    if (x1 <= x0) x1 = x0 + 1.0;
    if (y1 - y0 < 1e-12) y0 -= 0.5, y1 += 0.5;
    const double pad = 0.05 * (y1 - y0);
    y0 -= pad;
    y1 += pad;

    const double top = static_cast<double>(p) * panel_height + kMarginTop;
    const double plot_w = width - kMarginLeft - kMarginRight;
    const double plot_h = panel_height - kMarginTop - kMarginBottom;
    auto sx = [&](double x) { return kMarginLeft + (x - x0) / (x1 - x0) * plot_w; };
    auto sy = [&](double y) { return top + (y1 - y) / (y1 - y0) * plot_h; };

    os << "<g>\n<text x=\"" << num(kMarginLeft) << "\" y=\"" << num(top - 8) << "\" font-weight=\"bold\">"
       << escape(panel.title) << "</text>\n";
    os << "<rect x=\"" << num(kMarginLeft) << "\" y=\"" << num(top) << "\" width=\"" << num(plot_w)
       << "\" height=\"" << num(plot_h) << "\" fill=\"none\" stroke=\"#444\"/>\n";
    if (y0 < 0.0 && y1 > 0.0) {
      os << "<line x1=\"" << num(sx(x0)) << "\" y1=\"" << num(sy(0)) << "\" x2=\"" << num(sx(x1))
         << "\" y2=\"" << num(sy(0)) << "\" stroke=\"#bbb\"/>\n";
    }
    os << "<text x=\"" << num(kMarginLeft - 4) << "\" y=\"" << num(top + 10)
       << "\" text-anchor=\"end\">" << num(y1) << "</text>\n";
    os << "<text x=\"" << num(kMarginLeft - 4) << "\" y=\"" << num(top + plot_h)
       << "\" text-anchor=\"end\">" << num(y0) << "</text>\n";
    os << "<text x=\"" << num(kMarginLeft) << "\" y=\"" << num(top + plot_h + 14) << "\">" << num(x0)
       << "</text>\n";
    os << "<text x=\"" << num(kMarginLeft + plot_w) << "\" y=\"" << num(top + plot_h + 14)
       << "\" text-anchor=\"end\">" << num(x1) << "</text>\n";

    for (std::size_t k = 0; k < panel.series.size(); ++k) {
      const Series& s = panel.series[k];
      const char* color = kColors[k % std::size(kColors)];
      os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\"";
      if (s.dashed) os << " stroke-dasharray=\"6,4\"";
      os << " points=\"";
      for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
        if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
        os << num(sx(s.x[i])) << ',' << num(sy(s.y[i])) << ' ';
      }
      os << "\"/>\n";
      const double ly = top + 12.0 + 13.0 * static_cast<double>(k);
      const double lx = kMarginLeft + plot_w - 140.0;
      os << "<line x1=\"" << num(lx) << "\" y1=\"" << num(ly - 4) << "\" x2=\"" << num(lx + 20)
         << "\" y2=\"" << num(ly - 4) << "\" stroke=\"" << color << "\"";
      if (s.dashed) os << " stroke-dasharray=\"6,4\"";
      os << "/>\n<text x=\"" << num(lx + 24) << "\" y=\"" << num(ly) << "\">" << escape(s.label)
         << "</text>\n";
    }
    os << "</g>\n";
  }
  os << "</svg>\n";
  return os.str();
}

void save_svg(const std::vector<Panel>& panels, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << render_svg(panels);
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace handsoff
