#include "roadozone/svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "roadozone/error.hpp"

namespace roadozone::plot {
namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::string esc(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      case '&':
        out += "&amp;";
        break;
      default:
        out += c;
    }
  }
  return out;
}

struct Frame {
  double left = 70, right = 20, top = 36, bottom = 50;
  int width, height;
  double x0, x1, y0, y1;

  double px(double x) const { return left + (x - x0) / (x1 - x0) * (width - left - right); }
  double py(double y) const { return height - bottom - (y - y0) / (y1 - y0) * (height - top - bottom); }
};

void widen(double& lo, double& hi) {
  if (!std::isfinite(lo) || !std::isfinite(hi)) {
    lo = 0.0;
    hi = 1.0;
  }
  if (hi - lo <= 1e-300 * std::max(1.0, std::abs(hi))) {
    const double pad = std::max(1.0, std::abs(hi)) * 0.05;
    lo -= pad;
    hi += pad;
  }
}

void axes_svg(std::ostringstream& os, const Frame& f, const Axes& axes) {
  os << "<rect x='" << f.left << "' y='" << f.top << "' width='" << f.width - f.left - f.right << "' height='"
     << f.height - f.top - f.bottom << "' fill='none' stroke='#333'/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double xv = f.x0 + (f.x1 - f.x0) * k / 4.0;
    const double yv = f.y0 + (f.y1 - f.y0) * k / 4.0;
    os << "<text x='" << f.px(xv) << "' y='" << f.height - f.bottom + 16 << "' font-size='11' text-anchor='middle'>"
       << fmt(xv) << "</text>\n";
    os << "<text x='" << f.left - 6 << "' y='" << f.py(yv) + 4 << "' font-size='11' text-anchor='end'>" << fmt(yv)
       << "</text>\n";
  }
  os << "<text x='" << f.width / 2 << "' y='22' font-size='14' text-anchor='middle'>" << esc(axes.title)
     << "</text>\n";
  os << "<text x='" << f.width / 2 << "' y='" << f.height - 12 << "' font-size='12' text-anchor='middle'>"
     << esc(axes.x_label) << "</text>\n";
  os << "<text x='16' y='" << f.height / 2 << "' font-size='12' text-anchor='middle' transform='rotate(-90 16 "
     << f.height / 2 << ")'>" << esc(axes.y_label) << "</text>\n";
}

std::string colour_ramp(double t) {
  t = std::clamp(t, 0.0, 1.0);
  const double r = std::clamp(1.5 * t, 0.0, 1.0);
  const double g = std::clamp(1.5 * t - 0.5, 0.0, 1.0);
  const double b = std::clamp(0.5 + t - 1.5 * t * t, 0.0, 1.0);
  char buf[16];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", static_cast<int>(r * 255), static_cast<int>(g * 255),
                static_cast<int>(b * 255));
  return buf;
}

}  // namespace

std::string line_chart(const std::vector<Series>& series, const Axes& axes, int width, int height) {
  Frame f{};
  f.width = width;
  f.height = height;
  f.x0 = f.y0 = std::numeric_limits<double>::infinity();
  f.x1 = f.y1 = -std::numeric_limits<double>::infinity();
  for (const auto& s : series) {
    for (std::size_t k = 0; k < std::min(s.x.size(), s.y.size()); ++k) {
      if (!std::isfinite(s.x[k]) || !std::isfinite(s.y[k])) continue;
      f.x0 = std::min(f.x0, s.x[k]);
      f.x1 = std::max(f.x1, s.x[k]);
      f.y0 = std::min(f.y0, s.y[k]);
      f.y1 = std::max(f.y1, s.y[k]);
    }
  }
  widen(f.x0, f.x1);
  widen(f.y0, f.y1);

  std::ostringstream os;
  os << "<svg xmlns='http://www.w3.org/2000/svg' width='" << width << "' height='" << height << "'>\n";
  os << "<rect width='100%' height='100%' fill='white'/>\n";
  axes_svg(os, f, axes);
  for (std::size_t si = 0; si < series.size(); ++si) {
    const auto& s = series[si];
    const std::string colour = s.color.empty() ? kPalette[si % std::size(kPalette)] : s.color;
    os << "<polyline fill='none' stroke='" << colour << "' stroke-width='1.5' points='";
    // Thin long series to about two points per horizontal pixel.
    const std::size_t n = std::min(s.x.size(), s.y.size());
    const std::size_t stride = std::max<std::size_t>(1, n / (2 * static_cast<std::size_t>(width)));
    for (std::size_t k = 0; k < n; k += stride) {
      if (!std::isfinite(s.x[k]) || !std::isfinite(s.y[k])) continue;
      os << fmt(f.px(s.x[k])) << ',' << fmt(f.py(s.y[k])) << ' ';
    }
    if (n > 0 && (n - 1) % stride != 0) os << fmt(f.px(s.x[n - 1])) << ',' << fmt(f.py(s.y[n - 1]));
    os << "'/>\n";
    os << "<text x='" << f.left + 10 << "' y='" << f.top + 16 + 14 * si << "' font-size='11' fill='" << colour << "'>"
       << esc(s.label) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

std::string heatmap(std::span<const double> values, std::size_t nx, std::size_t ny, double x_extent, double y_extent,
                    const Axes& axes, int width, int height) {
  if (values.size() != nx * ny || nx == 0 || ny == 0) throw DomainError("heatmap: shape mismatch");
  Frame f{};
  f.width = width;
  f.height = height;
  f.right = 90;
  f.x0 = 0.0;
  f.x1 = x_extent;
  f.y0 = 0.0;
  f.y1 = y_extent;
  double lo = *std::min_element(values.begin(), values.end());
  double hi = *std::max_element(values.begin(), values.end());
  widen(lo, hi);

  std::ostringstream os;
  os << "<svg xmlns='http://www.w3.org/2000/svg' width='" << width << "' height='" << height << "'>\n";
  os << "<rect width='100%' height='100%' fill='white'/>\n";
  // Down-sample to at most 200 x 200 tiles.
  const std::size_t sx = std::max<std::size_t>(1, nx / 200);
  const std::size_t sy = std::max<std::size_t>(1, ny / 200);
  const double cw = (width - f.left - f.right) / static_cast<double>(nx);
  const double ch = (height - f.top - f.bottom) / static_cast<double>(ny);
  for (std::size_t j = 0; j < ny; j += sy) {
    for (std::size_t i = 0; i < nx; i += sx) {
      const double v = values[j * nx + i];
      os << "<rect x='" << fmt(f.left + cw * i) << "' y='" << fmt(height - f.bottom - ch * (j + sy)) << "' width='"
         << fmt(cw * sx + 0.5) << "' height='" << fmt(ch * sy + 0.5) << "' fill='" << colour_ramp((v - lo) / (hi - lo))
         << "'/>\n";
    }
  }
  axes_svg(os, f, axes);
  const double bar_x = width - f.right + 14;
  for (int k = 0; k < 50; ++k) {
    const double y = f.top + (height - f.top - f.bottom) * (1.0 - (k + 1) / 50.0);
    os << "<rect x='" << bar_x << "' y='" << fmt(y) << "' width='14' height='" << fmt((height - f.top - f.bottom) / 50.0 + 0.5)
       << "' fill='" << colour_ramp(k / 49.0) << "'/>\n";
  }
  os << "<text x='" << bar_x + 18 << "' y='" << f.top + 8 << "' font-size='10'>" << fmt(hi) << "</text>\n";
  os << "<text x='" << bar_x + 18 << "' y='" << height - f.bottom << "' font-size='10'>" << fmt(lo) << "</text>\n";
  os << "</svg>\n";
  return os.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << content;
}

}  // namespace roadozone::plot
