#include "puforge/cli/plot.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <limits>

#include "puforge/error.hpp"

namespace puforge::cli {
namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

}  // namespace

void write_line_plot_svg(const std::filesystem::path& path, const std::string& title,
                         const std::string& x_label, const std::vector<double>& x,
                         const std::vector<Series>& series) {
  constexpr double W = 640, H = 400, L = 60, R = 150, T = 40, B = 50;
  double x_lo = std::numeric_limits<double>::infinity(), x_hi = -x_lo;
  double y_lo = x_lo, y_hi = -x_lo;
  for (double v : x) {
    x_lo = std::min(x_lo, v);
    x_hi = std::max(x_hi, v);
  }
  for (const auto& s : series) {
    for (double v : s.y) {
      y_lo = std::min(y_lo, v);
      y_hi = std::max(y_hi, v);
    }
  }
  if (!(x_hi > x_lo)) x_hi = x_lo + 1.0;
  if (!(y_hi > y_lo)) y_hi = y_lo + 1.0;
  y_lo = std::min(y_lo, 0.0);
  auto px = [&](double v) { return L + (v - x_lo) / (x_hi - x_lo) * (W - L - R); };
  auto py = [&](double v) { return H - B - (v - y_lo) / (y_hi - y_lo) * (H - T - B); };

  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << W / 2 << "\" y=\"20\" text-anchor=\"middle\">" << title << "</text>\n";
  out << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
      << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B
      << "\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double yv = y_lo + (y_hi - y_lo) * k / 4.0;
    const double xv = x_lo + (x_hi - x_lo) * k / 4.0;
    out << "<text x=\"" << L - 6 << "\" y=\"" << num(py(yv) + 4) << "\" text-anchor=\"end\">"
        << label(yv) << "</text>\n";
    out << "<text x=\"" << num(px(xv)) << "\" y=\"" << H - B + 16 << "\" text-anchor=\"middle\">"
        << label(xv) << "</text>\n";
  }
  out << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 10 << "\" text-anchor=\"middle\">"
      << x_label << "</text>\n";
  for (std::size_t s = 0; s < series.size(); ++s) {
    const auto& ser = series[s];
    out << "<polyline fill=\"none\" stroke=\"" << ser.color << "\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < std::min(x.size(), ser.y.size()); ++i) {
      out << num(px(x[i])) << ',' << num(py(ser.y[i])) << ' ';
    }
    out << "\"/>\n";
    const double ly = T + 16.0 * static_cast<double>(s);
    out << "<line x1=\"" << W - R + 10 << "\" y1=\"" << ly << "\" x2=\"" << W - R + 30
        << "\" y2=\"" << ly << "\" stroke=\"" << ser.color << "\" stroke-width=\"2\"/>\n";
    out << "<text x=\"" << W - R + 35 << "\" y=\"" << ly + 4 << "\">" << ser.name << "</text>\n";
  }
  out << "</svg>\n";
}

}  // namespace puforge::cli
