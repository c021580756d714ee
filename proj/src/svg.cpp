#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "fel/io.hpp"

namespace fel {

namespace {

constexpr double kWidth = 720, kHeight = 480, kLeft = 80, kRight = 160, kTop = 40, kBottom = 60;
constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf"};

struct Frame {
  double x0, x1, y0, y1;
  double sx(double x) const { return kLeft + (x - x0) / (x1 - x0) * (kWidth - kLeft - kRight); }
  double sy(double y) const { return kHeight - kBottom - (y - y0) / (y1 - y0) * (kHeight - kTop - kBottom); }
};

std::string escape(const std::string& s) {
  std::string out;
  for (const char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

std::ofstream open(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write '" + path.string() + "'");
  return out;
}

void axes(std::ostream& out, const Frame& f, const std::string& title, const std::string& xl,
          const std::string& yl, bool log_y) {
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" << escape(title)
      << "</text>\n";
  const double xa = f.sx(f.x0), xb = f.sx(f.x1), ya = f.sy(f.y0), yb = f.sy(f.y1);
  out << "<rect x=\"" << xa << "\" y=\"" << yb << "\" width=\"" << xb - xa << "\" height=\"" << ya - yb
      << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double x = f.x0 + (f.x1 - f.x0) * i / 4.0;
    const double y = f.y0 + (f.y1 - f.y0) * i / 4.0;
    out << "<text x=\"" << f.sx(x) << "\" y=\"" << ya + 18 << "\" text-anchor=\"middle\">"
        << format_number(std::round(x * 1e4) / 1e4) << "</text>\n";
    const double label = log_y ? std::pow(10.0, y) : y;
    out << "<text x=\"" << xa - 6 << "\" y=\"" << f.sy(y) + 4 << "\" text-anchor=\"end\">"
        << format_number(std::abs(label) < 1e-3 && label != 0 ? std::round(label * 1e12) / 1e12
                                                                : std::round(label * 1e4) / 1e4)
        << "</text>\n";
  }
  out << "<text x=\"" << (xa + xb) / 2 << "\" y=\"" << kHeight - 16 << "\" text-anchor=\"middle\">" << escape(xl)
      << "</text>\n"
      << "<text transform=\"translate(18," << (ya + yb) / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
      << escape(yl) << "</text>\n";
}

}  // namespace

void write_line_plot(const std::filesystem::path& path, const PlotSpec& plot, const std::vector<Curve>& curves) {
  auto ty = [&](double y) { return plot.log_y ? std::log10(y) : y; };
  Frame f{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(),
          std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (const auto& c : curves) {
    for (std::size_t i = 0; i < c.x.size() && i < c.y.size(); ++i) {
      const double y = ty(c.y[i]);
      if (!std::isfinite(c.x[i]) || !std::isfinite(y)) continue;
      f.x0 = std::min(f.x0, c.x[i]);
      f.x1 = std::max(f.x1, c.x[i]);
      f.y0 = std::min(f.y0, y);
      f.y1 = std::max(f.y1, y);
    }
  }
  if (!std::isfinite(f.x0)) f = {0, 1, 0, 1};
  if (f.x1 == f.x0) f.x1 = f.x0 + 1;
  if (f.y1 == f.y0) f.y1 = f.y0 + 1;

  auto out = open(path);
  axes(out, f, plot.title, plot.x_label, plot.y_label, plot.log_y);
  for (std::size_t ci = 0; ci < curves.size(); ++ci) {
    const auto& c = curves[ci];
    const char* color = kPalette[ci % std::size(kPalette)];
    if (c.markers) {
      for (std::size_t i = 0; i < c.x.size() && i < c.y.size(); ++i) {
        const double y = ty(c.y[i]);
        if (!std::isfinite(y)) continue;
        out << "<circle cx=\"" << f.sx(c.x[i]) << "\" cy=\"" << f.sy(y) << "\" r=\"2.5\" fill=\"none\" stroke=\""
            << color << "\"/>\n";
      }
    } else {
      out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
      for (std::size_t i = 0; i < c.x.size() && i < c.y.size(); ++i) {
        const double y = ty(c.y[i]);
        if (std::isfinite(y)) out << f.sx(c.x[i]) << ',' << f.sy(y) << ' ';
      }
      out << "\"/>\n";
    }
    const double ly = kTop + 16 + 18.0 * static_cast<double>(ci);
    out << "<rect x=\"" << kWidth - kRight + 12 << "\" y=\"" << ly - 9 << "\" width=\"12\" height=\"3\" fill=\""
        << color << "\"/>\n<text x=\"" << kWidth - kRight + 30 << "\" y=\"" << ly - 4 << "\">" << escape(c.label)
        << "</text>\n";
  }
  out << "</svg>\n";
}

void write_phase_space(const std::filesystem::path& path, const std::string& title,
                       const std::vector<double>& times,
                       const std::vector<std::vector<std::pair<double, double>>>& outlines) {
  Frame f{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(),
          std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (const auto& o : outlines) {
    for (const auto& [x, y] : o) {
      f.x0 = std::min(f.x0, x);
      f.x1 = std::max(f.x1, x);
      f.y0 = std::min(f.y0, y);
      f.y1 = std::max(f.y1, y);
    }
  }
  if (!std::isfinite(f.x0)) f = {0, 1, 0, 1};
  if (f.x1 == f.x0) f.x1 = f.x0 + 1;
  if (f.y1 == f.y0) f.y1 = f.y0 + 1;

  auto out = open(path);
  axes(out, f, title, "theta", "p", false);
  for (std::size_t i = 0; i < outlines.size(); ++i) {
    const char* color = kPalette[i % std::size(kPalette)];
    out << "<polygon fill=\"" << color << "\" fill-opacity=\"0.25\" stroke=\"" << color << "\" points=\"";
    for (const auto& [x, y] : outlines[i]) out << f.sx(x) << ',' << f.sy(y) << ' ';
    out << "\"/>\n";
    const double ly = kTop + 16 + 18.0 * static_cast<double>(i);
    out << "<text x=\"" << kWidth - kRight + 12 << "\" y=\"" << ly << "\" fill=\"" << color << "\">t = "
        << format_number(i < times.size() ? times[i] : 0.0) << "</text>\n";
  }
  out << "</svg>\n";
}

}  // namespace fel
