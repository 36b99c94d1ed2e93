#include "wloja/svg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "wloja/common.hpp"

namespace wloja::svg {

namespace {

std::string escape(const std::string& text) {
  std::string out;
  for (char c : text) {
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

std::string fixed(double v, int digits = 2) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(digits);
  os << v;
  return os.str();
}

std::string tick_label(double v) {
  std::ostringstream os;
  os.precision(3);
  os << v;
  return os.str();
}

}  // namespace

void line_plot(std::ostream& os, const std::vector<Series>& series, const PlotOptions& options) {
  const double left = 70, right = 150, top = 40, bottom = 50;
  const double w = options.width, h = options.height;
  const double pw = w - left - right, ph = h - top - bottom;

  auto ty = [&](double y) { return options.log_y ? std::log10(y) : y; };
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : series) {
    for (std::size_t k = 0; k < s.x.size() && k < s.y.size(); ++k) {
      if (!std::isfinite(s.x[k]) || !std::isfinite(s.y[k]) || (options.log_y && !(s.y[k] > 0))) continue;
      x0 = std::min(x0, s.x[k]);
      x1 = std::max(x1, s.x[k]);
      y0 = std::min(y0, ty(s.y[k]));
      y1 = std::max(y1, ty(s.y[k]));
    }
  }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 == x0) x1 = x0 + 1;
  if (y1 == y0) y1 = y0 + 1;
  auto px = [&](double x) { return left + (x - x0) / (x1 - x0) * pw; };
  auto py = [&](double y) { return top + (1 - (ty(y) - y0) / (y1 - y0)) * ph; };

  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << options.width << "\" height=\"" << options.height
     << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!options.title.empty()) {
    os << "<text x=\"" << fixed(left + pw / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
       << escape(options.title) << "</text>\n";
  }
  os << "<rect x=\"" << fixed(left) << "\" y=\"" << fixed(top) << "\" width=\"" << fixed(pw) << "\" height=\""
     << fixed(ph) << "\" fill=\"none\" stroke=\"black\"/>\n";

  for (int k = 0; k <= 5; ++k) {
    const double x = x0 + (x1 - x0) * k / 5;
    os << "<line x1=\"" << fixed(px(x)) << "\" y1=\"" << fixed(top + ph) << "\" x2=\"" << fixed(px(x)) << "\" y2=\""
       << fixed(top + ph + 5) << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << fixed(px(x)) << "\" y=\"" << fixed(top + ph + 18) << "\" text-anchor=\"middle\">"
       << tick_label(x) << "</text>\n";
  }
  for (int k = 0; k <= 5; ++k) {
    const double yt = y0 + (y1 - y0) * k / 5;
    const double y = options.log_y ? std::pow(10.0, yt) : yt;
    const double yy = top + (1 - double(k) / 5) * ph;
    os << "<line x1=\"" << fixed(left - 5) << "\" y1=\"" << fixed(yy) << "\" x2=\"" << fixed(left) << "\" y2=\""
       << fixed(yy) << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << fixed(left - 8) << "\" y=\"" << fixed(yy + 4) << "\" text-anchor=\"end\">" << tick_label(y)
       << "</text>\n";
  }
  os << "<text x=\"" << fixed(left + pw / 2) << "\" y=\"" << fixed(h - 10) << "\" text-anchor=\"middle\">"
     << escape(options.x_label) << "</text>\n";
  if (!options.y_label.empty()) {
    os << "<text transform=\"translate(16," << fixed(top + ph / 2) << ") rotate(-90)\" text-anchor=\"middle\">"
       << escape(options.y_label + (options.log_y ? " (log)" : "")) << "</text>\n";
  }

  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto& s = series[i];
    os << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\"";
    if (s.dashed) os << " stroke-dasharray=\"6,4\"";
    os << " points=\"";
    bool first = true;
    for (std::size_t k = 0; k < s.x.size() && k < s.y.size(); ++k) {
      if (!std::isfinite(s.x[k]) || !std::isfinite(s.y[k]) || (options.log_y && !(s.y[k] > 0))) continue;
      if (!first) os << ' ';
      os << fixed(px(s.x[k])) << ',' << fixed(py(s.y[k]));
      first = false;
    }
    os << "\"/>\n";
    const double ly = top + 16 + 18 * double(i);
    os << "<line x1=\"" << fixed(left + pw + 10) << "\" y1=\"" << fixed(ly) << "\" x2=\"" << fixed(left + pw + 34)
       << "\" y2=\"" << fixed(ly) << "\" stroke=\"" << s.color << "\" stroke-width=\"1.5\""
       << (s.dashed ? " stroke-dasharray=\"6,4\"" : "") << "/>\n";
    os << "<text x=\"" << fixed(left + pw + 40) << "\" y=\"" << fixed(ly + 4) << "\">" << escape(s.label)
       << "</text>\n";
  }
  os << "</svg>\n";
}

}  // namespace wloja::svg
