#include "tdid/svg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace tdid {

namespace {

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                          "#9467bd", "#8c564b", "#17becf", "#7f7f7f",
                          "#bcbd22", "#e377c2", "#393b79", "#637939"};

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

// round range endpoints to friendly tick values
std::vector<double> ticks(double lo, double hi, int target = 6) {
  std::vector<double> out;
  const double span = hi - lo;
  if (!(span > 0)) return {lo};
  double raw = span / target;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double c : {1.0, 2.0, 5.0, 10.0}) {
    if (raw <= c * mag) {
      step = c * mag;
      break;
    }
  }
  const double first = std::ceil(lo / step) * step;
  for (double v = first; v <= hi + 1e-9 * span; v += step) out.push_back(v);
  return out;
}

}  // namespace

std::string render_line_plot(const std::string& title,
                             const std::string& x_label,
                             const std::string& y_label,
                             const std::vector<PlotSeries>& series, int width,
                             int height) {
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  for (const auto& s : series) {
    for (double v : s.x) {
      xmin = std::min(xmin, v);
      xmax = std::max(xmax, v);
    }
    for (double v : s.y) {
      if (!std::isfinite(v)) continue;
      ymin = std::min(ymin, v);
      ymax = std::max(ymax, v);
    }
  }
  if (!(xmax > xmin)) {
    xmin -= 0.5;
    xmax += 0.5;
  }
  if (!(ymax > ymin)) {
    ymin -= 0.5;
    ymax += 0.5;
  }
  const double ypad = 0.05 * (ymax - ymin);
  ymin -= ypad;
  ymax += ypad;

  const int ml = 70, mr = 160, mt = 40, mb = 50;
  const double pw = width - ml - mr, ph = height - mt - mb;
  auto px = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * pw; };
  auto py = [&](double y) { return mt + (ymax - y) / (ymax - ymin) * ph; };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
     << "\" height=\"" << height << "\" viewBox=\"0 0 " << width << " "
     << height << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" "
     << "font-family=\"sans-serif\" font-size=\"16\">" << title << "</text>\n";

  for (double tx : ticks(xmin, xmax)) {
    const double x = px(tx);
    os << "<line x1=\"" << x << "\" y1=\"" << mt << "\" x2=\"" << x
       << "\" y2=\"" << mt + ph << "\" stroke=\"#e0e0e0\"/>\n";
    os << "<text x=\"" << x << "\" y=\"" << mt + ph + 18
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
          "font-size=\"11\">"
       << fmt(tx) << "</text>\n";
  }
  for (double ty : ticks(ymin, ymax)) {
    const double y = py(ty);
    os << "<line x1=\"" << ml << "\" y1=\"" << y << "\" x2=\"" << ml + pw
       << "\" y2=\"" << y << "\" stroke=\"#e0e0e0\"/>\n";
    os << "<text x=\"" << ml - 6 << "\" y=\"" << y + 4
       << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
       << fmt(ty) << "</text>\n";
  }
  os << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << pw
     << "\" height=\"" << ph << "\" fill=\"none\" stroke=\"black\"/>\n";
  os << "<text x=\"" << ml + pw / 2 << "\" y=\"" << height - 12
     << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
        "font-size=\"13\">"
     << x_label << "</text>\n";
  os << "<text x=\"18\" y=\"" << mt + ph / 2
     << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" "
     << "transform=\"rotate(-90 18 " << mt + ph / 2 << ")\">" << y_label
     << "</text>\n";

  for (size_t si = 0; si < series.size(); ++si) {
    const auto& s = series[si];
    const char* color = kPalette[si % (sizeof(kPalette) / sizeof(*kPalette))];
    os << "<polyline fill=\"none\" stroke=\"" << color
       << "\" stroke-width=\"1.2\" points=\"";
    // thin dense series so the file stays manageable
    const size_t stride = std::max<size_t>(1, s.x.size() / 4000);
    for (size_t i = 0; i < s.x.size(); i += stride) {
      if (!std::isfinite(s.y[i])) continue;
      os << fmt(px(s.x[i])) << ',' << fmt(py(s.y[i])) << ' ';
    }
    os << "\"/>\n";
    const double ly = mt + 16.0 * static_cast<double>(si) + 10;
    os << "<line x1=\"" << ml + pw + 10 << "\" y1=\"" << ly << "\" x2=\""
       << ml + pw + 34 << "\" y2=\"" << ly << "\" stroke=\"" << color
       << "\" stroke-width=\"2\"/>\n";
    os << "<text x=\"" << ml + pw + 40 << "\" y=\"" << ly + 4
       << "\" font-family=\"sans-serif\" font-size=\"11\">" << s.label
       << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace tdid
