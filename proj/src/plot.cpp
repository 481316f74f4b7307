#include "sysid/plot.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>

#include "sysid/matrix_io.hpp"

namespace sysid {

namespace {

bool drawable(const PlotSpec& spec, double x, double y) {
  if (!std::isfinite(x) || !std::isfinite(y)) return false;
  if (spec.logx && !(x > 0.0)) return false;
  if (spec.logy && !(y > 0.0)) return false;
  return true;
}

// Fixed-point text with `digits` decimals, independent of the global locale.
std::string fixed(double x, int digits = 2) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::fixed, digits);
  return std::string(buf, res.ptr);
}

std::string escape_xml(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string quote_gnuplot(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

struct Axis {
  double lo = 0.0;
  double hi = 1.0;
  bool log = false;

  double to_unit(double v) const {
    const double t = log ? std::log10(v) : v;
    return (t - lo) / (hi - lo);
  }
};

Axis make_axis(std::vector<double> values, bool log) {
  Axis ax;
  ax.log = log;
  if (values.empty()) return ax;
  for (double& v : values) v = log ? std::log10(v) : v;
  double lo = *std::min_element(values.begin(), values.end());
  double hi = *std::max_element(values.begin(), values.end());
  if (hi - lo < 1e-12 * std::max(1.0, std::abs(hi))) {
    lo -= 0.5;
    hi += 0.5;
  }
  const double pad = 0.05 * (hi - lo);
  ax.lo = lo - pad;
  ax.hi = hi + pad;
  return ax;
}

// Tick positions in data units.
std::vector<double> ticks(const Axis& ax) {
  std::vector<double> out;
  if (ax.log) {
    const int first = static_cast<int>(std::ceil(ax.lo));
    const int last = static_cast<int>(std::floor(ax.hi));
    const int step = std::max(1, (last - first + 1) / 6);
    for (int e = first; e <= last; e += step) out.push_back(std::pow(10.0, e));
    if (out.size() >= 2) return out;
    out.clear();
  }
  const double lo = ax.log ? std::pow(10.0, ax.lo) : ax.lo;
  const double hi = ax.log ? std::pow(10.0, ax.hi) : ax.hi;
  const double raw = (hi - lo) / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    if (m * mag >= raw) {
      step = m * mag;
      break;
    }
  }
  for (double v = std::ceil(lo / step) * step; v <= hi + 1e-9 * step; v += step) {
    if (!ax.log || v > 0.0) out.push_back(std::abs(v) < 1e-12 * step ? 0.0 : v);
  }
  return out;
}

std::string tick_label(double v) {
  const double a = std::abs(v);
  if (a != 0.0 && (a >= 1e5 || a < 1e-3)) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::scientific, 1);
    return std::string(buf, res.ptr);
  }
  return format_double(std::round(v * 1e6) / 1e6);
}

constexpr const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b"};

}  // namespace

std::string plot_data(const PlotSpec& spec) {
  std::ostringstream out;
  for (std::size_t s = 0; s < spec.series.size(); ++s) {
    if (s > 0) out << "\n\n";
    out << "# " << spec.series[s].label << "\n";
    for (const auto& [x, y] : spec.series[s].points) {
      if (drawable(spec, x, y)) out << format_double(x) << " " << format_double(y) << "\n";
    }
  }
  return out.str();
}

std::string gnuplot_script(const PlotSpec& spec, std::string_view data_file, std::string_view stamp) {
  std::ostringstream out;
  out << "# " << stamp << "\n";
  out << "set terminal svg size 640,420 dynamic\n";
  out << "set output 'plot_gnuplot.svg'\n";
  out << "set title " << quote_gnuplot(spec.title) << "\n";
  out << "set xlabel " << quote_gnuplot(spec.xlabel) << "\n";
  out << "set ylabel " << quote_gnuplot(spec.ylabel) << "\n";
  if (spec.logx) out << "set logscale x\n";
  if (spec.logy) out << "set logscale y\n";
  out << "set key top right\n";
  out << "datafile = " << quote_gnuplot(data_file) << "\n";
  out << "plot ";
  for (std::size_t s = 0; s < spec.series.size(); ++s) {
    if (s > 0) out << ", \\\n     ";
    out << "datafile index " << s << " using 1:2 with linespoints title " << quote_gnuplot(spec.series[s].label);
  }
  if (spec.series.empty()) out << "NaN notitle";
  out << "\n";
  return out.str();
}

std::string render_svg(const PlotSpec& spec, std::string_view stamp) {
  constexpr double width = 640, height = 420;
  constexpr double left = 80, right = 160, top = 40, bottom = 60;
  const double pw = width - left - right;
  const double ph = height - top - bottom;

  std::vector<double> xs, ys;
  for (const auto& s : spec.series) {
    for (const auto& [x, y] : s.points) {
      if (drawable(spec, x, y)) {
        xs.push_back(x);
        ys.push_back(y);
      }
    }
  }
  const Axis ax = make_axis(xs, spec.logx);
  const Axis ay = make_axis(ys, spec.logy);
  auto px = [&](double x) { return left + ax.to_unit(x) * pw; };
  auto py = [&](double y) { return top + (1.0 - ay.to_unit(y)) * ph; };

  std::ostringstream out;
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out << "<!-- " << escape_xml(stamp) << " -->\n";
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" viewBox=\"0 0 " << width << " " << height << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << fixed(left + pw / 2) << "\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">"
      << escape_xml(spec.title) << "</text>\n";
  out << "<rect x=\"" << fixed(left) << "\" y=\"" << fixed(top) << "\" width=\"" << fixed(pw) << "\" height=\""
      << fixed(ph) << "\" fill=\"none\" stroke=\"black\"/>\n";

  for (double t : ticks(ax)) {
    const double x = px(t);
    if (x < left - 0.5 || x > left + pw + 0.5) continue;
    out << "<line x1=\"" << fixed(x) << "\" y1=\"" << fixed(top + ph) << "\" x2=\"" << fixed(x) << "\" y2=\""
        << fixed(top + ph + 5) << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << fixed(x) << "\" y=\"" << fixed(top + ph + 18) << "\" text-anchor=\"middle\">"
        << tick_label(t) << "</text>\n";
  }
  for (double t : ticks(ay)) {
    const double y = py(t);
    if (y < top - 0.5 || y > top + ph + 0.5) continue;
    out << "<line x1=\"" << fixed(left - 5) << "\" y1=\"" << fixed(y) << "\" x2=\"" << fixed(left) << "\" y2=\""
        << fixed(y) << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << fixed(left - 8) << "\" y=\"" << fixed(y + 4) << "\" text-anchor=\"end\">" << tick_label(t)
        << "</text>\n";
  }
  out << "<text x=\"" << fixed(left + pw / 2) << "\" y=\"" << fixed(height - 15)
      << "\" text-anchor=\"middle\">" << escape_xml(spec.xlabel) << (spec.logx ? " (log)" : "") << "</text>\n";
  out << "<text x=\"18\" y=\"" << fixed(top + ph / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
      << fixed(top + ph / 2) << ")\">" << escape_xml(spec.ylabel) << (spec.logy ? " (log)" : "") << "</text>\n";

  for (std::size_t s = 0; s < spec.series.size(); ++s) {
    const char* color = kColors[s % std::size(kColors)];
    std::string path;
    std::string marks;
    for (const auto& [x, y] : spec.series[s].points) {
      if (!drawable(spec, x, y)) continue;
      path += (path.empty() ? "" : " ") + fixed(px(x)) + "," + fixed(py(y));
      marks += "<circle cx=\"" + fixed(px(x)) + "\" cy=\"" + fixed(py(y)) + "\" r=\"2.5\" fill=\"" + color + "\"/>\n";
    }
    if (!path.empty()) {
      out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"" << path << "\"/>\n";
      out << marks;
    }
    const double ly = top + 10 + 18.0 * static_cast<double>(s);
    out << "<line x1=\"" << fixed(left + pw + 12) << "\" y1=\"" << fixed(ly) << "\" x2=\"" << fixed(left + pw + 32)
        << "\" y2=\"" << fixed(ly) << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    out << "<text x=\"" << fixed(left + pw + 38) << "\" y=\"" << fixed(ly + 4) << "\">"
        << escape_xml(spec.series[s].label) << "</text>\n";
  }
  out << "</svg>\n";
  return out.str();
}

}  // namespace sysid
