#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace sysid {

struct PlotSeries {
  std::string label;
  std::vector<std::pair<double, double>> points;
};

struct PlotSpec {
  std::string title;
  std::string xlabel;
  std::string ylabel;
  bool logx = false;
  bool logy = false;
  std::vector<PlotSeries> series;
};

/// gnuplot data file: one block per series, blocks separated by two blank
/// lines. Points that cannot be drawn (non-finite, or non-positive on a log
/// axis) are dropped.
std::string plot_data(const PlotSpec& spec);

/// gnuplot script reading `data_file` relative to the script's directory.
/// `stamp` is written as a comment line.
std::string gnuplot_script(const PlotSpec& spec, std::string_view data_file, std::string_view stamp);

/// Self-contained SVG rendering of the same plot; `stamp` goes into a comment.
std::string render_svg(const PlotSpec& spec, std::string_view stamp);

}  // namespace sysid
