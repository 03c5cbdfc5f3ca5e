#pragma once

#include <span>
#include <string>
#include <vector>

namespace spsgd {

struct PlotSeries {
  std::string label;
  std::vector<double> xs, ys;  // equal length, at least one point
};

enum class AxisScale { linear, log };

struct PlotSpec {
  std::string title;
  std::string x_label, y_label;
  AxisScale x_scale = AxisScale::linear;
  AxisScale y_scale = AxisScale::linear;
};

/// Renders a standalone SVG 1.1 document, 800x600, with axes, tick labels
/// and a legend.  Output bytes are a pure function of the inputs.  Log axes
/// reject non-positive coordinates, naming the offending series and point.
std::string render_svg(const PlotSpec& spec, std::span<const PlotSeries> series);

/// render_svg + write to `path` (parent directories must exist).
void emit_plot(const std::string& path, const PlotSpec& spec,
               std::span<const PlotSeries> series);

}  // namespace spsgd
