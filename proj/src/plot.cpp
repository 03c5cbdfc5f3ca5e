#include "spsgd/plot.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "spsgd/util.hpp"

namespace spsgd {
namespace {

constexpr double kWidth = 800.0, kHeight = 600.0;
constexpr double kLeft = 70.0, kRight = 25.0, kTop = 45.0, kBottom = 55.0;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b"};
constexpr int kPaletteSize = 6;

struct Axis {
  AxisScale scale;
  double lo = 0.0, hi = 1.0;  // in transformed coordinates (log10 when log)

  double map(double v, double pix_lo, double pix_hi) const {
    const double t = (scale == AxisScale::log) ? std::log10(v) : v;
    return pix_lo + (t - lo) / (hi - lo) * (pix_hi - pix_lo);
  }
};

Axis fit_axis(AxisScale scale, std::span<const PlotSeries> series, bool use_x,
              const char* axis_name) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (std::size_t s = 0; s < series.size(); ++s) {
    const auto& vals = use_x ? series[s].xs : series[s].ys;
    for (std::size_t i = 0; i < vals.size(); ++i) {
      double v = vals[i];
      if (scale == AxisScale::log && !(v > 0.0)) {
        std::ostringstream msg;
        msg << "render_svg: log " << axis_name << " axis requires positive "
            << "values; series \"" << series[s].label << "\" point " << i
            << " has value " << v;
        throw std::invalid_argument(msg.str());
      }
      if (scale == AxisScale::log) v = std::log10(v);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  if (!(lo <= hi)) throw std::invalid_argument("render_svg: no data points");
  if (hi - lo < 1e-12) {  // degenerate range: pad so markers stay visible
    lo -= (scale == AxisScale::log) ? 0.5 : std::max(1.0, std::abs(lo) * 0.5);
    hi += (scale == AxisScale::log) ? 0.5 : std::max(1.0, std::abs(hi) * 0.5);
  } else {
    const double pad = 0.05 * (hi - lo);
    lo -= pad;
    hi += pad;
  }
  return Axis{scale, lo, hi};
}

std::string tick_text(const Axis& a, double t) {
  return format_sig6(a.scale == AxisScale::log ? std::pow(10.0, t) : t);
}

}  // namespace

std::string render_svg(const PlotSpec& spec,
                       std::span<const PlotSeries> series) {
  if (series.empty())
    throw std::invalid_argument("render_svg: need at least one series");
  for (const auto& s : series) {
    if (s.xs.size() != s.ys.size() || s.xs.empty())
      throw std::invalid_argument(
          "render_svg: series \"" + s.label +
          "\" needs equal, non-zero x/y lengths");
  }

  const Axis ax = fit_axis(spec.x_scale, series, true, "x");
  const Axis ay = fit_axis(spec.y_scale, series, false, "y");
  const double px0 = kLeft, px1 = kWidth - kRight;
  const double py0 = kHeight - kBottom, py1 = kTop;  // y grows upward

  std::ostringstream out;
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" "
         "width=\"800\" height=\"600\" viewBox=\"0 0 800 600\">\n"
      << "<rect x=\"0\" y=\"0\" width=\"800\" height=\"600\" fill=\"white\"/>\n"
      << "<text x=\"400\" y=\"25\" text-anchor=\"middle\" "
         "font-family=\"sans-serif\" font-size=\"16\">"
      << spec.title << "</text>\n";

  // Frame.
  out << "<rect x=\"" << format_sig6(px0) << "\" y=\"" << format_sig6(py1)
      << "\" width=\"" << format_sig6(px1 - px0) << "\" height=\""
      << format_sig6(py0 - py1)
      << "\" fill=\"none\" stroke=\"black\" stroke-width=\"1\"/>\n";

  // Ticks: five per axis, uniform in plot coordinates.
  constexpr int kTicks = 5;
  for (int i = 0; i < kTicks; ++i) {
    const double f = static_cast<double>(i) / (kTicks - 1);
    const double tx = ax.lo + f * (ax.hi - ax.lo);
    const double xpix = px0 + f * (px1 - px0);
    out << "<line x1=\"" << format_sig6(xpix) << "\" y1=\"" << format_sig6(py0)
        << "\" x2=\"" << format_sig6(xpix) << "\" y2=\""
        << format_sig6(py0 + 5) << "\" stroke=\"black\"/>\n"
        << "<text x=\"" << format_sig6(xpix) << "\" y=\""
        << format_sig6(py0 + 20)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"11\">"
        << tick_text(ax, tx) << "</text>\n";
    const double ty = ay.lo + f * (ay.hi - ay.lo);
    const double ypix = py0 + f * (py1 - py0);
    out << "<line x1=\"" << format_sig6(px0 - 5) << "\" y1=\""
        << format_sig6(ypix) << "\" x2=\"" << format_sig6(px0) << "\" y2=\""
        << format_sig6(ypix) << "\" stroke=\"black\"/>\n"
        << "<text x=\"" << format_sig6(px0 - 8) << "\" y=\""
        << format_sig6(ypix + 4)
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" "
           "font-size=\"11\">"
        << tick_text(ay, ty) << "</text>\n";
  }

  // Axis labels.
  out << "<text x=\"" << format_sig6((px0 + px1) / 2) << "\" y=\""
      << format_sig6(kHeight - 12)
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"13\">"
      << spec.x_label << "</text>\n"
      << "<text x=\"18\" y=\"" << format_sig6((py0 + py1) / 2)
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"13\" transform=\"rotate(-90 18 "
      << format_sig6((py0 + py1) / 2) << ")\">" << spec.y_label << "</text>\n";

  // Series: polyline (when more than one point) plus circle markers.
  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* color = kPalette[s % kPaletteSize];
    if (series[s].xs.size() > 1) {
      out << "<polyline fill=\"none\" stroke=\"" << color
          << "\" stroke-width=\"1.5\" points=\"";
      for (std::size_t i = 0; i < series[s].xs.size(); ++i) {
        if (i) out << ' ';
        out << format_sig6(ax.map(series[s].xs[i], px0, px1)) << ','
            << format_sig6(ay.map(series[s].ys[i], py0, py1));
      }
      out << "\"/>\n";
    }
    // Markers: cap the count so dense trajectories stay light-weight.
    const std::size_t n = series[s].xs.size();
    const std::size_t stride = (n > 200) ? (n + 199) / 200 : 1;
    for (std::size_t i = 0; i < n; i += stride) {
      out << "<circle cx=\"" << format_sig6(ax.map(series[s].xs[i], px0, px1))
          << "\" cy=\"" << format_sig6(ay.map(series[s].ys[i], py0, py1))
          << "\" r=\"3\" fill=\"" << color << "\"/>\n";
    }
  }

  // Legend, top-right inside the frame.
  for (std::size_t s = 0; s < series.size(); ++s) {
    const double ly = py1 + 16 + 18 * static_cast<double>(s);
    out << "<rect x=\"" << format_sig6(px1 - 150) << "\" y=\""
        << format_sig6(ly - 9) << "\" width=\"12\" height=\"12\" fill=\""
        << kPalette[s % kPaletteSize] << "\"/>\n"
        << "<text x=\"" << format_sig6(px1 - 133) << "\" y=\""
        << format_sig6(ly + 2)
        << "\" font-family=\"sans-serif\" font-size=\"12\">" << series[s].label
        << "</text>\n";
  }

  out << "</svg>\n";
  return out.str();
}

void emit_plot(const std::string& path, const PlotSpec& spec,
               std::span<const PlotSeries> series) {
  const std::string svg = render_svg(spec, series);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("emit_plot: cannot open " + path);
  f << svg;
  if (!f) throw std::runtime_error("emit_plot: write failed for " + path);
}

}  // namespace spsgd
