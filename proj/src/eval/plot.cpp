#include "posefuse/eval/plot.hpp"

#include <algorithm>
#include <limits>

#include <fmt/format.h>

namespace posefuse::eval {

namespace {

std::string escape(const std::string& text) {
  std::string out;
  for (char c : text) {
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

}  // namespace

std::string render_trajectory_svg(std::span<const TrajectorySeries> series, int width, int height) {
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, z0 = x0, z1 = -x0;
  for (const auto& s : series) {
    for (const auto& p : s.points) {
      x0 = std::min(x0, p.x);
      x1 = std::max(x1, p.x);
      z0 = std::min(z0, p.z);
      z1 = std::max(z1, p.z);
    }
  }
  if (!(x0 <= x1)) x0 = z0 = -1.0, x1 = z1 = 1.0;
  const double margin = 40.0;
  const double span_x = std::max(x1 - x0, 1e-9), span_z = std::max(z1 - z0, 1e-9);
  const double scale = std::min((width - 2 * margin) / span_x, (height - 2 * margin - 20.0) / span_z);
  const double off_x = margin + ((width - 2 * margin) - span_x * scale) / 2.0;
  const double off_y = margin + 20.0 + ((height - 2 * margin - 20.0) - span_z * scale) / 2.0;
  auto px = [&](const Translation& p) { return off_x + (p.x - x0) * scale; };
  auto py = [&](const Translation& p) { return off_y + (z1 - p.z) * scale; };

  std::string out = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" viewBox=\"0 0 {0} {1}\">\n"
      "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n",
      width, height);
  out += fmt::format(
      "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" fill=\"#555\">x: {:.1f} .. {:.1f} m, "
      "z: {:.1f} .. {:.1f} m</text>\n",
      margin, height - 12, x0, x1, z0, z1);
  for (std::size_t i = 0; i < series.size(); ++i) {
    const TrajectorySeries& s = series[i];
    if (s.connect) {
      out += fmt::format("<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\" points=\"", escape(s.color));
      for (std::size_t k = 0; k < s.points.size(); ++k) {
        out += fmt::format("{}{:.2f},{:.2f}", k ? " " : "", px(s.points[k]), py(s.points[k]));
      }
      out += "\"/>\n";
    } else {
      for (const auto& p : s.points) {
        out += fmt::format("<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"2\" fill=\"{}\"/>\n", px(p), py(p), escape(s.color));
      }
    }
    const double ly = 18.0 + 16.0 * static_cast<double>(i);
    out += fmt::format("<rect x=\"{}\" y=\"{:.0f}\" width=\"12\" height=\"4\" fill=\"{}\"/>\n", margin, ly - 4,
                       escape(s.color));
    out += fmt::format("<text x=\"{}\" y=\"{:.0f}\" font-family=\"sans-serif\" font-size=\"12\">{}</text>\n",
                       margin + 18, ly, escape(s.label));
  }
  out += "</svg>\n";
  return out;
}

}  // namespace posefuse::eval
