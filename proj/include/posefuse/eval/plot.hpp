#pragma once

#include <span>
#include <string>
#include <vector>

#include "posefuse/geometry.hpp"

namespace posefuse::eval {

struct TrajectorySeries {
  std::string label;
  std::string color;  // any SVG colour
  std::vector<Translation> points;
  /// Draw a polyline through the points; otherwise draw dots.
  bool connect = true;
};

/// SVG overlay of the series projected onto the x-z ground plane (x to the
/// right, z up), with a shared scale and a legend.
std::string render_trajectory_svg(std::span<const TrajectorySeries> series, int width = 640, int height = 480);

}  // namespace posefuse::eval
